#pragma once

#include "types.hpp"

namespace pqs {

enum Axis : int { kX = 0, kY = 1, kZ = 2 };

/// Gaussian description of the collective f=1 spin.
///
/// `mean` and `cov` are in spins and spins^2. `n_atoms` is the expected atom
/// number loaded into the trap; `coherence_factor` is the accumulated decay
/// of the mean spin, so `coherence_factor * n_atoms` atoms still contribute
/// to the coherence.
struct GaussianSpinState {
  Vec3 mean = Vec3::Zero();
  Mat3 cov = Mat3::Zero();
  double n_atoms = 0.0;
  double coherence_factor = 1.0;

  /// Atoms still contributing coherently.
  double effective_atoms() const { return coherence_factor * n_atoms; }

  /// (y, z) block of the covariance.
  Mat2 planar_cov() const { return cov.block<2, 2>(kY, kY); }
  Vec2 planar_mean() const { return mean.segment<2>(kY); }
};

struct DecoherenceParams {
  double eta_per_photon = 3e-10;  // coherence loss per scattered probe photon
  double p_return = 0.55;         // scattered atoms that return to f=1
  double eta_dec = 0.93;          // dephasing survival over one window

  void validate() const;
};

/// Poissonian coherent spin state polarized along +y.
GaussianSpinState pcss_new(double n_atoms);

/// Coherent spin state with a deterministic atom number, polarized along +y.
GaussianSpinState css_new(double n_atoms);

/// Larmor precession about x: F_y' = F_y cos(phi) + F_z sin(phi),
/// F_z' = -F_y sin(phi) + F_z cos(phi).
GaussianSpinState rotate_about_x(const GaussianSpinState& state, double phi);

/// Rotation matrix used by rotate_about_x.
Mat3 x_rotation(double phi);

/// Off-resonant scattering of `n_photons`: coherence decays by
/// d = exp(-eta * n_photons).
GaussianSpinState apply_scattering(const GaussianSpinState& state, double n_photons,
                                   const DecoherenceParams& params);

/// Dephasing by a survival factor eta_dec in (0, 1].
GaussianSpinState apply_dephasing(const GaussianSpinState& state, double eta_dec);

/// Generic loss channel with survival d in (0, 1]. The mean is scaled by d
/// and each variance relaxes as d^2 v + d (1 - d) n_eff / 2 (binomial
/// thinning of n_eff = coherence_factor * n_atoms atoms).
GaussianSpinState apply_decay(const GaussianSpinState& state, double d);

/// Measurement back-action of a QND probe of F_z carrying `n_photons`: a
/// random rotation about z with variance g^2 n / 4, to first order.
GaussianSpinState backaction_inject(const GaussianSpinState& state, double g,
                                    double n_photons);

/// Smallest relative slack of the three cyclic Robertson products
/// cov[i,i] cov[j,j] - mean[k]^2 / 4, each normalised by max(lhs, rhs).
/// Negative when violated.
double robertson_slack(const GaussianSpinState& state);

bool satisfies_robertson(const GaussianSpinState& state, double rel_tol = 1e-9);

/// Smallest eigenvalue of cov, relative to its trace (0 for a zero matrix).
double relative_min_eigenvalue(const Mat3& cov);

}  // namespace pqs
