#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace pqs {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Numeric values mirror the C API status codes in pqs/pqs.h.
enum class ErrorCode : int {
  invalid_argument = 1,
  config = 2,
  io = 3,
  parse = 4,
  fit = 5,
  identifiability = 6,
  conditioning = 7,
  domain = 8,
  internal = 9,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) throw Error(code, what);
}

}  // namespace pqs
