#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace stg {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat4 = Eigen::Matrix4d;

/// Feature dimension: three coordinate differences plus the normal-angle term.
inline constexpr int kFeatureDim = 4;

/// Input file could not be parsed.
class ParseError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// The conjugate gradient solve did not reach its tolerance.
class SolveError : public std::runtime_error {
  public:
    SolveError(const std::string& what, double residual)
        : std::runtime_error(what), residual_(residual) {}
    double residual() const noexcept { return residual_; }

  private:
    double residual_;
};

/// A proximal gradient iterate increased the objective (step size too large).
class StepSizeError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

}  // namespace stg
