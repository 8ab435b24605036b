#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace mlrfit {

// Row-major to match the on-disk DMAT layout; all numerics are double.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Structural variant of an MLR matrix.
enum class Kind { general, symmetric, psd };

/// Error categories raised by the library. Each failure names the first
/// violated contract in its message.
enum class Errc {
  shape_mismatch,
  not_refinement,
  bad_permutation,
  symmetry_violation,
  dimension_mismatch,
  rank_too_large,
  not_symmetric,
  convergence_failure,
  non_finite_input,
  no_feasible_exchange,
  eigen_failure,
  svd_failure,
  degenerate_spectrum,
  unsupported_kind,
  io_error,
  invalid_argument,
};

class MlrError : public std::runtime_error {
 public:
  MlrError(Errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& msg) {
  throw MlrError(code, msg);
}

inline void require(bool cond, Errc code, const std::string& msg) {
  if (!cond) fail(code, msg);
}

inline const char* to_string(Kind kind) {
  switch (kind) {
    case Kind::general: return "general";
    case Kind::symmetric: return "symmetric";
    case Kind::psd: return "psd";
  }
  return "general";
}

}  // namespace mlrfit
