#ifndef POLYFACTOR_GAUSSIAN_LINALG_HPP
#define POLYFACTOR_GAUSSIAN_LINALG_HPP

#include <Eigen/Dense>
#include <numbers>
#include <string>
#include <vector>

#include "polyfactor/core/error.hpp"

namespace polyfactor {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;  // ln 2π
/// Smallest admissible Cholesky pivot (and covariance eigenvalue).
inline constexpr double kMinPivot = 1e-10;

/// Cholesky factorization of a symmetric matrix that must be positive definite.
///
/// Throws `code` with `what` in the message when a pivot falls below kMinPivot.
class SpdFactor {
 public:
  SpdFactor() = default;
  SpdFactor(const Matrix& m, ErrorCode code, const std::string& what);

  [[nodiscard]] static bool is_spd(const Matrix& m);

  [[nodiscard]] Vector solve(const Vector& b) const { return llt_.solve(b); }
  [[nodiscard]] Matrix solve(const Matrix& b) const { return llt_.solve(b); }
  [[nodiscard]] Matrix inverse() const;
  [[nodiscard]] double log_det() const;
  /// Lower-triangular L with LLᵀ = m.
  [[nodiscard]] Matrix lower() const { return llt_.matrixL(); }
  /// Solves Lᵀx = z (maps white noise to a draw with covariance m⁻¹).
  [[nodiscard]] Vector solve_upper(const Vector& z) const { return llt_.matrixU().solve(z); }
  [[nodiscard]] Eigen::Index size() const { return llt_.rows(); }

 private:
  Eigen::LLT<Matrix> llt_;
};

/// Rows/columns of `m` selected by `idx`.
Matrix block(const Matrix& m, const std::vector<std::size_t>& rows, const std::vector<std::size_t>& cols);
Vector select(const Vector& v, const std::vector<std::size_t>& idx);

/// Symmetric part, (m + mᵀ)/2.
Matrix symmetrized(const Matrix& m);

double log_add_exp(double a, double b);

}  // namespace polyfactor

#endif
