#include "polyfactor/gaussian/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace polyfactor {

SpdFactor::SpdFactor(const Matrix& m, ErrorCode code, const std::string& what) : llt_(m) {
  if (llt_.info() != Eigen::Success) {
    fail(code, what + ": matrix is not positive definite");
  }
  const Matrix l = llt_.matrixL();
  for (Eigen::Index i = 0; i < l.rows(); ++i) {
    if (!(l(i, i) * l(i, i) > kMinPivot)) {
      fail(code, what + ": matrix is not positive definite (pivot " + std::to_string(l(i, i) * l(i, i)) + ")");
    }
  }
}

bool SpdFactor::is_spd(const Matrix& m) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) {
    return false;
  }
  const Matrix l = llt.matrixL();
  for (Eigen::Index i = 0; i < l.rows(); ++i) {
    if (!(l(i, i) * l(i, i) > kMinPivot)) {
      return false;
    }
  }
  return true;
}

Matrix SpdFactor::inverse() const { return llt_.solve(Matrix::Identity(llt_.rows(), llt_.rows())); }

double SpdFactor::log_det() const {
  const Matrix l = llt_.matrixL();
  return 2.0 * l.diagonal().array().log().sum();
}

Matrix block(const Matrix& m, const std::vector<std::size_t>& rows, const std::vector<std::size_t>& cols) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          m(static_cast<Eigen::Index>(rows[i]), static_cast<Eigen::Index>(cols[j]));
    }
  }
  return out;
}

Vector select(const Vector& v, const std::vector<std::size_t>& idx) {
  Vector out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out(static_cast<Eigen::Index>(i)) = v(static_cast<Eigen::Index>(idx[i]));
  }
  return out;
}

Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

double log_add_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) {
    return b;
  }
  if (b == -std::numeric_limits<double>::infinity()) {
    return a;
  }
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

}  // namespace polyfactor
