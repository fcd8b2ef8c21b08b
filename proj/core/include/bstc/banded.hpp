#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace bstc {

/// Symmetric positive-definite matrix, or its lower Cholesky factor, stored
/// as the diagonal plus `bandwidth` sub-diagonals. Entry (i, j) with
/// i - bandwidth <= j <= i lives at bands_[i * (b + 1) + (i - j)].
class BandedSPD {
 public:
  BandedSPD() = default;
  BandedSPD(std::size_t n, std::size_t bandwidth, bool is_factor = false);

  std::size_t size() const { return n_; }
  std::size_t bandwidth() const { return b_; }
  bool is_factor() const { return is_factor_; }

  /// Read access to any entry. For a symmetric matrix (i, j) and (j, i)
  /// coincide; for a factor the strict upper triangle is zero.
  double operator()(std::size_t i, std::size_t j) const;
  /// Lower-band entry, i - bandwidth <= j <= i.
  double& lower(std::size_t i, std::size_t j) { return bands_[i * (b_ + 1) + (i - j)]; }
  double lower(std::size_t i, std::size_t j) const { return bands_[i * (b_ + 1) + (i - j)]; }

  std::size_t first_in_row(std::size_t i) const { return i > b_ ? i - b_ : 0; }
  std::size_t last_in_column(std::size_t j) const { return std::min(n_ - 1, j + b_); }

  Eigen::MatrixXd to_dense() const;
  /// y = M x (symmetric product, or L x for a factor).
  Eigen::VectorXd multiply(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  /// x' M x for a symmetric matrix.
  double quadratic_form(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  /// Elementwise a * this + c * I.
  BandedSPD scaled_plus_identity(double a, double c) const;

  static BandedSPD identity(std::size_t n);
  /// Lower band of a dense symmetric matrix.
  static BandedSPD from_dense(const Eigen::Ref<const Eigen::MatrixXd>& m, std::size_t bandwidth);

 private:
  std::size_t n_ = 0;
  std::size_t b_ = 0;
  bool is_factor_ = false;
  std::vector<double> bands_;
};

/// General square band matrix with equal lower and upper bandwidth; used for
/// the non-symmetric off-diagonal blocks of block-tridiagonal precisions.
class BandMatrix {
 public:
  BandMatrix() = default;
  BandMatrix(std::size_t n, std::size_t bandwidth);

  std::size_t size() const { return n_; }
  std::size_t bandwidth() const { return b_; }

  double operator()(std::size_t i, std::size_t j) const;
  double& at(std::size_t i, std::size_t j) { return data_[i * (2 * b_ + 1) + (j + b_ - i)]; }

  std::size_t first_in_row(std::size_t i) const { return i > b_ ? i - b_ : 0; }
  std::size_t last_in_row(std::size_t i) const { return std::min(n_ - 1, i + b_); }

  bool is_zero() const;
  Eigen::MatrixXd to_dense() const;
  Eigen::VectorXd multiply(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  Eigen::VectorXd multiply_transpose(const Eigen::Ref<const Eigen::VectorXd>& x) const;

 private:
  std::size_t n_ = 0;
  std::size_t b_ = 0;
  std::vector<double> data_;
};

/// Lower Cholesky factor L with m = L L'. Throws NumericalError
/// "not positive definite" on a non-positive pivot.
BandedSPD band_cholesky(const BandedSPD& m);

/// Solve L x = rhs in place (L a factor); the columns variant handles a
/// matrix of right-hand sides.
void solve_lower_in_place(const BandedSPD& factor, Eigen::Ref<Eigen::VectorXd> rhs);
void solve_lower_columns_in_place(const BandedSPD& factor, Eigen::Ref<Eigen::MatrixXd> rhs);
/// Solve L' x = rhs in place.
void solve_upper_in_place(const BandedSPD& factor, Eigen::Ref<Eigen::VectorXd> rhs);

/// m^{-1} rhs through the band factor.
Eigen::VectorXd band_solve(const BandedSPD& factor, const Eigen::Ref<const Eigen::VectorXd>& rhs);
/// log det(L L') = 2 sum log L_ii.
double log_determinant(const BandedSPD& factor);

}  // namespace bstc
