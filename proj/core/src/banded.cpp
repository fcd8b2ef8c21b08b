#include "bstc/banded.hpp"

#include <algorithm>
#include <cmath>

#include "bstc/errors.hpp"

namespace bstc {

BandedSPD::BandedSPD(std::size_t n, std::size_t bandwidth, bool is_factor)
    : n_(n), b_(n == 0 ? 0 : std::min(bandwidth, n - 1)), is_factor_(is_factor), bands_(n * (b_ + 1), 0.0) {}

double BandedSPD::operator()(std::size_t i, std::size_t j) const {
  if (j > i) {
    if (is_factor_) return 0.0;
    std::swap(i, j);
  }
  if (i - j > b_) return 0.0;
  return lower(i, j);
}

Eigen::MatrixXd BandedSPD::to_dense() const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n_, n_);
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = first_in_row(i); j <= i; ++j) {
      m(i, j) = lower(i, j);
      if (!is_factor_) m(j, i) = lower(i, j);
    }
  return m;
}

Eigen::VectorXd BandedSPD::multiply(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  Eigen::VectorXd y = Eigen::VectorXd::Zero(n_);
  for (std::size_t i = 0; i < n_; ++i) {
    y[i] += lower(i, i) * x[i];
    for (std::size_t j = first_in_row(i); j < i; ++j) {
      const double v = lower(i, j);
      y[i] += v * x[j];
      if (!is_factor_) y[j] += v * x[i];
    }
  }
  return y;
}

double BandedSPD::quadratic_form(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  double acc = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    double row = 0.0;
    for (std::size_t j = first_in_row(i); j < i; ++j) row += lower(i, j) * x[j];
    acc += x[i] * (lower(i, i) * x[i] + 2.0 * row);
  }
  return acc;
}

BandedSPD BandedSPD::scaled_plus_identity(double a, double c) const {
  BandedSPD out = *this;
  for (auto& v : out.bands_) v *= a;
  for (std::size_t i = 0; i < n_; ++i) out.lower(i, i) += c;
  return out;
}

BandedSPD BandedSPD::identity(std::size_t n) {
  BandedSPD m(n, 0);
  for (std::size_t i = 0; i < n; ++i) m.lower(i, i) = 1.0;
  return m;
}

BandedSPD BandedSPD::from_dense(const Eigen::Ref<const Eigen::MatrixXd>& m, std::size_t bandwidth) {
  const auto n = static_cast<std::size_t>(m.rows());
  BandedSPD out(n, bandwidth);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = out.first_in_row(i); j <= i; ++j) out.lower(i, j) = m(i, j);
  return out;
}

BandMatrix::BandMatrix(std::size_t n, std::size_t bandwidth)
    : n_(n), b_(n == 0 ? 0 : std::min(bandwidth, n - 1)), data_(n * (2 * b_ + 1), 0.0) {}

double BandMatrix::operator()(std::size_t i, std::size_t j) const {
  if ((i > j ? i - j : j - i) > b_) return 0.0;
  return data_[i * (2 * b_ + 1) + (j + b_ - i)];
}

bool BandMatrix::is_zero() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return v == 0.0; });
}

Eigen::MatrixXd BandMatrix::to_dense() const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n_, n_);
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = first_in_row(i); j <= last_in_row(i); ++j) m(i, j) = (*this)(i, j);
  return m;
}

Eigen::VectorXd BandMatrix::multiply(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  Eigen::VectorXd y = Eigen::VectorXd::Zero(n_);
  for (std::size_t i = 0; i < n_; ++i) {
    double acc = 0.0;
    for (std::size_t j = first_in_row(i); j <= last_in_row(i); ++j) acc += (*this)(i, j) * x[j];
    y[i] = acc;
  }
  return y;
}

Eigen::VectorXd BandMatrix::multiply_transpose(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  Eigen::VectorXd y = Eigen::VectorXd::Zero(n_);
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = first_in_row(i); j <= last_in_row(i); ++j) y[j] += (*this)(i, j) * x[i];
  return y;
}

BandedSPD band_cholesky(const BandedSPD& m) {
  if (m.is_factor()) throw InputError("band_cholesky expects a matrix, not a factor");
  const auto n = m.size();
  const auto b = m.bandwidth();
  BandedSPD L(n, b, /*is_factor=*/true);
  for (std::size_t i = 0; i < n; ++i) {
    const auto i0 = m.first_in_row(i);
    for (std::size_t j = i0; j <= i; ++j) {
      double s = m.lower(i, j);
      const auto k0 = std::max(i0, L.first_in_row(j));
      for (std::size_t k = k0; k < j; ++k) s -= L.lower(i, k) * L.lower(j, k);
      if (j == i) {
        if (!(s > 0.0) || !std::isfinite(s))
          throw NumericalError("not positive definite (pivot " + std::to_string(i) + ")");
        L.lower(i, i) = std::sqrt(s);
      } else {
        L.lower(i, j) = s / L.lower(j, j);
      }
    }
  }
  return L;
}

void solve_lower_in_place(const BandedSPD& L, Eigen::Ref<Eigen::VectorXd> x) {
  const auto n = L.size();
  for (std::size_t i = 0; i < n; ++i) {
    double s = x[i];
    for (std::size_t k = L.first_in_row(i); k < i; ++k) s -= L.lower(i, k) * x[k];
    x[i] = s / L.lower(i, i);
  }
}

void solve_lower_columns_in_place(const BandedSPD& L, Eigen::Ref<Eigen::MatrixXd> x) {
  const auto n = L.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = L.first_in_row(i); k < i; ++k) x.row(i) -= L.lower(i, k) * x.row(k);
    x.row(i) /= L.lower(i, i);
  }
}

void solve_upper_in_place(const BandedSPD& L, Eigen::Ref<Eigen::VectorXd> x) {
  const auto n = L.size();
  for (std::size_t ii = n; ii-- > 0;) {
    double s = x[ii];
    for (std::size_t k = ii + 1; k <= L.last_in_column(ii); ++k) s -= L.lower(k, ii) * x[k];
    x[ii] = s / L.lower(ii, ii);
  }
}

Eigen::VectorXd band_solve(const BandedSPD& factor, const Eigen::Ref<const Eigen::VectorXd>& rhs) {
  Eigen::VectorXd x = rhs;
  solve_lower_in_place(factor, x);
  solve_upper_in_place(factor, x);
  return x;
}

double log_determinant(const BandedSPD& factor) {
  double acc = 0.0;
  for (std::size_t i = 0; i < factor.size(); ++i) acc += std::log(factor.lower(i, i));
  return 2.0 * acc;
}

}  // namespace bstc
