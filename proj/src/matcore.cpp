#include "solvflow/matcore.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace solvflow {

namespace {

void check_square_finite(const Eigen::MatrixXd& m) {
  if (m.rows() < 1 || m.rows() != m.cols()) {
    throw std::invalid_argument(
        fmt::format("Mat must be square with dim >= 1 (got {}x{})", m.rows(), m.cols()));
  }
  if (!m.allFinite()) {
    throw std::domain_error("Mat entries must be finite");
  }
}

}  // namespace

Mat::Mat(std::size_t n) : m_(Eigen::MatrixXd::Zero(n, n)) { check_square_finite(m_); }

Mat::Mat(Eigen::MatrixXd m) : m_(std::move(m)) { check_square_finite(m_); }

Mat Mat::identity(std::size_t n) { return Mat(Eigen::MatrixXd::Identity(n, n)); }

Mat Mat::unit(std::size_t n, std::size_t i, std::size_t j) {
  if (i >= n || j >= n) throw std::out_of_range("Mat::unit index out of range");
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  m(i, j) = 1.0;
  return Mat(std::move(m));
}

Mat Mat::diagonal(const std::vector<double>& d) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
  return Mat(std::move(m));
}

Mat Mat::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  std::vector<std::vector<double>> v;
  for (const auto& r : rows) v.emplace_back(r);
  return from_rows(v);
}

Mat Mat::from_rows(const std::vector<std::vector<double>>& rows) {
  const auto n = rows.size();
  Eigen::MatrixXd m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    if (rows[i].size() != n) {
      throw std::invalid_argument(
          fmt::format("row {} has {} entries, expected {}", i, rows[i].size(), n));
    }
    for (std::size_t j = 0; j < n; ++j) m(i, j) = rows[i][j];
  }
  return Mat(std::move(m));
}

Mat Mat::transpose() const { return Mat(Eigen::MatrixXd(m_.transpose())); }

std::vector<std::vector<double>> Mat::rows() const {
  std::vector<std::vector<double>> out(dim(), std::vector<double>(dim()));
  for (std::size_t i = 0; i < dim(); ++i)
    for (std::size_t j = 0; j < dim(); ++j) out[i][j] = m_(i, j);
  return out;
}

void require_same_dim(const Mat& x, const Mat& y, const char* what) {
  if (x.dim() != y.dim()) {
    throw DimensionMismatch(fmt::format("{}: dimension mismatch ({} vs {})", what, x.dim(), y.dim()));
  }
}

Mat operator+(const Mat& a, const Mat& b) {
  require_same_dim(a, b, "operator+");
  return Mat(Eigen::MatrixXd(a.m_ + b.m_));
}

Mat operator-(const Mat& a, const Mat& b) {
  require_same_dim(a, b, "operator-");
  return Mat(Eigen::MatrixXd(a.m_ - b.m_));
}

Mat operator*(const Mat& a, const Mat& b) {
  require_same_dim(a, b, "operator*");
  return Mat(Eigen::MatrixXd(a.m_ * b.m_));
}

Mat operator*(double s, const Mat& a) { return Mat(Eigen::MatrixXd(s * a.m_)); }

Mat operator/(const Mat& a, double s) { return Mat(Eigen::MatrixXd(a.m_ / s)); }

Mat operator-(const Mat& a) { return Mat(Eigen::MatrixXd(-a.m_)); }

Mat commutator(const Mat& x, const Mat& y) {
  require_same_dim(x, y, "commutator");
  const auto& X = x.eigen();
  const auto& Y = y.eigen();
  return Mat(Eigen::MatrixXd(X * Y - Y * X));
}

Mat sym_part(const Mat& a) {
  const auto& A = a.eigen();
  return Mat(Eigen::MatrixXd(0.5 * (A + A.transpose())));
}

Mat skew_part(const Mat& a) {
  const auto& A = a.eigen();
  return Mat(Eigen::MatrixXd(0.5 * (A - A.transpose())));
}

double frob_inner(const Mat& x, const Mat& y) {
  require_same_dim(x, y, "frob_inner");
  return x.eigen().cwiseProduct(y.eigen()).sum();
}

double frob_norm_sq(const Mat& x) { return x.eigen().squaredNorm(); }

double frob_norm(const Mat& x) { return x.eigen().norm(); }

double op_norm(const Mat& x) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(x.eigen());
  return svd.singularValues()(0);
}

double determinant(const Mat& a) { return a.eigen().fullPivLu().determinant(); }

Mat inverse(const Mat& a) {
  Eigen::FullPivLU<Eigen::MatrixXd> lu(a.eigen());
  if (!lu.isInvertible()) throw std::domain_error("inverse: matrix is singular");
  return Mat(Eigen::MatrixXd(lu.inverse()));
}

double condition_number(const Mat& a) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a.eigen());
  const auto& s = svd.singularValues();
  const double smin = s(s.size() - 1);
  if (smin == 0.0) return std::numeric_limits<double>::infinity();
  return s(0) / smin;
}

Mat power(const Mat& a, unsigned k) {
  Eigen::MatrixXd result = Eigen::MatrixXd::Identity(a.dim(), a.dim());
  Eigen::MatrixXd base = a.eigen();
  while (k > 0) {
    if (k & 1U) result = result * base;
    base = base * base;
    k >>= 1U;
  }
  return Mat(std::move(result));
}

Spectrum::Spectrum(std::vector<std::complex<double>> values) : values_(std::move(values)) {
  std::sort(values_.begin(), values_.end(), [](const auto& a, const auto& b) {
    return a.real() < b.real() || (a.real() == b.real() && a.imag() < b.imag());
  });
  // Merge runs of nearly-equal real parts so that conjugate pairs and
  // repeated eigenvalues do not get their order decided by rounding noise.
  const double tie = 1e-9 * std::max(scale(), std::numeric_limits<double>::min());
  std::size_t start = 0;
  while (start < values_.size()) {
    std::size_t end = start + 1;
    while (end < values_.size() && values_[end].real() - values_[end - 1].real() <= tie) ++end;
    std::sort(values_.begin() + static_cast<std::ptrdiff_t>(start),
              values_.begin() + static_cast<std::ptrdiff_t>(end),
              [](const auto& a, const auto& b) { return a.imag() < b.imag(); });
    start = end;
  }
}

double Spectrum::scale() const {
  double s = 0.0;
  for (const auto& v : values_) s = std::max(s, std::abs(v));
  return s;
}

Spectrum Spectrum::scaled(double s) const {
  std::vector<std::complex<double>> v = values_;
  for (auto& x : v) x *= s;
  return Spectrum(std::move(v));
}

double spectrum_distance(const Spectrum& a, const Spectrum& b) {
  if (a.size() != b.size()) throw DimensionMismatch("spectrum_distance: size mismatch");
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

Spectrum eigenvalues(const Mat& a) {
  const std::size_t n = a.dim();
  Eigen::EigenSolver<Eigen::MatrixXd> solver(a.eigen(), /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) {
    throw ConvergenceError("eigenvalues: QR iteration did not converge");
  }
  std::vector<std::complex<double>> vals(n);
  std::complex<double> product = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    vals[i] = solver.eigenvalues()(static_cast<Eigen::Index>(i));
    product *= vals[i];
  }
  const double det = determinant(a);
  const double scale =
      std::max(std::abs(det), std::pow(frob_norm(a), static_cast<double>(n)));
  if (std::abs(product - det) > 1e-8 * scale) {
    throw ConvergenceError(
        fmt::format("eigenvalues: det check failed (prod={}, det={})", product.real(), det));
  }
  return Spectrum(std::move(vals));
}

std::string to_string(MatrixClass c) {
  switch (c) {
    case MatrixClass::Skew: return "Skew";
    case MatrixClass::Normal: return "Normal";
    case MatrixClass::Nilpotent: return "Nilpotent";
    case MatrixClass::Generic: return "Generic";
  }
  return "?";
}

bool is_skew(const Mat& a, double tol) {
  const double na = frob_norm(a);
  if (na == 0.0) return true;
  return (a.eigen() + a.eigen().transpose()).norm() <= tol * na;
}

bool is_normal(const Mat& a, double tol) {
  const double na2 = frob_norm_sq(a);
  if (na2 == 0.0) return true;
  return frob_norm(commutator(a, a.transpose())) <= tol * na2;
}

bool is_nilpotent(const Mat& a, double tol) {
  const double na = frob_norm(a);
  if (na == 0.0) return true;
  // Normalise first so that ||A||^n neither overflows nor underflows.
  const Mat b = a / na;
  return frob_norm(power(b, static_cast<unsigned>(a.dim()))) <= tol;
}

MatrixClass classify_matrix(const Mat& a, double tol) {
  if (tol <= 0.0) throw std::invalid_argument("classify_matrix: tol must be positive");
  if (is_skew(a, tol)) return MatrixClass::Skew;
  if (is_normal(a, tol)) return MatrixClass::Normal;
  if (is_nilpotent(a, tol)) return MatrixClass::Nilpotent;
  return MatrixClass::Generic;
}

}  // namespace solvflow
