#pragma once

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace solvflow {

/// Thrown when two operands do not share a dimension.
class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when an iterative routine fails to converge.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dense real square matrix. Entries are finite and dim() >= 1; every
/// operation that produces a Mat re-checks this.
class Mat {
 public:
  explicit Mat(std::size_t n);
  explicit Mat(Eigen::MatrixXd m);

  static Mat identity(std::size_t n);
  /// E_ij, zero-based indices.
  static Mat unit(std::size_t n, std::size_t i, std::size_t j);
  static Mat diagonal(const std::vector<double>& d);
  static Mat from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Mat from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t dim() const { return static_cast<std::size_t>(m_.rows()); }
  double operator()(std::size_t i, std::size_t j) const { return m_(i, j); }
  const Eigen::MatrixXd& eigen() const { return m_; }

  Mat transpose() const;
  double trace() const { return m_.trace(); }
  std::vector<std::vector<double>> rows() const;

  friend Mat operator+(const Mat& a, const Mat& b);
  friend Mat operator-(const Mat& a, const Mat& b);
  friend Mat operator*(const Mat& a, const Mat& b);
  friend Mat operator*(double s, const Mat& a);
  friend Mat operator*(const Mat& a, double s) { return s * a; }
  friend Mat operator/(const Mat& a, double s);
  friend Mat operator-(const Mat& a);

  bool operator==(const Mat& other) const { return m_ == other.m_; }

 private:
  Eigen::MatrixXd m_;
};

void require_same_dim(const Mat& x, const Mat& y, const char* what);

/// XY - YX.
Mat commutator(const Mat& x, const Mat& y);
/// (A + A^t) / 2.
Mat sym_part(const Mat& a);
/// (A - A^t) / 2.
Mat skew_part(const Mat& a);

/// tr(X Y^t) = sum_ij X_ij Y_ij.
double frob_inner(const Mat& x, const Mat& y);
double frob_norm(const Mat& x);
double frob_norm_sq(const Mat& x);
/// Largest singular value.
double op_norm(const Mat& x);

double determinant(const Mat& a);
Mat inverse(const Mat& a);
/// 2-norm condition number via singular values (infinity when singular).
double condition_number(const Mat& a);
Mat power(const Mat& a, unsigned k);

/// Multiset of eigenvalues in canonical order: ascending real part, with real
/// parts equal up to a relative 1e-9 treated as tied and ordered by imaginary
/// part. Ordering is invariant under positive scaling.
class Spectrum {
 public:
  Spectrum() = default;
  explicit Spectrum(std::vector<std::complex<double>> values);

  const std::vector<std::complex<double>>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  const std::complex<double>& operator[](std::size_t i) const { return values_[i]; }
  /// Largest modulus, 0 for an empty spectrum.
  double scale() const;
  Spectrum scaled(double s) const;

 private:
  std::vector<std::complex<double>> values_;
};

/// Entrywise max |a_i - b_i| of canonical spectra.
double spectrum_distance(const Spectrum& a, const Spectrum& b);

/// Eigenvalues with algebraic multiplicity. Throws ConvergenceError when the
/// QR iteration fails or the product check against det(A) is off by more than
/// 1e-8 relative to max(|det A|, ||A||^n).
Spectrum eigenvalues(const Mat& a);

enum class MatrixClass { Skew, Normal, Nilpotent, Generic };

std::string to_string(MatrixClass c);

inline constexpr double kDefaultTol = 1e-8;

bool is_skew(const Mat& a, double tol = kDefaultTol);
bool is_normal(const Mat& a, double tol = kDefaultTol);
/// ||A^n|| <= tol ||A||^n.
bool is_nilpotent(const Mat& a, double tol = kDefaultTol);

/// Most specific of Skew, Normal, Nilpotent, Generic; the zero matrix is Skew.
MatrixClass classify_matrix(const Mat& a, double tol = kDefaultTol);

}  // namespace solvflow
