#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "solvflow/flow.hpp"
#include "solvflow/matcore.hpp"

namespace solvflow {

struct StructureEntry {
  std::size_t i;
  std::size_t j;
  std::size_t k;
  double value;
};

/// Lie bracket on R^m with orthonormal basis e_0..e_{m-1}:
/// mu(e_i, e_j) = sum_k c(i, j, k) e_k. Construction checks antisymmetry and
/// that the Jacobi residual is <= 1e-10 (max |c|)^2.
class MetricLieAlgebra {
 public:
  MetricLieAlgebra(std::size_t dim, std::vector<double> constants);

  /// Entries with i < j; the (j, i) half is filled by antisymmetry.
  static MetricLieAlgebra from_entries(std::size_t dim, const std::vector<StructureEntry>& entries);

  std::size_t dim() const { return m_; }
  double c(std::size_t i, std::size_t j, std::size_t k) const { return c_[(i * m_ + j) * m_ + k]; }
  const std::vector<double>& constants() const { return c_; }
  /// Nonzero entries with i < j.
  std::vector<StructureEntry> entries() const;

  Eigen::VectorXd bracket(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const;
  /// Matrix of ad(e_i).
  Eigen::MatrixXd ad(std::size_t i) const;

  double max_abs() const;
  /// Largest |Jacobi(e_i, e_j, e_k)| component.
  double jacobi_residual() const;
  /// ||mu||^2 = sum over ordered pairs (i, j) of ||mu(e_i, e_j)||^2.
  double norm_sq() const;
  bool is_nilpotent() const;
  MetricLieAlgebra scaled(double s) const;

 private:
  std::size_t m_;
  std::vector<double> c_;
};

/// mu_A on R^{n+1}: mu(e_0, e_i) = A e_i, the span of e_1..e_n abelian.
MetricLieAlgebra mu_of_A(const Mat& a);

/// Multiplies ad(e_0) by alpha (the rescaled bracket [e_0, X]_alpha).
MetricLieAlgebra scale_ad_e0(const MetricLieAlgebra& g, double alpha);

/// Block formula diag(-tr(S(A)^2), 1/2 [A,A^t] - tr(A) S(A)).
Mat ricci_operator_muA(const Mat& a);

/// Ric = M - 1/2 B - S(ad H) for an arbitrary metric Lie algebra.
Mat ricci_operator_general(const MetricLieAlgebra& g);

/// R(i, j, k, l) = <R(e_i, e_j) e_k, e_l> with R(x,y) = [D_x, D_y] - D_[x,y]
/// and the Levi-Civita connection D_x y = 1/2 (mu(x,y) - ad_x^t y - ad_y^t x).
class RiemannTensor {
 public:
  explicit RiemannTensor(const MetricLieAlgebra& g);

  std::size_t dim() const { return m_; }
  double operator()(std::size_t i, std::size_t j, std::size_t k, std::size_t l) const {
    return r_[((i * m_ + j) * m_ + k) * m_ + l];
  }
  /// Frobenius norm over all four indices.
  double norm() const;
  /// Ric(e_j, e_k) = sum_i R(i, j, k, i).
  Mat ricci() const;
  /// <R(x,y)y, x> / (|x|^2 |y|^2 - <x,y>^2); throws std::domain_error when
  /// the Gram determinant is <= 1e-12 |x|^2 |y|^2.
  double sectional(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const;
  /// Largest |first Bianchi sum| and largest deviation from the pair
  /// symmetries, both absolute.
  double bianchi_residual() const;
  double symmetry_residual() const;

 private:
  std::size_t m_;
  std::vector<double> r_;
};

double sectional_curvature(const MetricLieAlgebra& g, const Eigen::VectorXd& x, const Eigen::VectorXd& y);

struct SectionalRange {
  double min = 0;
  double max = 0;
  std::uint64_t seed = 0;
  std::size_t planes = 0;
};

/// Haar-uniform random 2-planes (orthonormalised Gaussian pairs) from a fixed
/// seed; the extreme samples are then polished by projected gradient ascent
/// so thin positive or negative regions are not missed.
SectionalRange sample_sectional(const RiemannTensor& r, std::uint64_t seed, std::size_t planes = 1000);

struct HeintzeResult {
  bool condA = false;
  bool condB = false;
  bool condC = false;
  bool negative = false;
  /// Sign s of the unit vector s e_0 the conditions were evaluated for.
  int sign = 1;
  /// A positive-definiteness test came out semidefinite within threshold.
  bool marginal = false;
};

/// Heintze's conditions for mu_A: (A) A invertible, (B) D0 = S(sA) positive
/// definite, (C) D0^2 + [D0, S0] positive definite with S0 the skew part of sA.
/// Both signs s = +1, -1 are tried and the better one reported.
HeintzeResult heintze_check(const Mat& a);

/// A invertible and all eigenvalue real parts of one strict sign.
bool admits_negative_curvature(const Mat& a);

struct CurvatureReport {
  Mat ricci_op = Mat(1);
  double scalar = 0;
  double riem_norm = 0;
  double sectional_min = 0;
  double sectional_max = 0;
  bool flat = false;
  std::uint64_t seed = 0;
  std::size_t planes = 0;
  std::optional<HeintzeResult> heintze;
};

CurvatureReport curvature_report(const MetricLieAlgebra& g, std::uint64_t seed = 0,
                                 std::size_t planes = 1000);
/// Same, for mu_A, including the Heintze conditions.
CurvatureReport curvature_report(const Mat& a, std::uint64_t seed = 0, std::size_t planes = 1000);

struct Type3Sample {
  double t;
  double riem_norm;
  double t_riem;
};

struct Type3Report {
  double sup_tC = 0;
  std::vector<Type3Sample> samples;
};

/// sup over samples with t >= t1 of t ||Riem(mu_A(t))||. Refuses (throws
/// std::domain_error) when tr(A0^2) < 0, where no Type-III bound is known.
Type3Report type3_monitor(const Trajectory& traj, double t1 = 0.1);

}  // namespace solvflow
