#include "solvflow/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>

namespace solvflow {

using Eigen::MatrixXd;
using Eigen::VectorXd;

MetricLieAlgebra::MetricLieAlgebra(std::size_t dim, std::vector<double> constants)
    : m_(dim), c_(std::move(constants)) {
  if (m_ == 0) throw std::invalid_argument("MetricLieAlgebra: dimension must be positive");
  if (c_.size() != m_ * m_ * m_) {
    throw std::invalid_argument(
        fmt::format("MetricLieAlgebra: expected {} constants, got {}", m_ * m_ * m_, c_.size()));
  }
  for (double v : c_) {
    if (!std::isfinite(v)) throw std::domain_error("MetricLieAlgebra: non-finite structure constant");
  }
  for (std::size_t i = 0; i < m_; ++i)
    for (std::size_t j = 0; j < m_; ++j)
      for (std::size_t k = 0; k < m_; ++k)
        if (c(i, j, k) != -c(j, i, k)) {
          throw std::invalid_argument(
              fmt::format("MetricLieAlgebra: c[{}][{}][{}] breaks antisymmetry", i, j, k));
        }
  const double scale = max_abs();
  const double jac = jacobi_residual();
  if (jac > 1e-10 * scale * scale) {
    throw std::invalid_argument(fmt::format("MetricLieAlgebra: Jacobi identity fails (residual {:.3e})", jac));
  }
}

MetricLieAlgebra MetricLieAlgebra::from_entries(std::size_t dim, const std::vector<StructureEntry>& entries) {
  std::vector<double> c(dim * dim * dim, 0.0);
  for (const auto& e : entries) {
    if (e.i >= dim || e.j >= dim || e.k >= dim) {
      throw std::invalid_argument(fmt::format("structure constant index ({}, {}, {}) out of range", e.i, e.j, e.k));
    }
    if (e.i >= e.j) {
      throw std::invalid_argument(fmt::format("structure constant ({}, {}, {}) needs i < j", e.i, e.j, e.k));
    }
    c[(e.i * dim + e.j) * dim + e.k] = e.value;
    c[(e.j * dim + e.i) * dim + e.k] = -e.value;
  }
  return MetricLieAlgebra(dim, std::move(c));
}

std::vector<StructureEntry> MetricLieAlgebra::entries() const {
  std::vector<StructureEntry> out;
  for (std::size_t i = 0; i < m_; ++i)
    for (std::size_t j = i + 1; j < m_; ++j)
      for (std::size_t k = 0; k < m_; ++k)
        if (c(i, j, k) != 0.0) out.push_back({i, j, k, c(i, j, k)});
  return out;
}

VectorXd MetricLieAlgebra::bracket(const VectorXd& x, const VectorXd& y) const {
  VectorXd out = VectorXd::Zero(static_cast<Eigen::Index>(m_));
  for (std::size_t i = 0; i < m_; ++i)
    for (std::size_t j = 0; j < m_; ++j) {
      const double w = x(i) * y(j);
      if (w == 0.0) continue;
      for (std::size_t k = 0; k < m_; ++k) out(k) += w * c(i, j, k);
    }
  return out;
}

MatrixXd MetricLieAlgebra::ad(std::size_t i) const {
  MatrixXd out(m_, m_);
  for (std::size_t j = 0; j < m_; ++j)
    for (std::size_t k = 0; k < m_; ++k) out(k, j) = c(i, j, k);
  return out;
}

double MetricLieAlgebra::max_abs() const {
  double s = 0.0;
  for (double v : c_) s = std::max(s, std::abs(v));
  return s;
}

double MetricLieAlgebra::jacobi_residual() const {
  // [e_i,[e_j,e_l]] + [e_j,[e_l,e_i]] + [e_l,[e_i,e_j]], component p.
  double worst = 0.0;
  for (std::size_t i = 0; i < m_; ++i)
    for (std::size_t j = i + 1; j < m_; ++j)
      for (std::size_t l = j + 1; l < m_; ++l)
        for (std::size_t p = 0; p < m_; ++p) {
          double s = 0.0;
          for (std::size_t q = 0; q < m_; ++q) {
            s += c(j, l, q) * c(i, q, p) + c(l, i, q) * c(j, q, p) + c(i, j, q) * c(l, q, p);
          }
          worst = std::max(worst, std::abs(s));
        }
  return worst;
}

double MetricLieAlgebra::norm_sq() const {
  double s = 0.0;
  for (double v : c_) s += v * v;
  return s;
}

bool MetricLieAlgebra::is_nilpotent() const {
  // Engel: nilpotent iff every ad(x) is nilpotent; for a Lie algebra it is
  // enough that the lower central series terminates, checked via products of
  // ad(e_i) of length m.
  std::vector<MatrixXd> words{MatrixXd::Identity(m_, m_)};
  for (std::size_t len = 0; len < m_; ++len) {
    std::vector<MatrixXd> next;
    for (const auto& w : words)
      for (std::size_t i = 0; i < m_; ++i) {
        MatrixXd p = ad(i) * w;
        if (p.norm() > 1e-12 * std::max(1.0, std::pow(max_abs(), static_cast<double>(len + 1)))) {
          next.push_back(std::move(p));
        }
      }
    if (next.empty()) return true;
    words = std::move(next);
    if (words.size() > 4096) {
      // Span of the words is all that matters; compress to a basis.
      MatrixXd stacked(static_cast<Eigen::Index>(m_ * m_), static_cast<Eigen::Index>(words.size()));
      for (std::size_t w = 0; w < words.size(); ++w)
        stacked.col(static_cast<Eigen::Index>(w)) = Eigen::Map<const VectorXd>(words[w].data(), words[w].size());
      Eigen::JacobiSVD<MatrixXd> svd(stacked, Eigen::ComputeThinU);
      std::vector<MatrixXd> basis;
      for (Eigen::Index r = 0; r < svd.singularValues().size(); ++r) {
        if (svd.singularValues()(r) <= 1e-12 * svd.singularValues()(0)) break;
        basis.push_back(Eigen::Map<const MatrixXd>(svd.matrixU().col(r).data(), m_, m_));
      }
      words = std::move(basis);
    }
  }
  return false;
}

MetricLieAlgebra MetricLieAlgebra::scaled(double s) const {
  std::vector<double> c = c_;
  for (auto& v : c) v *= s;
  return MetricLieAlgebra(m_, std::move(c));
}

MetricLieAlgebra mu_of_A(const Mat& a) {
  const std::size_t n = a.dim();
  const std::size_t m = n + 1;
  std::vector<double> c(m * m * m, 0.0);
  for (std::size_t i = 1; i < m; ++i)
    for (std::size_t k = 1; k < m; ++k) {
      const double v = a(k - 1, i - 1);
      c[(0 * m + i) * m + k] = v;
      c[(i * m + 0) * m + k] = -v;
    }
  return MetricLieAlgebra(m, std::move(c));
}

MetricLieAlgebra scale_ad_e0(const MetricLieAlgebra& g, double alpha) {
  const std::size_t m = g.dim();
  std::vector<double> c = g.constants();
  for (std::size_t j = 1; j < m; ++j)
    for (std::size_t k = 0; k < m; ++k) {
      c[(0 * m + j) * m + k] *= alpha;
      c[(j * m + 0) * m + k] *= alpha;
    }
  return MetricLieAlgebra(m, std::move(c));
}

Mat ricci_operator_muA(const Mat& a) {
  const auto n = static_cast<Eigen::Index>(a.dim());
  const MatrixXd& A = a.eigen();
  const MatrixXd s = 0.5 * (A + A.transpose());
  MatrixXd ric = MatrixXd::Zero(n + 1, n + 1);
  ric(0, 0) = -s.squaredNorm();
  ric.bottomRightCorner(n, n) = 0.5 * (A * A.transpose() - A.transpose() * A) - A.trace() * s;
  return Mat(std::move(ric));
}

Mat ricci_operator_general(const MetricLieAlgebra& g) {
  const std::size_t m = g.dim();
  MatrixXd M = MatrixXd::Zero(m, m);
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < m; ++b) {
      double first = 0.0;
      double second = 0.0;
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) {
          first += g.c(a, i, j) * g.c(b, i, j);
          second += g.c(i, j, a) * g.c(i, j, b);
        }
      M(a, b) = -0.5 * first + 0.25 * second;
    }

  std::vector<MatrixXd> ads;
  ads.reserve(m);
  for (std::size_t i = 0; i < m; ++i) ads.push_back(g.ad(i));
  MatrixXd killing(m, m);
  VectorXd h(m);
  for (std::size_t a = 0; a < m; ++a) {
    h(a) = ads[a].trace();
    for (std::size_t b = 0; b < m; ++b) killing(a, b) = (ads[a] * ads[b]).trace();
  }
  MatrixXd ad_h = MatrixXd::Zero(m, m);
  for (std::size_t a = 0; a < m; ++a) ad_h += h(a) * ads[a];

  MatrixXd ric = M - 0.5 * killing - 0.5 * (ad_h + ad_h.transpose());
  return Mat(MatrixXd(0.5 * (ric + ric.transpose())));
}

RiemannTensor::RiemannTensor(const MetricLieAlgebra& g) : m_(g.dim()), r_(m_ * m_ * m_ * m_, 0.0) {
  const std::size_t m = m_;
  // L[i](k, j) = <D_{e_i} e_j, e_k>.
  std::vector<MatrixXd> L(m, MatrixXd::Zero(m, m));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t k = 0; k < m; ++k)
        L[i](k, j) = 0.5 * (g.c(i, j, k) - g.c(i, k, j) - g.c(j, k, i));

  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      MatrixXd R = L[i] * L[j] - L[j] * L[i];
      for (std::size_t p = 0; p < m; ++p) {
        const double w = g.c(i, j, p);
        if (w != 0.0) R -= w * L[p];
      }
      for (std::size_t k = 0; k < m; ++k)
        for (std::size_t l = 0; l < m; ++l) r_[((i * m + j) * m + k) * m + l] = R(l, k);
    }
}

double RiemannTensor::norm() const {
  double s = 0.0;
  for (double v : r_) s += v * v;
  return std::sqrt(s);
}

Mat RiemannTensor::ricci() const {
  MatrixXd ric = MatrixXd::Zero(m_, m_);
  for (std::size_t j = 0; j < m_; ++j)
    for (std::size_t k = 0; k < m_; ++k) {
      double s = 0.0;
      for (std::size_t i = 0; i < m_; ++i) s += (*this)(i, j, k, i);
      ric(j, k) = s;
    }
  return Mat(std::move(ric));
}

double RiemannTensor::sectional(const VectorXd& x, const VectorXd& y) const {
  if (static_cast<std::size_t>(x.size()) != m_ || static_cast<std::size_t>(y.size()) != m_) {
    throw DimensionMismatch("sectional: vector dimension mismatch");
  }
  const double xx = x.squaredNorm();
  const double yy = y.squaredNorm();
  const double xy = x.dot(y);
  const double gram = xx * yy - xy * xy;
  if (!(gram > 1e-12 * xx * yy)) throw std::domain_error("sectional: degenerate plane");
  double num = 0.0;
  for (std::size_t i = 0; i < m_; ++i) {
    if (x(i) == 0.0) continue;
    for (std::size_t j = 0; j < m_; ++j) {
      if (y(j) == 0.0) continue;
      for (std::size_t k = 0; k < m_; ++k) {
        if (y(k) == 0.0) continue;
        const double w = x(i) * y(j) * y(k);
        for (std::size_t l = 0; l < m_; ++l) num += w * x(l) * (*this)(i, j, k, l);
      }
    }
  }
  return num / gram;
}

double RiemannTensor::bianchi_residual() const {
  double worst = 0.0;
  for (std::size_t i = 0; i < m_; ++i)
    for (std::size_t j = 0; j < m_; ++j)
      for (std::size_t k = 0; k < m_; ++k)
        for (std::size_t l = 0; l < m_; ++l) {
          const double s = (*this)(i, j, k, l) + (*this)(j, k, i, l) + (*this)(k, i, j, l);
          worst = std::max(worst, std::abs(s));
        }
  return worst;
}

double RiemannTensor::symmetry_residual() const {
  double worst = 0.0;
  for (std::size_t i = 0; i < m_; ++i)
    for (std::size_t j = 0; j < m_; ++j)
      for (std::size_t k = 0; k < m_; ++k)
        for (std::size_t l = 0; l < m_; ++l) {
          const double r = (*this)(i, j, k, l);
          worst = std::max({worst, std::abs(r + (*this)(j, i, k, l)), std::abs(r + (*this)(i, j, l, k)),
                            std::abs(r - (*this)(k, l, i, j))});
        }
  return worst;
}

double sectional_curvature(const MetricLieAlgebra& g, const VectorXd& x, const VectorXd& y) {
  return RiemannTensor(g).sectional(x, y);
}

namespace {

// K and its gradient for orthonormal (x, y):
// K = sum R(i,j,k,l) x_i y_j y_k x_l.
double sectional_with_gradient(const RiemannTensor& r, const VectorXd& x, const VectorXd& y, VectorXd& gx,
                               VectorXd& gy) {
  const std::size_t m = r.dim();
  gx.setZero(m);
  gy.setZero(m);
  double k_val = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t k = 0; k < m; ++k)
        for (std::size_t l = 0; l < m; ++l) {
          const double v = r(i, j, k, l);
          if (v == 0.0) continue;
          k_val += v * x(i) * y(j) * y(k) * x(l);
          gx(i) += v * y(j) * y(k) * x(l);
          gx(l) += v * x(i) * y(j) * y(k);
          gy(j) += v * x(i) * y(k) * x(l);
          gy(k) += v * x(i) * y(j) * x(l);
        }
  return k_val;
}

bool orthonormalize(VectorXd& x, VectorXd& y) {
  const double nx = x.norm();
  if (nx == 0.0) return false;
  x /= nx;
  y -= y.dot(x) * x;
  const double ny = y.norm();
  if (ny <= 1e-12) return false;
  y /= ny;
  return true;
}

// Projected gradient ascent of sign * K over orthonormal pairs.
double polish(const RiemannTensor& r, VectorXd x, VectorXd y, double sign) {
  VectorXd gx, gy;
  double best = sign * sectional_with_gradient(r, x, y, gx, gy);
  double step = 0.1;
  for (int iter = 0; iter < 300 && step > 1e-12; ++iter) {
    VectorXd nx = x + step * sign * gx;
    VectorXd ny = y + step * sign * gy;
    if (!orthonormalize(nx, ny)) {
      step *= 0.5;
      continue;
    }
    VectorXd ngx, ngy;
    const double val = sign * sectional_with_gradient(r, nx, ny, ngx, ngy);
    if (val > best) {
      best = val;
      x = std::move(nx);
      y = std::move(ny);
      gx = std::move(ngx);
      gy = std::move(ngy);
      step *= 1.5;
    } else {
      step *= 0.5;
    }
  }
  return sign * best;
}

}  // namespace

SectionalRange sample_sectional(const RiemannTensor& r, std::uint64_t seed, std::size_t planes) {
  const std::size_t m = r.dim();
  SectionalRange out;
  out.seed = seed;
  if (m < 2 || planes == 0) return out;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  struct Plane {
    double k;
    VectorXd x, y;
  };
  std::vector<Plane> sampled;
  sampled.reserve(planes);
  while (sampled.size() < planes) {
    VectorXd x(m), y(m);
    for (std::size_t i = 0; i < m; ++i) x(i) = gauss(rng);
    for (std::size_t i = 0; i < m; ++i) y(i) = gauss(rng);
    if (!orthonormalize(x, y)) continue;
    VectorXd gx, gy;
    const double k = sectional_with_gradient(r, x, y, gx, gy);
    sampled.push_back({k, std::move(x), std::move(y)});
  }
  out.planes = sampled.size();
  std::sort(sampled.begin(), sampled.end(), [](const Plane& a, const Plane& b) { return a.k < b.k; });
  out.min = sampled.front().k;
  out.max = sampled.back().k;

  // Coordinate planes are cheap and often extremal for these algebras.
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j) {
      VectorXd x = VectorXd::Unit(m, i), y = VectorXd::Unit(m, j);
      const double k = r.sectional(x, y);
      out.min = std::min(out.min, k);
      out.max = std::max(out.max, k);
    }

  const std::size_t polish_count = std::min<std::size_t>(5, sampled.size());
  for (std::size_t p = 0; p < polish_count; ++p) {
    const auto& lo = sampled[p];
    const auto& hi = sampled[sampled.size() - 1 - p];
    out.min = std::min(out.min, polish(r, lo.x, lo.y, -1.0));
    out.max = std::max(out.max, polish(r, hi.x, hi.y, 1.0));
  }
  return out;
}

namespace {

struct Definiteness {
  bool positive;
  bool marginal;
};

Definiteness positive_definite(const MatrixXd& sym) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (sym + sym.transpose()), Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  const double scale = ev.cwiseAbs().maxCoeff();
  const double thr = 1e-10 * scale;
  const double lo = ev.minCoeff();
  if (scale == 0.0) return {false, true};
  return {lo > thr, std::abs(lo) <= thr};
}

HeintzeResult heintze_for_sign(const Mat& a, int sign, bool invertible) {
  HeintzeResult r;
  r.sign = sign;
  r.condA = invertible;
  const MatrixXd sa = static_cast<double>(sign) * a.eigen();
  const MatrixXd d0 = 0.5 * (sa + sa.transpose());
  const MatrixXd s0 = 0.5 * (sa - sa.transpose());
  const auto b = positive_definite(d0);
  const auto c = positive_definite(d0 * d0 + (d0 * s0 - s0 * d0));
  r.condB = b.positive;
  r.condC = c.positive;
  r.marginal = b.marginal || c.marginal;
  r.negative = r.condA && r.condB && r.condC;
  return r;
}

bool invertible(const Mat& a) {
  const double n = frob_norm(a);
  if (n == 0.0) return false;
  return std::abs(determinant(a)) > 1e-12 * std::pow(n, static_cast<double>(a.dim()));
}

}  // namespace

HeintzeResult heintze_check(const Mat& a) {
  const bool inv = invertible(a);
  const int preferred = a.trace() >= 0 ? 1 : -1;
  const HeintzeResult p = heintze_for_sign(a, preferred, inv);
  const HeintzeResult q = heintze_for_sign(a, -preferred, inv);
  auto score = [](const HeintzeResult& r) { return int(r.condB) + int(r.condC) + 4 * int(r.negative); };
  return score(q) > score(p) ? q : p;
}

bool admits_negative_curvature(const Mat& a) {
  if (!invertible(a)) return false;
  const double thr = 1e-10 * frob_norm(a);
  const Spectrum s = eigenvalues(a);
  bool all_pos = true;
  bool all_neg = true;
  for (const auto& v : s.values()) {
    all_pos = all_pos && v.real() > thr;
    all_neg = all_neg && v.real() < -thr;
  }
  return all_pos || all_neg;
}

CurvatureReport curvature_report(const MetricLieAlgebra& g, std::uint64_t seed, std::size_t planes) {
  CurvatureReport rep;
  const RiemannTensor r(g);
  rep.ricci_op = ricci_operator_general(g);
  rep.scalar = rep.ricci_op.trace();
  rep.riem_norm = r.norm();
  rep.flat = rep.riem_norm <= 1e-8 * std::max(g.norm_sq(), std::numeric_limits<double>::min());
  const auto range = sample_sectional(r, seed, planes);
  rep.sectional_min = range.min;
  rep.sectional_max = range.max;
  rep.seed = seed;
  rep.planes = range.planes;
  return rep;
}

CurvatureReport curvature_report(const Mat& a, std::uint64_t seed, std::size_t planes) {
  CurvatureReport rep = curvature_report(mu_of_A(a), seed, planes);
  rep.heintze = heintze_check(a);
  return rep;
}

Type3Report type3_monitor(const Trajectory& traj, double t1) {
  if (traj.spec.kind != FlowKind::Bracket) {
    throw std::invalid_argument("type3_monitor: trajectory must come from the bracket flow");
  }
  if (traj.samples.empty()) throw std::invalid_argument("type3_monitor: empty trajectory");
  const Mat& a0 = traj.front().A;
  const double tr_a2 = (a0.eigen() * a0.eigen()).trace();
  if (tr_a2 < -1e-12 * frob_norm_sq(a0)) {
    throw std::domain_error(fmt::format(
        "type3_monitor: tr(A0^2) = {:.6g} < 0; the t^-1 curvature bound is only established for tr(A0^2) >= 0",
        tr_a2));
  }
  Type3Report rep;
  for (const auto& s : traj.samples) {
    if (s.t < t1) continue;
    const double rn = RiemannTensor(mu_of_A(s.A)).norm();
    rep.samples.push_back({s.t, rn, s.t * rn});
    rep.sup_tC = std::max(rep.sup_tC, s.t * rn);
  }
  return rep;
}

}  // namespace solvflow
