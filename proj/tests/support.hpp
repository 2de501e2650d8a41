#ifndef SAPOPT_TESTS_SUPPORT_HPP
#define SAPOPT_TESTS_SUPPORT_HPP

// Generators and brute-force references shared by the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "sapopt/problem.hpp"

namespace sapopt::testing {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

class Rng
{
public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen_); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(gen_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen_); }
  bool chance(double p) { return uniform(0.0, 1.0) < p; }

  Matrix matrix(Eigen::Index r, Eigen::Index c)
  {
    Matrix M(r, c);
    for (Eigen::Index j = 0; j < c; ++j) {
      for (Eigen::Index i = 0; i < r; ++i) { M(i, j) = normal(); }
    }
    return M;
  }

  Vector vector(Eigen::Index n)
  {
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) { v[i] = normal(); }
    return v;
  }

private:
  std::mt19937_64 gen_;
};

/// Random function on a bounded domain: up to max_pieces pieces with convex,
/// concave and linear shapes, jumps, gaps and isolated points.
inline Pwq random_pwq(Rng& rng, int max_pieces = 6)
{
  const int k = rng.integer(1, max_pieces);
  std::vector<double> cuts(static_cast<std::size_t>(k) + 1);
  for (auto& c : cuts) { c = rng.uniform(-3.0, 3.0); }
  std::sort(cuts.begin(), cuts.end());
  std::vector<Piece> pcs;
  for (int i = 0; i < k; ++i) {
    double a = cuts[std::size_t(i)], b = cuts[std::size_t(i) + 1];
    if (rng.chance(0.15)) {
      pcs.push_back({0, 0, rng.uniform(-2, 2), a, a});
      continue;
    }
    if (rng.chance(0.2)) { a += 0.3 * (b - a); }  // leave a gap
    const int shape = rng.integer(0, 2);
    const double p = shape == 0 ? rng.uniform(0.0, 2.0) : shape == 1 ? -rng.uniform(0.0, 2.0) : 0.0;
    pcs.push_back({p, rng.uniform(-2, 2), rng.uniform(-2, 2), a, b});
  }
  return Pwq(pcs);
}

/// Random convex function on an interval made of pieces joined with matching values and slopes that do not decrease.
inline Pwq random_convex_pwq(Rng& rng, int max_pieces = 5, bool bounded = true)
{
  const int k = rng.integer(1, max_pieces);
  std::vector<double> cuts(static_cast<std::size_t>(k) + 1);
  for (auto& c : cuts) { c = rng.uniform(-3.0, 3.0); }
  std::sort(cuts.begin(), cuts.end());
  if (!bounded) {
    cuts.front() = -kInf;
    cuts.back() = kInf;
  }
  std::vector<Piece> pcs;
  double slope_at_left = rng.uniform(-3, 3), value_at_left = rng.uniform(-1, 1);
  for (int i = 0; i < k; ++i) {
    const double a = cuts[std::size_t(i)], b = cuts[std::size_t(i) + 1];
    const bool unbounded_end = !std::isfinite(a) || !std::isfinite(b);
    const double p = unbounded_end ? rng.uniform(0.1, 2.0) : (rng.chance(0.3) ? 0.0 : rng.uniform(0.0, 2.0));
    if (i == 0) {
      // Anchor the first piece at its right end instead when a is infinite.
      const double x0 = std::isfinite(a) ? a : std::isfinite(b) ? b : 0.0;
      const double q = slope_at_left - 2 * p * x0;
      const double r = value_at_left - p * x0 * x0 - q * x0;
      pcs.push_back({p, q, r, a, b});
    } else {
      const double q = slope_at_left - 2 * p * a;
      const double r = value_at_left - p * a * a - q * a;
      pcs.push_back({p, q, r, a, b});
    }
    const Piece& pc = pcs.back();
    if (std::isfinite(b)) {
      slope_at_left = pc.slope(b) + (rng.chance(0.5) ? rng.uniform(0.0, 1.0) : 0.0);
      value_at_left = pc(b);
    }
  }
  return Pwq(pcs);
}

/// c off the origin and 0 at the origin, on [lo, hi].
inline Pwq card_cost(double c, double lo, double hi)
{
  return Pwq({Piece{0, 0, c, lo, 0}, Piece{0, 0, 0, 0, 0}, Piece{0, 0, c, 0, hi}});
}

/// Brute-force objective f(x) + (x - u)^2 / 2 minimized over a fine grid and all breakpoints.
inline double brute_prox_value(const Pwq& f, double u, double step)
{
  std::vector<double> xs;
  double lo = f.domain_lower(), hi = f.domain_upper();
  if (!std::isfinite(lo)) { lo = std::min(u, -10.0) - 10.0; }
  if (!std::isfinite(hi)) { hi = std::max(u, 10.0) + 10.0; }
  for (double x = std::ceil(lo / step) * step; x <= hi; x += step) { xs.push_back(x); }
  for (const auto& pc : f.pieces()) {
    if (std::isfinite(pc.a)) { xs.push_back(pc.a); }
    if (std::isfinite(pc.b)) { xs.push_back(pc.b); }
  }
  double best = kInf;
  for (double x : xs) { best = std::min(best, f(x) + 0.5 * (x - u) * (x - u)); }
  return best;
}

/// Lower convex hull of points (x sorted ascending), evaluated by interpolation.
struct BruteHull
{
  std::vector<double> x, y;

  BruteHull(const std::vector<double>& xs, const std::vector<double>& ys)
  {
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (!std::isfinite(ys[i])) { continue; }
      while (x.size() >= 2) {
        const std::size_t n = x.size();
        const double cross = (x[n - 1] - x[n - 2]) * (ys[i] - y[n - 2]) - (y[n - 1] - y[n - 2]) * (xs[i] - x[n - 2]);
        if (cross > 0) { break; }
        x.pop_back();
        y.pop_back();
      }
      x.push_back(xs[i]);
      y.push_back(ys[i]);
    }
  }

  double operator()(double t) const
  {
    if (x.empty() || t < x.front() || t > x.back()) { return kInf; }
    auto it = std::lower_bound(x.begin(), x.end(), t);
    const std::size_t j = std::size_t(it - x.begin());
    if (x[j] == t) { return y[j]; }
    const double w = (t - x[j - 1]) / (x[j] - x[j - 1]);
    return (1 - w) * y[j - 1] + w * y[j];
  }
};

/// Samples of f on a grid of the given step over [lo, hi], plus every finite breakpoint inside.
inline BruteHull brute_hull(const Pwq& f, double lo, double hi, double step)
{
  std::vector<double> xs;
  const long n = long(std::floor((hi - lo) / step));
  for (long i = 0; i <= n; ++i) { xs.push_back(lo + double(i) * step); }
  xs.push_back(hi);
  for (const auto& pc : f.pieces()) {
    for (double t : {pc.a, pc.b}) {
      if (std::isfinite(t) && t >= lo && t <= hi) { xs.push_back(t); }
    }
  }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  std::vector<double> ys;
  for (double x : xs) { ys.push_back(f(x)); }
  return BruteHull(xs, ys);
}

/// Minimizer of sum p_i x_i^2 + q_i x_i subject to A x = b by a direct solve of the stationarity system.
inline Vector equality_qp(const Vector& p, const Vector& q, const Matrix& A, const Vector& b)
{
  const Eigen::Index n = p.size(), m = b.size();
  Matrix K = Matrix::Zero(n + m, n + m);
  K.topLeftCorner(n, n) = (2 * p).asDiagonal();
  K.topRightCorner(n, m) = A.transpose();
  K.bottomLeftCorner(m, n) = A;
  Vector rhs(n + m);
  rhs << -q, b;
  return Eigen::FullPivLU<Matrix>(K).solve(rhs).head(n);
}

/// Random separable problem with single-quadratic components p_i x^2 + q_i x + r_i, p_i > 0.
struct ConvexInstance
{
  Vector p, q, r;
  Matrix A;
  Vector b;

  SapProblem problem() const
  {
    std::vector<Pwq> f;
    for (Eigen::Index i = 0; i < p.size(); ++i) { f.push_back(Pwq::quadratic(p[i], q[i], r[i])); }
    return new_problem(A, b, std::move(f));
  }

  double value(const Vector& x) const
  {
    return (p.array() * x.array().square() + q.array() * x.array() + r.array()).sum();
  }
};

inline ConvexInstance random_convex_instance(Rng& rng, Eigen::Index n, Eigen::Index m)
{
  ConvexInstance c;
  c.p.resize(n);
  c.q.resize(n);
  c.r.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    c.p[i] = rng.uniform(0.1, 2.0);
    c.q[i] = rng.uniform(-2.0, 2.0);
    c.r[i] = rng.uniform(-1.0, 1.0);
  }
  c.A = rng.matrix(m, n);
  c.b = rng.vector(m);
  return c;
}

/// Nonconvex instance with n - m free coordinates: quadratic tracking terms plus fixed costs on a box.
/// With moderate_rows, constraint entries are +-[0.5, 1.5] instead of Gaussian.
inline SapProblem random_card_instance(Rng& rng, Eigen::Index n, Eigen::Index m, bool moderate_rows = false)
{
  std::vector<Pwq> f;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double target = rng.uniform(-1.0, 1.0);
    Pwq g = Pwq::quadratic(rng.uniform(0.2, 1.5), 0, 0);
    g = shift_scale_arg(g, 1.0, -target);
    if (rng.chance(0.7)) { g = g + card_cost(rng.uniform(0.05, 0.4), -3.0, 3.0); }
    else { g = g + Pwq::indicator(-3.0, 3.0); }
    f.push_back(g);
  }
  Matrix A = rng.matrix(m, n);
  if (moderate_rows) {
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index i = 0; i < m; ++i) { A(i, j) = (rng.chance(0.5) ? 1 : -1) * rng.uniform(0.5, 1.5); }
    }
  }
  // b from a point with several zeros so sparse solutions are feasible.
  Vector x0 = Vector::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (rng.chance(0.5)) { x0[i] = rng.uniform(-0.8, 0.8); }
  }
  return new_problem(A, A * x0, std::move(f));
}

}  // namespace sapopt::testing

#endif  // SAPOPT_TESTS_SUPPORT_HPP
