#ifndef SAPOPT_PWQ_HPP
#define SAPOPT_PWQ_HPP

/**
 * @file
 * @brief Univariate piecewise-quadratic functions: evaluation, arithmetic,
 * minimization, proximal operators and convex envelopes.
 *
 * A function is a list of closed-interval quadratic pieces ordered as
 * a_1 <= b_1 <= a_2 <= ... <= b_k and is +inf outside their union. Where
 * pieces share an endpoint the value is the minimum over the covering
 * pieces. Every constructed function is stored in an irreducible canonical
 * form (see simplify()).
 */

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "sapopt/errors.hpp"

namespace sapopt {

template<typename Scalar>
constexpr Scalar infinity() noexcept
{
  return std::numeric_limits<Scalar>::infinity();
}

/// p x^2 + q x + r on the closed interval [a, b]; a and b may be infinite.
template<typename Scalar>
struct QuadPiece
{
  Scalar p{0};
  Scalar q{0};
  Scalar r{0};
  Scalar a{-infinity<Scalar>()};
  Scalar b{infinity<Scalar>()};

  Scalar operator()(Scalar x) const { return (p * x + q) * x + r; }
  Scalar slope(Scalar x) const { return Scalar(2) * p * x + q; }
  bool is_point() const { return a == b; }
  bool covers(Scalar x) const { return a <= x && x <= b; }

  bool operator==(const QuadPiece&) const = default;
};

template<typename Scalar>
struct Minimum
{
  Scalar argmin;
  Scalar value;
};

namespace detail {

template<typename Scalar>
bool same_coefficients(const QuadPiece<Scalar>& l, const QuadPiece<Scalar>& r)
{
  return l.p == r.p && l.q == r.q && l.r == r.r;
}

/// Real roots of A x^2 + B x + C = 0 using the cancellation-free form.
template<typename Scalar>
std::vector<Scalar> quadratic_roots(Scalar A, Scalar B, Scalar C)
{
  std::vector<Scalar> roots;
  if (A == Scalar(0)) {
    if (B != Scalar(0)) { roots.push_back(-C / B); }
    return roots;
  }
  Scalar disc = B * B - Scalar(4) * A * C;
  const Scalar scale = B * B + std::abs(Scalar(4) * A * C);
  if (disc < Scalar(0)) {
    if (disc < -Scalar(64) * std::numeric_limits<Scalar>::epsilon() * scale) { return roots; }
    disc = Scalar(0);
  }
  const Scalar s = std::sqrt(disc);
  const Scalar t = -(B + std::copysign(s, B)) / Scalar(2);
  if (t == Scalar(0)) {
    roots.push_back(Scalar(0));
    return roots;
  }
  roots.push_back(t / A);
  roots.push_back(C / t);
  if (roots[0] > roots[1]) { std::swap(roots[0], roots[1]); }
  if (roots[0] == roots[1]) { roots.pop_back(); }
  return roots;
}

template<typename Scalar>
void validate_piece(const QuadPiece<Scalar>& pc)
{
  using std::isfinite;
  if (!isfinite(pc.p) || !isfinite(pc.q) || !isfinite(pc.r)) {
    throw Error(ErrorCode::InvalidInput, "piece coefficients must be finite");
  }
  if (std::isnan(pc.a) || std::isnan(pc.b) || pc.a > pc.b) {
    throw Error(ErrorCode::InvalidInput, "piece interval must satisfy a <= b");
  }
  if (pc.a == infinity<Scalar>() || pc.b == -infinity<Scalar>()) {
    throw Error(ErrorCode::InvalidInput, "piece interval must contain a finite point");
  }
}

/**
 * Rewrites an arbitrary list of pieces as the irreducible ordered description
 * of the same function under the minimum convention.
 *
 * The real line is cut at every finite endpoint. On each open cell the lower
 * envelope of the covering quadratics is taken (splitting where two of them
 * cross); at each cut the minimum over covering pieces is kept as a point piece
 * only if it is strictly below both neighbouring closures. Adjacent pieces with
 * identical coefficients are then merged.
 */
template<typename Scalar>
std::vector<QuadPiece<Scalar>> canonicalize(std::vector<QuadPiece<Scalar>> in)
{
  using Piece = QuadPiece<Scalar>;
  constexpr Scalar inf = infinity<Scalar>();
  if (in.empty()) { return in; }
  for (const auto& pc : in) { validate_piece(pc); }

  std::sort(in.begin(), in.end(), [](const Piece& l, const Piece& r) {
    return l.a < r.a || (l.a == r.a && l.b < r.b);
  });

  std::vector<Scalar> knots;
  knots.reserve(2 * in.size());
  for (const auto& pc : in) {
    if (std::isfinite(pc.a)) { knots.push_back(pc.a); }
    if (std::isfinite(pc.b)) { knots.push_back(pc.b); }
  }
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end()), knots.end());

  std::vector<Piece> out;
  std::vector<const Piece*> cover;
  std::vector<Scalar> cuts;

  // open cells (lo, hi) between consecutive knots
  auto emit_cell = [&](Scalar lo, Scalar hi) {
    cover.clear();
    for (const auto& pc : in) {
      if (pc.a > lo) { break; }
      if (pc.a < pc.b && pc.b >= hi) { cover.push_back(&pc); }
    }
    if (cover.empty()) { return; }
    if (cover.size() == 1) {
      out.push_back({cover[0]->p, cover[0]->q, cover[0]->r, lo, hi});
      return;
    }
    cuts.assign({lo, hi});
    for (std::size_t i = 0; i < cover.size(); ++i) {
      for (std::size_t j = i + 1; j < cover.size(); ++j) {
        const auto& u = *cover[i];
        const auto& v = *cover[j];
        for (Scalar t : quadratic_roots(u.p - v.p, u.q - v.q, u.r - v.r)) {
          if (lo < t && t < hi) { cuts.push_back(t); }
        }
      }
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
      const Scalar c0 = cuts[c], c1 = cuts[c + 1];
      Scalar probe;
      if (std::isfinite(c0) && std::isfinite(c1)) {
        probe = c0 + (c1 - c0) / Scalar(2);
      } else if (std::isfinite(c1)) {
        probe = c1 - Scalar(1) - std::abs(c1);
      } else if (std::isfinite(c0)) {
        probe = c0 + Scalar(1) + std::abs(c0);
      } else {
        probe = Scalar(0);
      }
      const Piece* best = cover[0];
      for (const Piece* pc : cover) {
        if ((*pc)(probe) < (*best)(probe)) { best = pc; }
      }
      if (!out.empty() && out.back().b == c0 && c0 != lo && same_coefficients(out.back(), *best)) {
        out.back().b = c1;
      } else {
        out.push_back({best->p, best->q, best->r, c0, c1});
      }
    }
  };

  emit_cell(-inf, knots.empty() ? inf : knots.front());
  for (std::size_t k = 0; k < knots.size(); ++k) {
    emit_cell(knots[k], k + 1 < knots.size() ? knots[k + 1] : inf);
  }

  // point values at the knots
  std::vector<Piece> points;
  std::size_t seg = 0;
  for (const Scalar t : knots) {
    Scalar pv = inf;
    for (const auto& pc : in) {
      if (pc.a > t) { break; }
      if (pc.b >= t) { pv = std::min(pv, pc(t)); }
    }
    Scalar closure = inf;
    while (seg < out.size() && out[seg].b < t) { ++seg; }
    for (std::size_t s = seg; s < out.size() && out[s].a <= t; ++s) {
      if (out[s].b == t || out[s].a == t) { closure = std::min(closure, out[s](t)); }
    }
    if (pv < closure) { points.push_back({Scalar(0), Scalar(0), pv, t, t}); }
  }

  std::vector<Piece> all;
  all.reserve(out.size() + points.size());
  std::merge(out.begin(), out.end(), points.begin(), points.end(), std::back_inserter(all),
             [](const Piece& l, const Piece& r) { return l.a < r.a || (l.a == r.a && l.b < r.b); });

  std::vector<Piece> merged;
  merged.reserve(all.size());
  for (const auto& pc : all) {
    if (!merged.empty()) {
      auto& last = merged.back();
      if (!last.is_point() && !pc.is_point() && last.b == pc.a && same_coefficients(last, pc)) {
        last.b = pc.b;
        continue;
      }
    }
    merged.push_back(pc);
  }
  return merged;
}

}  // namespace detail

/**
 * @brief Extended-real valued univariate piecewise-quadratic function.
 *
 * Immutable after construction. An empty function is +inf everywhere.
 */
template<typename Scalar>
class PiecewiseQuadratic
{
public:
  using Piece = QuadPiece<Scalar>;

  PiecewiseQuadratic() = default;

  /// Pieces may be given in any order and may overlap; they are reduced to canonical form.
  explicit PiecewiseQuadratic(std::vector<Piece> pieces)
      : pieces_(detail::canonicalize(std::move(pieces)))
  {}

  PiecewiseQuadratic(std::initializer_list<Piece> pieces)
      : PiecewiseQuadratic(std::vector<Piece>(pieces))
  {}

  static PiecewiseQuadratic quadratic(Scalar p, Scalar q, Scalar r,
                                      Scalar a = -infinity<Scalar>(),
                                      Scalar b = infinity<Scalar>())
  {
    return PiecewiseQuadratic({Piece{p, q, r, a, b}});
  }

  /// 0 on [a, b], +inf elsewhere.
  static PiecewiseQuadratic indicator(Scalar a, Scalar b) { return quadratic(0, 0, 0, a, b); }

  static PiecewiseQuadratic point(Scalar x, Scalar value = Scalar(0))
  {
    return quadratic(0, 0, value, x, x);
  }

  const std::vector<Piece>& pieces() const { return pieces_; }
  std::size_t size() const { return pieces_.size(); }
  bool empty() const { return pieces_.empty(); }

  /// Minimum over the pieces covering x; +inf if none does.
  Scalar operator()(Scalar x) const
  {
    auto it = std::lower_bound(pieces_.begin(), pieces_.end(), x,
                               [](const Piece& pc, Scalar v) { return pc.b < v; });
    Scalar best = infinity<Scalar>();
    for (; it != pieces_.end() && it->a <= x; ++it) { best = std::min(best, (*it)(x)); }
    return best;
  }

  Scalar domain_lower() const { return empty() ? infinity<Scalar>() : pieces_.front().a; }
  Scalar domain_upper() const { return empty() ? -infinity<Scalar>() : pieces_.back().b; }

  bool operator==(const PiecewiseQuadratic&) const = default;

private:
  std::vector<Piece> pieces_;
};

template<typename Scalar>
Scalar eval(const PiecewiseQuadratic<Scalar>& f, Scalar x)
{
  return f(x);
}

/// Canonical form of a piece list. Constructors already apply this, so it is
/// the identity on any PiecewiseQuadratic.
template<typename Scalar>
PiecewiseQuadratic<Scalar> simplify(std::vector<QuadPiece<Scalar>> pieces)
{
  return PiecewiseQuadratic<Scalar>(std::move(pieces));
}

template<typename Scalar>
PiecewiseQuadratic<Scalar> simplify(const PiecewiseQuadratic<Scalar>& f)
{
  return PiecewiseQuadratic<Scalar>(f.pieces());
}

/**
 * @brief Pointwise sum. The domain is the intersection of the operand domains.
 *
 * Sums every pair of overlapping pieces; the minimum over pairs equals the sum
 * of the per-operand minima, so the min convention is respected at shared points.
 *
 * @throws Error(EmptyDomain) if the domains do not intersect.
 */
template<typename Scalar>
PiecewiseQuadratic<Scalar> add(const PiecewiseQuadratic<Scalar>& f, const PiecewiseQuadratic<Scalar>& g)
{
  using Piece = QuadPiece<Scalar>;
  std::vector<Piece> sum;
  const auto& fp = f.pieces();
  const auto& gp = g.pieces();
  std::size_t start = 0;
  for (const auto& u : fp) {
    while (start < gp.size() && gp[start].b < u.a) { ++start; }
    for (std::size_t j = start; j < gp.size() && gp[j].a <= u.b; ++j) {
      const auto& v = gp[j];
      const Scalar lo = std::max(u.a, v.a), hi = std::min(u.b, v.b);
      if (lo <= hi) { sum.push_back({u.p + v.p, u.q + v.q, u.r + v.r, lo, hi}); }
    }
  }
  if (sum.empty()) { throw Error(ErrorCode::EmptyDomain, "sum of functions with disjoint domains"); }
  return PiecewiseQuadratic<Scalar>(std::move(sum));
}

template<typename Scalar>
PiecewiseQuadratic<Scalar> operator+(const PiecewiseQuadratic<Scalar>& f, const PiecewiseQuadratic<Scalar>& g)
{
  return add(f, g);
}

/// gamma * f for gamma >= 0; the domain is kept when gamma = 0.
template<typename Scalar>
PiecewiseQuadratic<Scalar> scale_value(const PiecewiseQuadratic<Scalar>& f, Scalar gamma)
{
  if (!(gamma >= Scalar(0)) || !std::isfinite(gamma)) {
    throw Error(ErrorCode::InvalidInput, "value scale must be finite and nonnegative");
  }
  std::vector<QuadPiece<Scalar>> pieces = f.pieces();
  for (auto& pc : pieces) {
    pc.p *= gamma;
    pc.q *= gamma;
    pc.r *= gamma;
  }
  return PiecewiseQuadratic<Scalar>(std::move(pieces));
}

/**
 * @brief x -> f(e x + s).
 * @throws Error(ZeroScale) if e == 0.
 */
template<typename Scalar>
PiecewiseQuadratic<Scalar> shift_scale_arg(const PiecewiseQuadratic<Scalar>& f, Scalar e, Scalar s)
{
  if (e == Scalar(0)) { throw Error(ErrorCode::ZeroScale, "argument scale must be nonzero"); }
  std::vector<QuadPiece<Scalar>> pieces;
  pieces.reserve(f.size());
  for (const auto& pc : f.pieces()) {
    QuadPiece<Scalar> t;
    t.p = pc.p * e * e;
    t.q = Scalar(2) * pc.p * e * s + pc.q * e;
    t.r = pc.p * s * s + pc.q * s + pc.r;
    Scalar lo = (pc.a - s) / e, hi = (pc.b - s) / e;
    if (e < Scalar(0)) { std::swap(lo, hi); }
    t.a = lo;
    t.b = hi;
    pieces.push_back(t);
  }
  return PiecewiseQuadratic<Scalar>(std::move(pieces));
}

namespace detail {

/// argmin of P x^2 + Q x over [a, b]; ties go to the point nearest `target`, then the smaller one.
template<typename Scalar>
Scalar quad_argmin(Scalar P, Scalar Q, Scalar a, Scalar b, Scalar target)
{
  if (a == b) { return a; }
  if (P > Scalar(0)) { return std::clamp(-Q / (Scalar(2) * P), a, b); }
  if (P == Scalar(0)) {
    if (Q > Scalar(0)) {
      if (std::isinf(a)) { throw Error(ErrorCode::Unbounded, "linear piece decreasing towards -inf"); }
      return a;
    }
    if (Q < Scalar(0)) {
      if (std::isinf(b)) { throw Error(ErrorCode::Unbounded, "linear piece decreasing towards +inf"); }
      return b;
    }
    return std::clamp(target, a, b);
  }
  if (std::isinf(a) || std::isinf(b)) {
    throw Error(ErrorCode::Unbounded, "concave piece on an unbounded interval");
  }
  const Scalar va = (P * a + Q) * a, vb = (P * b + Q) * b;
  if (va < vb) { return a; }
  if (vb < va) { return b; }
  return std::abs(a - target) <= std::abs(b - target) ? a : b;
}

}  // namespace detail

/**
 * @brief Global minimum; ties are broken towards the smallest argmin.
 * @throws Error(Unbounded) if f is unbounded below, Error(EmptyDomain) if f is empty.
 */
template<typename Scalar>
Minimum<Scalar> minimize(const PiecewiseQuadratic<Scalar>& f)
{
  if (f.empty()) { throw Error(ErrorCode::EmptyDomain, "minimize of an empty function"); }
  Minimum<Scalar> best{0, infinity<Scalar>()};
  bool found = false;
  for (const auto& pc : f.pieces()) {
    const Scalar target = std::isfinite(pc.a) ? pc.a : (std::isfinite(pc.b) ? pc.b : Scalar(0));
    const Scalar x = detail::quad_argmin(pc.p, pc.q, pc.a, pc.b, target);
    const Scalar v = pc(x);
    if (!found || v < best.value || (v == best.value && x < best.argmin)) {
      best = {x, v};
      found = true;
    }
  }
  return best;
}

/**
 * @brief argmin_x f(x) + (x - u)^2 / 2.
 *
 * Every piece is minimized after the quadratic shift; among minimizers the one
 * closest to u wins, then the smaller one.
 */
template<typename Scalar>
Scalar prox(const PiecewiseQuadratic<Scalar>& f, Scalar u)
{
  if (f.empty()) { throw Error(ErrorCode::EmptyDomain, "prox of an empty function"); }
  Scalar best_x = 0, best_v = infinity<Scalar>();
  bool found = false;
  for (const auto& pc : f.pieces()) {
    Scalar x;
    const Scalar curvature = Scalar(2) * pc.p + Scalar(1);
    if (pc.is_point()) {
      x = pc.a;
    } else if (curvature > Scalar(0)) {
      x = std::clamp((u - pc.q) / curvature, pc.a, pc.b);
    } else {
      x = detail::quad_argmin(pc.p + Scalar(0.5), pc.q - u, pc.a, pc.b, u);
    }
    const Scalar d = x - u;
    const Scalar v = pc(x) + Scalar(0.5) * d * d;
    bool better = !found || v < best_v;
    if (!better && v == best_v) {
      const Scalar dn = std::abs(d), db = std::abs(best_x - u);
      better = dn < db || (dn == db && x < best_x);
    }
    if (better) {
      best_x = x;
      best_v = v;
      found = true;
    }
  }
  return best_x;
}

/**
 * @brief Convexity test with tolerance 1e-9 (1 + |value|) on continuity and
 * slope monotonicity at the breakpoints.
 */
template<typename Scalar>
bool is_convex(const PiecewiseQuadratic<Scalar>& f)
{
  const auto& pcs = f.pieces();
  if (pcs.size() <= 1) { return pcs.empty() || pcs[0].p >= Scalar(0) || pcs[0].is_point(); }
  for (const auto& pc : pcs) {
    if (pc.is_point() || pc.p < Scalar(0)) { return false; }
  }
  const Scalar tol = Scalar(1e-9);
  for (std::size_t i = 0; i + 1 < pcs.size(); ++i) {
    const auto& l = pcs[i];
    const auto& r = pcs[i + 1];
    if (l.b != r.a) { return false; }
    const Scalar vl = l(l.b), vr = r(r.a);
    if (std::abs(vl - vr) > tol * (Scalar(1) + std::max(std::abs(vl), std::abs(vr)))) { return false; }
    const Scalar sl = l.slope(l.b), sr = r.slope(r.a);
    if (sl > sr + tol * (Scalar(1) + std::max(std::abs(sl), std::abs(sr)))) { return false; }
  }
  return true;
}

namespace detail {

/// Closed-form prox of a convex function; no convexity check.
template<typename Scalar>
Scalar prox_convex_unchecked(const std::vector<QuadPiece<Scalar>>& pcs, Scalar u)
{
  // first piece whose upper threshold (2p+1) b + q reaches u
  auto it = std::partition_point(pcs.begin(), pcs.end(), [u](const QuadPiece<Scalar>& pc) {
    return (Scalar(2) * pc.p + Scalar(1)) * pc.b + pc.q < u;
  });
  if (it == pcs.end()) { return pcs.back().b; }
  const Scalar curvature = Scalar(2) * it->p + Scalar(1);
  if (u < curvature * it->a + it->q) { return it->a; }
  return std::clamp((u - it->q) / curvature, it->a, it->b);
}

}  // namespace detail

/**
 * @brief prox of a convex function by binary search over the monotone
 * thresholds (2 p_j + 1) a_j + q_j and (2 p_j + 1) b_j + q_j.
 * @throws Error(NotConvex) if f is not convex.
 */
template<typename Scalar>
Scalar prox_convex(const PiecewiseQuadratic<Scalar>& f, Scalar u)
{
  if (f.empty()) { throw Error(ErrorCode::EmptyDomain, "prox of an empty function"); }
  if (!is_convex(f)) { throw Error(ErrorCode::NotConvex, "prox_convex requires a convex function"); }
  return detail::prox_convex_unchecked(f.pieces(), u);
}

/// The threshold sequence of the closed-form convex prox, in table order.
template<typename Scalar>
std::vector<Scalar> prox_thresholds(const PiecewiseQuadratic<Scalar>& f)
{
  std::vector<Scalar> t;
  for (const auto& pc : f.pieces()) {
    const Scalar c = Scalar(2) * pc.p + Scalar(1);
    t.push_back(c * pc.a + pc.q);
    t.push_back(c * pc.b + pc.q);
  }
  return t;
}

/// Supporting line alpha x + beta touching g1 at `left` and g2 at `right`.
template<typename Scalar>
struct Bridge
{
  enum class Kind { MidpointMidpoint, MidpointEndpoint, EndpointMidpoint, EndpointEndpoint };
  Scalar slope;
  Scalar intercept;
  Scalar left;
  Scalar right;
  Kind kind;
};

namespace detail {

template<typename Scalar>
Scalar bridge_tolerance(Scalar alpha, Scalar beta)
{
  return Scalar(1e-9) * (Scalar(1) + std::abs(alpha) + std::abs(beta));
}

/**
 * alpha in the subdifferential of g at x and g(x) = alpha x + beta.
 * x = -inf / +inf stands for tangency at an infinite end: g linear with slope
 * alpha and lying on or above the line.
 */
template<typename Scalar>
bool supports(const QuadPiece<Scalar>& g, Scalar x, Scalar alpha, Scalar beta, Scalar tol)
{
  if (std::isinf(x)) {
    const bool at_end = x < 0 ? g.a == -infinity<Scalar>() : g.b == infinity<Scalar>();
    return at_end && g.p == Scalar(0) && std::abs(alpha - g.q) <= tol && g.r >= beta - tol;
  }
  if (!g.covers(x)) { return false; }
  if (std::abs(g(x) - (alpha * x + beta)) > tol * (Scalar(1) + std::abs(x))) { return false; }
  if (g.is_point()) { return true; }
  const Scalar d = g.slope(x);
  if (x == g.a) { return alpha <= d + tol; }
  if (x == g.b) { return alpha >= d - tol; }
  return std::abs(alpha - d) <= tol;
}

template<typename Scalar>
std::vector<Scalar> finite_ends(const QuadPiece<Scalar>& g)
{
  std::vector<Scalar> ends;
  if (std::isfinite(g.a)) { ends.push_back(g.a); }
  if (std::isfinite(g.b) && g.b != g.a) { ends.push_back(g.b); }
  return ends;
}

/**
 * Common supporting line of two convex pieces with g1 left of g2.
 *
 * Candidate families are tried in order: tangent at interior points of both
 * pieces, interior of one and an endpoint (or infinite end) of the other, and
 * endpoint to endpoint. The first candidate meeting the tangency conditions
 * is returned.
 */
template<typename Scalar>
std::optional<Bridge<Scalar>> find_bridge(const QuadPiece<Scalar>& g1, const QuadPiece<Scalar>& g2)
{
  using Kind = typename Bridge<Scalar>::Kind;
  constexpr Scalar inf = infinity<Scalar>();

  auto valid = [&](Scalar alpha, Scalar beta, Scalar x1, Scalar x2) {
    if (!std::isfinite(alpha) || !std::isfinite(beta) || !(x1 <= x2)) { return false; }
    const Scalar tol = bridge_tolerance(alpha, beta);
    return supports(g1, x1, alpha, beta, tol) && supports(g2, x2, alpha, beta, tol);
  };
  auto interior = [](const QuadPiece<Scalar>& g, Scalar x) { return g.a < x && x < g.b; };

  // midpoint to midpoint
  if (g1.p > 0 && g2.p > 0 && !g1.is_point() && !g2.is_point()) {
    const Scalar dq = g1.q - g2.q;
    const Scalar A = Scalar(4) * g1.p * (g1.p - g2.p);
    const Scalar B = Scalar(4) * g1.p * dq;
    const Scalar C = dq * dq + Scalar(4) * g2.p * (g1.r - g2.r);
    for (Scalar x1 : quadratic_roots(A, B, C)) {
      if (!interior(g1, x1)) { continue; }
      const Scalar alpha = g1.slope(x1);
      const Scalar x2 = (alpha - g2.q) / (Scalar(2) * g2.p);
      if (!interior(g2, x2)) { continue; }
      const Scalar beta = g1.r - g1.p * x1 * x1;
      if (valid(alpha, beta, x1, x2)) { return Bridge<Scalar>{alpha, beta, x1, x2, Kind::MidpointMidpoint}; }
    }
  }

  // midpoint of g1 to an endpoint of g2
  if (g1.p > 0 && !g1.is_point()) {
    for (Scalar x2 : finite_ends(g2)) {
      const Scalar y2 = g2(x2);
      Scalar d = (g1(x2) - y2) / g1.p;
      if (d < 0) { continue; }
      const Scalar s = std::sqrt(d);
      for (Scalar x1 : {x2 - s, x2 + s}) {
        if (!interior(g1, x1)) { continue; }
        const Scalar alpha = g1.slope(x1);
        const Scalar beta = g1.r - g1.p * x1 * x1;
        if (valid(alpha, beta, x1, x2)) { return Bridge<Scalar>{alpha, beta, x1, x2, Kind::MidpointEndpoint}; }
      }
    }
    if (g2.b == inf && g2.p == 0) {
      const Scalar alpha = g2.q;
      const Scalar x1 = (alpha - g1.q) / (Scalar(2) * g1.p);
      if (interior(g1, x1)) {
        const Scalar beta = g1.r - g1.p * x1 * x1;
        if (valid(alpha, beta, x1, inf)) { return Bridge<Scalar>{alpha, beta, x1, inf, Kind::MidpointEndpoint}; }
      }
    }
  }

  // endpoint of g1 to midpoint of g2
  if (g2.p > 0 && !g2.is_point()) {
    for (Scalar x1 : finite_ends(g1)) {
      const Scalar y1 = g1(x1);
      Scalar d = (g2(x1) - y1) / g2.p;
      if (d < 0) { continue; }
      const Scalar s = std::sqrt(d);
      for (Scalar x2 : {x1 + s, x1 - s}) {
        if (!interior(g2, x2)) { continue; }
        const Scalar alpha = g2.slope(x2);
        const Scalar beta = g2.r - g2.p * x2 * x2;
        if (valid(alpha, beta, x1, x2)) { return Bridge<Scalar>{alpha, beta, x1, x2, Kind::EndpointMidpoint}; }
      }
    }
    if (g1.a == -inf && g1.p == 0) {
      const Scalar alpha = g1.q;
      const Scalar x2 = (alpha - g2.q) / (Scalar(2) * g2.p);
      if (interior(g2, x2)) {
        const Scalar beta = g2.r - g2.p * x2 * x2;
        if (valid(alpha, beta, -inf, x2)) { return Bridge<Scalar>{alpha, beta, -inf, x2, Kind::EndpointMidpoint}; }
      }
    }
  }

  // endpoint to endpoint, including the infinite ends of linear pieces
  std::vector<Scalar> left = finite_ends(g1), right = finite_ends(g2);
  if (g1.a == -inf && g1.p == 0) { left.push_back(-inf); }
  if (g2.b == inf && g2.p == 0) { right.push_back(inf); }
  for (Scalar x1 : left) {
    for (Scalar x2 : right) {
      Scalar alpha, beta;
      if (std::isfinite(x1) && std::isfinite(x2)) {
        const Scalar y1 = g1(x1), y2 = g2(x2);
        if (x1 == x2) {
          // pieces touch: the union is already convex if values and slopes agree
          if (!g1.is_point()) {
            alpha = g1.slope(x1);
          } else if (!g2.is_point()) {
            alpha = g2.slope(x2);
          } else {
            alpha = 0;
          }
          beta = std::min(y1, y2) - alpha * x1;
        } else {
          alpha = (y2 - y1) / (x2 - x1);
          beta = y1 - alpha * x1;
        }
      } else if (std::isfinite(x2)) {
        alpha = g1.q;
        beta = g2(x2) - alpha * x2;
      } else if (std::isfinite(x1)) {
        alpha = g2.q;
        beta = g1(x1) - alpha * x1;
      } else {
        alpha = g1.q;
        beta = std::min(g1.r, g2.r);
        if (std::abs(g1.q - g2.q) > bridge_tolerance(alpha, beta)) { continue; }
      }
      if (valid(alpha, beta, x1, x2)) { return Bridge<Scalar>{alpha, beta, x1, x2, Kind::EndpointEndpoint}; }
    }
  }
  return std::nullopt;
}

/// Pieces of the envelope of min{g1, g2} given its bridge: g1 head, line, g2 tail.
template<typename Scalar>
void append_bridged(std::vector<QuadPiece<Scalar>>& out, const QuadPiece<Scalar>& g1,
                    const QuadPiece<Scalar>& g2, const Bridge<Scalar>& br)
{
  const std::size_t before = out.size();
  if (std::isfinite(br.left) && br.left > g1.a) { out.push_back({g1.p, g1.q, g1.r, g1.a, br.left}); }
  if (br.left < br.right) { out.push_back({Scalar(0), br.slope, br.intercept, br.left, br.right}); }
  if (std::isfinite(br.right) && br.right < g2.b) { out.push_back({g2.p, g2.q, g2.r, br.right, g2.b}); }
  if (out.size() == before) {
    out.push_back({Scalar(0), Scalar(0), std::min(g1(br.left), g2(br.right)), br.left, br.left});
  }
}

/// Envelope of min{psi, phi} for convex contiguous psi lying left of the convex piece phi.
template<typename Scalar>
std::vector<QuadPiece<Scalar>> merge_envelope(const std::vector<QuadPiece<Scalar>>& psi,
                                              const QuadPiece<Scalar>& phi)
{
  for (std::size_t jj = psi.size(); jj-- > 0;) {
    const auto& pj = psi[jj];
    const auto br = find_bridge(pj, phi);
    if (!br) { continue; }
    const Scalar tol = bridge_tolerance(br->slope, br->intercept);
    if (br->left == pj.a && jj > 0 && psi[jj - 1].slope(pj.a) > br->slope + tol) { continue; }
    if (br->left == pj.b && jj + 1 < psi.size() && psi[jj + 1].slope(pj.b) < br->slope - tol) { continue; }
    if (std::isinf(br->left) && jj != 0) { continue; }
    std::vector<QuadPiece<Scalar>> out(psi.begin(), psi.begin() + static_cast<std::ptrdiff_t>(jj));
    append_bridged(out, pj, phi, *br);
    return out;
  }
  throw Error(ErrorCode::Unbounded, "no supporting line joins the envelope to the next piece");
}

}  // namespace detail

/**
 * @brief Convex envelope of two convex pieces with g1 to the left of g2.
 *
 * The result has at most three pieces: a head of g1, the bridging line and a
 * tail of g2; degenerate parts are dropped.
 *
 * @throws Error(InvalidInput) if the intervals overlap in their interiors or a
 * piece is not convex.
 */
template<typename Scalar>
PiecewiseQuadratic<Scalar> envelope_two_piece(const QuadPiece<Scalar>& g1, const QuadPiece<Scalar>& g2)
{
  detail::validate_piece(g1);
  detail::validate_piece(g2);
  if (g1.b > g2.a) { throw Error(ErrorCode::InvalidInput, "pieces must satisfy b1 <= a2"); }
  if ((g1.p < 0 && !g1.is_point()) || (g2.p < 0 && !g2.is_point())) {
    throw Error(ErrorCode::InvalidInput, "pieces must be convex");
  }
  const auto br = detail::find_bridge(g1, g2);
  if (!br) { throw Error(ErrorCode::Unbounded, "envelope of the two pieces is unbounded below"); }
  std::vector<QuadPiece<Scalar>> out;
  detail::append_bridged(out, g1, g2, *br);
  return PiecewiseQuadratic<Scalar>(std::move(out));
}

/// The bridge found for two pieces, for inspection of which case applied.
template<typename Scalar>
std::optional<Bridge<Scalar>> bridge_two_piece(const QuadPiece<Scalar>& g1, const QuadPiece<Scalar>& g2)
{
  return detail::find_bridge(g1, g2);
}

/**
 * @brief Convex envelope f**, built left to right: psi^1 is the first piece
 * and psi^{i+1} is the envelope of min{psi^i, phi_i}.
 *
 * Concave pieces are replaced by their chords first (the envelope of a
 * minimum is unchanged when an operand is replaced by its envelope).
 *
 * @throws Error(Unbounded) if f is not convex and unbounded below.
 */
template<typename Scalar>
PiecewiseQuadratic<Scalar> envelope(const PiecewiseQuadratic<Scalar>& f)
{
  if (f.empty() || is_convex(f)) { return f; }
  (void)minimize(f);

  std::vector<QuadPiece<Scalar>> pieces = f.pieces();
  for (auto& pc : pieces) {
    if (pc.p < 0 && !pc.is_point()) {
      const Scalar ya = pc(pc.a), yb = pc(pc.b);
      const Scalar slope = (yb - ya) / (pc.b - pc.a);
      pc = {Scalar(0), slope, ya - slope * pc.a, pc.a, pc.b};
    }
  }

  std::vector<QuadPiece<Scalar>> psi{pieces.front()};
  for (std::size_t i = 1; i < pieces.size(); ++i) { psi = detail::merge_envelope(psi, pieces[i]); }
  return PiecewiseQuadratic<Scalar>(std::move(psi));
}

}  // namespace sapopt

#endif  // SAPOPT_PWQ_HPP
