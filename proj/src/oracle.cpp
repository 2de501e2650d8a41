#include "sapopt/oracle.hpp"

#include <Eigen/LU>
#include <Eigen/QR>

#include <cmath>
#include <functional>
#include <set>

namespace sapopt {

namespace {

std::vector<double> breakpoints(const Pwq& f)
{
  std::vector<double> bp;
  for (const auto& pc : f.pieces()) {
    if (std::isfinite(pc.a)) { bp.push_back(pc.a); }
    if (std::isfinite(pc.b)) { bp.push_back(pc.b); }
  }
  std::sort(bp.begin(), bp.end());
  bp.erase(std::unique(bp.begin(), bp.end()), bp.end());
  return bp;
}

/// Minimum of f over [lo, hi]; value +inf if the interval misses dom f.
Minimum<double> minimize_on(const Pwq& f, double lo, double hi)
{
  Minimum<double> best{0, infinity<double>()};
  for (const auto& pc : f.pieces()) {
    const double a = std::max(pc.a, lo), b = std::min(pc.b, hi);
    if (a > b) { continue; }
    const double target = std::isfinite(a) ? a : (std::isfinite(b) ? b : 0.0);
    const double x = detail::quad_argmin(pc.p, pc.q, a, b, target);
    const double v = pc(x);
    if (v < best.value) { best = {x, v}; }
  }
  return best;
}

/// Multiples of h in [lo, hi] together with the breakpoints inside it, restricted to dom f.
std::vector<double> axis_grid(const Pwq& f, double lo, double hi, double h)
{
  std::vector<double> pts;
  if (lo > hi) { return pts; }
  const double first = std::ceil(lo / h), last = std::floor(hi / h);
  for (double i = first; i <= last; i += 1) { pts.push_back(i * h); }
  pts.push_back(lo);
  pts.push_back(hi);
  for (double t : breakpoints(f)) {
    if (lo <= t && t <= hi) { pts.push_back(t); }
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  std::vector<double> in_domain;
  in_domain.reserve(pts.size());
  for (double t : pts) {
    if (std::isfinite(f(t))) { in_domain.push_back(t); }
  }
  return in_domain;
}

struct Candidate
{
  double value;
  std::vector<double> free;
};

}  // namespace

std::pair<double, double> search_box(const Pwq& f, double padding)
{
  std::vector<double> pts = breakpoints(f);
  for (const auto& pc : f.pieces()) {
    if (pc.p > 0) {
      const double v = -pc.q / (2 * pc.p);
      if (pc.covers(v)) { pts.push_back(v); }
    }
  }
  if (pts.empty()) { pts.push_back(0.0); }
  double lo = *std::min_element(pts.begin(), pts.end());
  double hi = *std::max_element(pts.begin(), pts.end());
  const double span = std::max(hi - lo, 1.0);
  lo = std::max(lo - padding * span, f.domain_lower());
  hi = std::min(hi + padding * span, f.domain_upper());
  return {lo, hi};
}

namespace {

/// Points where f drops below both one-sided limits: isolated points and
/// downward jumps between pieces. A grid over dependent coordinates never lands on them.
std::vector<double> drop_points(const Pwq& f)
{
  std::vector<double> out;
  const auto& pcs = f.pieces();
  for (std::size_t i = 0; i < pcs.size(); ++i) {
    const Piece& pc = pcs[i];
    if (pc.a == pc.b) {
      out.push_back(pc.a);
      continue;
    }
    // Right end of this piece against the start of the next one.
    if (i + 1 < pcs.size() && pcs[i + 1].a == pc.b && pcs[i + 1].a < pcs[i + 1].b) {
      const double t = pc.b, left = pc(t), right = pcs[i + 1](t);
      const double tol = 1e-12 * (1 + std::abs(left) + std::abs(right));
      if (std::abs(left - right) > tol) { out.push_back(t); }
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

OracleResult exhaustive_grid(const SapProblem& p, const GridSpec& g, std::vector<Eigen::Index>& dep_out)
{
  const Eigen::Index n = p.cols(), m = p.rows();
  const Matrix A = Matrix(p.A());

  // Dependent columns are picked greedily, convex components first, so that
  // nonconvex components end up as gridded free coordinates.
  std::vector<Eigen::Index> order;
  for (int pass = 0; pass < 2; ++pass) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (is_convex(p.f(i)) == (pass == 0)) { order.push_back(i); }
    }
  }
  std::vector<Eigen::Index> dep, fre;
  Matrix basis(m, 0);
  for (Eigen::Index i : order) {
    Matrix trial(m, basis.cols() + 1);
    trial << basis, A.col(i);
    Eigen::FullPivLU<Matrix> lu(trial);
    lu.setThreshold(1e-10);
    if (m > 0 && lu.rank() == trial.cols()) {
      basis = trial;
      dep.push_back(i);
    } else {
      fre.push_back(i);
    }
  }
  const std::size_t k = fre.size();
  if (k > 4) {
    throw Error(ErrorCode::TooManyDegreesOfFreedom,
                std::to_string(k) + " free coordinates; exhaustive search supports at most 4");
  }
  std::sort(fre.begin(), fre.end());
  dep_out = dep;

  const Eigen::Index r = Eigen::Index(dep.size());
  Matrix AF(m, Eigen::Index(k));
  for (std::size_t j = 0; j < k; ++j) { AF.col(Eigen::Index(j)) = A.col(fre[j]); }
  Vector x0 = Vector::Zero(r);
  Matrix M = Matrix::Zero(r, Eigen::Index(k));
  if (r > 0) {
    Eigen::ColPivHouseholderQR<Matrix> qr(basis);
    x0 = qr.solve(p.b());
    M = qr.solve(AF);
    if ((basis * x0 - p.b()).norm() > 1e-8 * (1 + p.b().norm())) {
      throw Error(ErrorCode::InvalidInput, "constraints A x = b are inconsistent");
    }
  } else if (p.b().norm() > 0) {
    throw Error(ErrorCode::InvalidInput, "constraints A x = b are inconsistent");
  }

  std::vector<std::vector<double>> dep_bp(dep.size());
  for (std::size_t j = 0; j < dep.size(); ++j) { dep_bp[j] = breakpoints(p.f(dep[j])); }

  Vector x(n);
  auto evaluate = [&](const std::vector<double>& xf) {
    for (std::size_t j = 0; j < k; ++j) { x[fre[j]] = xf[j]; }
    double total = 0;
    for (std::size_t j = 0; j < dep.size(); ++j) {
      double v = x0[Eigen::Index(j)];
      for (std::size_t t = 0; t < k; ++t) { v -= M(Eigen::Index(j), Eigen::Index(t)) * xf[t]; }
      const auto& bp = dep_bp[j];
      auto it = std::lower_bound(bp.begin(), bp.end(), v);
      for (auto c : {it, it == bp.begin() ? it : it - 1}) {
        if (c != bp.end() && std::abs(*c - v) <= 1e-9 * (1 + std::abs(*c))) { v = *c; }
      }
      x[dep[j]] = v;
    }
    for (Eigen::Index i = 0; i < n && total < infinity<double>(); ++i) { total += p.f(i)(x[i]); }
    return total;
  };

  auto finish = [&](const std::vector<double>& xf, double value) {
    evaluate(xf);
    return OracleResult{x, value};
  };

  if (k == 0) {
    std::vector<double> none;
    const double v = evaluate(none);
    return OracleResult{x, v};
  }

  std::vector<double> box_lo(k), box_hi(k);
  for (std::size_t j = 0; j < k; ++j) {
    const auto box = search_box(p.f(fre[j]), g.padding);
    box_lo[j] = g.lower ? std::max((*g.lower)[Eigen::Index(j)], p.f(fre[j]).domain_lower()) : box.first;
    box_hi[j] = g.upper ? std::min((*g.upper)[Eigen::Index(j)], p.f(fre[j]).domain_upper()) : box.second;
  }

  // One grid pass over the box [lo, hi]; keeps the `keep` best points.
  auto pass = [&](const std::vector<double>& lo, const std::vector<double>& hi, double h, std::size_t keep,
                  std::vector<Candidate>& best) -> bool {
    std::vector<std::vector<double>> axes(k);
    double total = 1;
    for (std::size_t j = 0; j < k; ++j) {
      axes[j] = axis_grid(p.f(fre[j]), lo[j], hi[j], h);
      total *= double(axes[j].size());
    }
    if (total > double(g.budget)) { return false; }
    if (total == 0) { return true; }
    std::vector<std::size_t> idx(k, 0);
    std::vector<double> xf(k);
    while (true) {
      for (std::size_t j = 0; j < k; ++j) { xf[j] = axes[j][idx[j]]; }
      const double v = evaluate(xf);
      if (v < infinity<double>()) {
        if (best.size() < keep) {
          best.push_back({v, xf});
        } else {
          auto worst = std::max_element(best.begin(), best.end(),
                                        [](const Candidate& a, const Candidate& b) { return a.value < b.value; });
          if (v < worst->value) { *worst = {v, xf}; }
        }
      }
      std::size_t d = 0;
      while (d < k && ++idx[d] == axes[d].size()) { idx[d++] = 0; }
      if (d == k) { break; }
    }
    return true;
  };

  auto pick = [](const std::vector<Candidate>& c) {
    return *std::min_element(c.begin(), c.end(), [](const Candidate& a, const Candidate& b) {
      return a.value < b.value || (a.value == b.value && a.free < b.free);
    });
  };

  std::vector<Candidate> best;
  if (pass(box_lo, box_hi, g.step, 1, best)) {
    if (best.empty()) { return OracleResult{Vector::Constant(n, std::nan("")), infinity<double>()}; }
    const Candidate c = pick(best);
    return finish(c.free, c.value);
  }
  if (!g.zoom) { throw Error(ErrorCode::BudgetExceeded, "grid exceeds the point budget"); }

  // coarse-to-fine: a coarse pass over the whole box, then shrinking windows around the best points
  const double per_axis = std::floor(std::pow(double(g.budget), 1.0 / double(k)));
  double h = 0;
  for (std::size_t j = 0; j < k; ++j) {
    const double room = per_axis - double(breakpoints(p.f(fre[j])).size()) - 2;
    if (room < 2) { throw Error(ErrorCode::BudgetExceeded, "breakpoints alone exceed the point budget"); }
    h = std::max(h, (box_hi[j] - box_lo[j]) / (room - 1));
  }
  best.clear();
  while (!pass(box_lo, box_hi, h, 8, best)) {
    h *= 2;
    best.clear();
  }
  if (best.empty()) { return OracleResult{Vector::Constant(n, std::nan("")), infinity<double>()}; }

  std::vector<Candidate> refined;
  for (const Candidate& start : best) {
    Candidate cur = start;
    double hc = h;
    while (hc > g.step) {
      std::vector<double> lo(k), hi(k);
      for (std::size_t j = 0; j < k; ++j) {
        lo[j] = std::max(box_lo[j], cur.free[j] - 2 * hc);
        hi[j] = std::min(box_hi[j], cur.free[j] + 2 * hc);
      }
      double hn = std::max(g.step, 4 * hc / std::max(per_axis - 40, 4.0));
      std::vector<Candidate> local{cur};
      while (!pass(lo, hi, hn, 1, local)) { hn *= 2; }
      cur = pick(local);
      if (hn >= hc) { break; }
      hc = hn;
    }
    refined.push_back(cur);
  }
  const Candidate c = pick(refined);
  return finish(c.free, c.value);
}

}  // namespace

OracleResult exhaustive(const SapProblem& p, const GridSpec& g)
{
  // The grid covers free coordinates only, so an optimum with a dependent
  // coordinate sitting on a drop point is found by pinning that coordinate
  // with an extra constraint row and searching the smaller subspace.
  const Eigen::Index n = p.cols();
  std::vector<std::vector<double>> drops(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) { drops[std::size_t(i)] = drop_points(p.f(i)); }
  std::vector<Pwq> fs;
  for (Eigen::Index i = 0; i < n; ++i) { fs.push_back(p.f(i)); }

  std::set<std::vector<std::pair<Eigen::Index, double>>> seen;
  OracleResult best{Vector::Constant(n, std::nan("")), infinity<double>()};
  std::function<void(const std::vector<std::pair<Eigen::Index, double>>&)> search =
      [&](const std::vector<std::pair<Eigen::Index, double>>& pins) {
        if (!seen.insert(pins).second) { return; }
        const Eigen::Index m = p.rows() + Eigen::Index(pins.size());
        Matrix A(m, n);
        Vector b(m);
        A.topRows(p.rows()) = Matrix(p.A());
        b.head(p.rows()) = p.b();
        for (std::size_t j = 0; j < pins.size(); ++j) {
          A.row(p.rows() + Eigen::Index(j)) = Vector::Unit(n, pins[j].first).transpose();
          b[p.rows() + Eigen::Index(j)] = pins[j].second;
        }
        GridSpec gs = g;
        if (!pins.empty()) {
          gs.lower.reset();
          gs.upper.reset();
        }
        std::vector<Eigen::Index> dep;
        OracleResult r;
        try {
          r = exhaustive_grid(new_problem(A, b, fs), gs, dep);
        } catch (const Error& e) {
          // A pin can contradict the constraints or repeat one of them.
          if (!pins.empty() && e.code() == ErrorCode::InvalidInput) { return; }
          throw;
        }
        if (r.value < best.value) { best = r; }
        const long free_dims = long(n) - long(dep.size());
        if (free_dims == 0) { return; }
        for (Eigen::Index i : dep) {
          bool pinned = false;
          for (const auto& pin : pins) { pinned = pinned || pin.first == i; }
          if (pinned) { continue; }
          for (double t : drops[std::size_t(i)]) {
            auto next = pins;
            next.emplace_back(i, t);
            std::sort(next.begin(), next.end());
            search(next);
          }
        }
      };
  search({});
  return best;
}

OracleResult dp_solve(const SapProblem& p, const GridSpec& g)
{
  const Eigen::Index n = p.cols(), m = p.rows();
  if (m > 2) {
    throw Error(ErrorCode::TooManyConstraintRows, std::to_string(m) + " constraint rows; the value-function method supports at most 2");
  }
  if (!(g.step > 0)) { throw Error(ErrorCode::InvalidInput, "grid step must be positive"); }
  const Matrix A = Matrix(p.A());
  // Per-row steps no larger than g.step with b on the grid, so the root lookup is exact.
  std::array<double, 2> hs{g.step, g.step};
  for (Eigen::Index d = 0; d < m; ++d) {
    const double bd = std::abs(p.b()[d]);
    if (bd > 0) { hs[std::size_t(d)] = bd / std::max(1.0, std::ceil(bd / g.step)); }
  }

  if (m == 0) {
    Vector x(n);
    double total = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto mn = minimize(p.f(i));
      x[i] = mn.argmin;
      total += mn.value;
    }
    return {x, total};
  }

  struct Table
  {
    std::array<long, 2> lo{0, 0};
    std::array<long, 2> size{1, 1};
    std::vector<double> val;
    std::vector<long> arg;
    std::vector<double> xs;
    int left = -1, right = -1;
    Eigen::Index leaf = -1;

    long flat(long c0, long c1) const { return (c0 - lo[0]) * size[1] + (c1 - lo[1]); }
    std::array<long, 2> cell(long f) const { return {lo[0] + f / size[1], lo[1] + f % size[1]}; }
  };

  std::vector<Table> nodes;
  nodes.reserve(std::size_t(2 * n));
  std::vector<int> level;

  for (Eigen::Index i = 0; i < n; ++i) {
    const Pwq& f = p.f(i);
    double lo, hi;
    if (g.lower && g.upper) {
      lo = std::max((*g.lower)[i], f.domain_lower());
      hi = std::min((*g.upper)[i], f.domain_upper());
    } else {
      std::tie(lo, hi) = search_box(f, g.padding);
    }
    Table t;
    t.leaf = i;
    for (Eigen::Index d = 0; d < m; ++d) {
      const double a = A(d, i), h = hs[std::size_t(d)];
      const double z1 = a * lo, z2 = a * hi;
      t.lo[std::size_t(d)] = std::lround(std::min(z1, z2) / h);
      t.size[std::size_t(d)] = std::lround(std::max(z1, z2) / h) - t.lo[std::size_t(d)] + 1;
    }
    const double cells = double(t.size[0]) * double(t.size[1]);
    if (cells > double(g.budget)) { throw Error(ErrorCode::BudgetExceeded, "value table exceeds the budget"); }
    t.val.assign(std::size_t(cells), infinity<double>());
    t.xs.assign(std::size_t(cells), 0.0);
    for (long c0 = t.lo[0]; c0 < t.lo[0] + t.size[0]; ++c0) {
      if (m == 1 && A(0, i) != 0) {
        // One row: the cell centre maps to a single x, which keeps A x = b exact.
        const double x = double(c0) * hs[0] / A(0, i);
        if (x < lo || x > hi) { continue; }
        const long fl = t.flat(c0, 0);
        t.val[std::size_t(fl)] = f(x);
        t.xs[std::size_t(fl)] = x;
        continue;
      }
      for (long c1 = t.lo[1]; c1 < t.lo[1] + t.size[1]; ++c1) {
        double xl = lo, xr = hi;
        const long cc[2] = {c0, c1};
        for (Eigen::Index d = 0; d < m; ++d) {
          const double a = A(d, i), h = hs[std::size_t(d)];
          if (a == 0) { continue; }
          double e1 = (double(cc[d]) - 0.5) * h / a, e2 = (double(cc[d]) + 0.5) * h / a;
          if (e1 > e2) { std::swap(e1, e2); }
          xl = std::max(xl, e1);
          xr = std::min(xr, e2);
        }
        if (xl > xr) { continue; }
        const auto mn = minimize_on(f, xl, xr);
        const long fl = t.flat(c0, c1);
        t.val[std::size_t(fl)] = mn.value;
        t.xs[std::size_t(fl)] = mn.argmin;
      }
    }
    nodes.push_back(std::move(t));
    level.push_back(int(nodes.size()) - 1);
  }

  double work = 0;
  while (level.size() > 1) {
    std::vector<int> next;
    for (std::size_t j = 0; j + 1 < level.size(); j += 2) {
      const Table& L = nodes[std::size_t(level[j])];
      const Table& R = nodes[std::size_t(level[j + 1])];
      std::vector<long> fl, fr;
      for (long f = 0; f < long(L.val.size()); ++f) {
        if (L.val[std::size_t(f)] < infinity<double>()) { fl.push_back(f); }
      }
      for (long f = 0; f < long(R.val.size()); ++f) {
        if (R.val[std::size_t(f)] < infinity<double>()) { fr.push_back(f); }
      }
      work += double(fl.size()) * double(fr.size());
      Table t;
      for (int d = 0; d < 2; ++d) {
        t.lo[std::size_t(d)] = L.lo[std::size_t(d)] + R.lo[std::size_t(d)];
        t.size[std::size_t(d)] = L.size[std::size_t(d)] + R.size[std::size_t(d)] - 1;
      }
      const double cells = double(t.size[0]) * double(t.size[1]);
      if (work > double(g.budget) || cells > double(g.budget)) {
        throw Error(ErrorCode::BudgetExceeded, "value-function combine exceeds the budget");
      }
      t.val.assign(std::size_t(cells), infinity<double>());
      t.arg.assign(std::size_t(cells), -1);
      for (long a : fl) {
        const auto ca = L.cell(a);
        const double va = L.val[std::size_t(a)];
        for (long b : fr) {
          const auto cb = R.cell(b);
          const long c = t.flat(ca[0] + cb[0], ca[1] + cb[1]);
          const double v = va + R.val[std::size_t(b)];
          if (v < t.val[std::size_t(c)]) {
            t.val[std::size_t(c)] = v;
            t.arg[std::size_t(c)] = a;
          }
        }
      }
      t.left = level[j];
      t.right = level[j + 1];
      nodes.push_back(std::move(t));
      next.push_back(int(nodes.size()) - 1);
    }
    if (level.size() % 2 == 1) { next.push_back(level.back()); }
    level = std::move(next);
  }

  const Table& root = nodes[std::size_t(level[0])];
  std::array<long, 2> target{0, 0};
  for (Eigen::Index d = 0; d < m; ++d) { target[std::size_t(d)] = std::lround(p.b()[d] / hs[std::size_t(d)]); }
  for (int d = 0; d < 2; ++d) {
    if (target[std::size_t(d)] < root.lo[std::size_t(d)]
        || target[std::size_t(d)] >= root.lo[std::size_t(d)] + root.size[std::size_t(d)]) {
      return {Vector::Constant(n, std::nan("")), infinity<double>()};
    }
  }
  const long start = root.flat(target[0], target[1]);
  if (!(root.val[std::size_t(start)] < infinity<double>())) {
    return {Vector::Constant(n, std::nan("")), infinity<double>()};
  }

  Vector x(n);
  std::function<void(int, long)> assign = [&](int node, long f) {
    const Table& t = nodes[std::size_t(node)];
    if (t.leaf >= 0) {
      x[t.leaf] = t.xs[std::size_t(f)];
      return;
    }
    const Table& L = nodes[std::size_t(t.left)];
    const Table& R = nodes[std::size_t(t.right)];
    const long a = t.arg[std::size_t(f)];
    const auto c = t.cell(f);
    const auto ca = L.cell(a);
    assign(t.left, a);
    assign(t.right, R.flat(c[0] - ca[0], c[1] - ca[1]));
  };
  assign(level[0], start);
  return {x, objective(p, x)};
}

ProxReference prox_oracle(const Pwq& f, double u, double step, long budget)
{
  if (f.empty()) { throw Error(ErrorCode::EmptyDomain, "prox of an empty function"); }
  if (!(step > 0)) { throw Error(ErrorCode::InvalidInput, "grid step must be positive"); }
  // every candidate minimizer is a piece endpoint or a shifted vertex
  std::vector<double> pts = breakpoints(f);
  pts.push_back(u);
  for (const auto& pc : f.pieces()) {
    const double c = 2 * pc.p + 1;
    if (c > 0) { pts.push_back(std::clamp((u - pc.q) / c, pc.a, pc.b)); }
  }
  std::vector<double> finite;
  for (double t : pts) {
    if (std::isfinite(t)) { finite.push_back(t); }
  }
  const double lo = *std::min_element(finite.begin(), finite.end()) - 1;
  const double hi = *std::max_element(finite.begin(), finite.end()) + 1;

  ProxReference best{0, infinity<double>()};
  long used = 0;
  auto consider = [&](const QuadPiece<double>& pc, double x) {
    const double d = x - u;
    const double v = pc(x) + 0.5 * d * d;
    if (v < best.value) { best = {x, v}; }
  };
  for (const auto& pc : f.pieces()) {
    const double a = std::max(pc.a, lo), b = std::min(pc.b, hi);
    if (a > b) { continue; }
    const double first = std::ceil(a / step), last = std::floor(b / step);
    used += long(std::max(0.0, last - first + 1));
    if (used > budget) { throw Error(ErrorCode::BudgetExceeded, "prox grid exceeds the budget"); }
    if (std::isfinite(pc.a) && pc.a >= lo) { consider(pc, pc.a); }
    for (double i = first; i <= last; i += 1) { consider(pc, i * step); }
    if (std::isfinite(pc.b) && pc.b <= hi) { consider(pc, pc.b); }
  }
  return best;
}

SampledHull::SampledHull(std::vector<double> xs, std::vector<double> ys)
    : xs_(std::move(xs)), ys_(std::move(ys))
{}

double SampledHull::operator()(double x) const
{
  if (xs_.empty() || x < xs_.front() || x > xs_.back()) { return infinity<double>(); }
  auto it = std::lower_bound(xs_.begin(), xs_.end(), x);
  const std::size_t j = std::size_t(it - xs_.begin());
  if (xs_[j] == x) { return ys_[j]; }
  const double t = (x - xs_[j - 1]) / (xs_[j] - xs_[j - 1]);
  return ys_[j - 1] + t * (ys_[j] - ys_[j - 1]);
}

SampledHull envelope_oracle(const Pwq& f, double step, double lo, double hi, long budget)
{
  if (!(step > 0)) { throw Error(ErrorCode::InvalidInput, "grid step must be positive"); }
  if (!std::isfinite(lo) || !std::isfinite(hi)) {
    throw Error(ErrorCode::InvalidInput, "hull sampling window must be bounded");
  }
  std::vector<std::pair<double, double>> pts;
  for (const auto& pc : f.pieces()) {
    const double a = std::max(pc.a, lo), b = std::min(pc.b, hi);
    if (a > b) { continue; }
    const double first = std::ceil(a / step), last = std::floor(b / step);
    if (double(pts.size()) + (last - first + 4) > double(budget)) {
      throw Error(ErrorCode::BudgetExceeded, "hull sample exceeds the budget");
    }
    pts.emplace_back(a, pc(a));
    for (double i = first; i <= last; i += 1) { pts.emplace_back(i * step, pc(i * step)); }
    pts.emplace_back(b, pc(b));
    if (pc.p > 0) {
      const double v = -pc.q / (2 * pc.p);
      if (a < v && v < b) { pts.emplace_back(v, pc(v)); }
    }
  }
  std::sort(pts.begin(), pts.end());
  std::vector<double> hx, hy;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i > 0 && pts[i].first == pts[i - 1].first) { continue; }
    const double x = pts[i].first, y = pts[i].second;
    while (hx.size() >= 2) {
      const std::size_t s = hx.size();
      const double cross = (hx[s - 1] - hx[s - 2]) * (y - hy[s - 2]) - (hy[s - 1] - hy[s - 2]) * (x - hx[s - 2]);
      if (cross > 0) { break; }
      hx.pop_back();
      hy.pop_back();
    }
    hx.push_back(x);
    hy.push_back(y);
  }
  return SampledHull(std::move(hx), std::move(hy));
}

SampledHull envelope_oracle(const Pwq& f, double step, long budget)
{
  return envelope_oracle(f, step, f.domain_lower(), f.domain_upper(), budget);
}

}  // namespace sapopt
