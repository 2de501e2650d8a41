// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

#include "sapopt/admm.hpp"
#include "sapopt/io.hpp"
#include "sapopt/portfolio.hpp"
#include "support.hpp"

using namespace sapopt;
using namespace sapopt::testing;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome
{
  bool pass = true;
  std::string detail;
};

/// Collects the first few failure messages of one criterion.
struct Checker
{
  bool ok = true;
  int failures = 0;
  std::string first;

  void expect(bool cond, const std::string& what)
  {
    if (cond) { return; }
    ok = false;
    if (failures++ == 0) { first = what; }
  }

  Outcome outcome(const std::string& summary) const
  {
    if (ok) { return {true, summary}; }
    return {false, summary + "; " + std::to_string(failures) + " failure(s), first: " + first};
  }
};

std::string fmt(const char* f, double v)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// 1. Envelope: minorant, convex, matches the sampled hull.
Outcome envelope_property()
{
  const auto t0 = Clock::now();
  Rng rng(1001);
  Checker c;
  double worst_slack = kInf, worst_hull = 0;
  for (int t = 0; t < 500; ++t) {
    const Pwq f = random_pwq(rng, 6);
    const Pwq env = envelope(f);
    const double lo = f.domain_lower(), hi = f.domain_upper();
    c.expect(is_convex(env), "envelope " + std::to_string(t) + " is not convex");
    std::vector<double> xs, ys;
    const long steps = long(std::floor((hi - lo) / 1e-3));
    for (long i = 0; i <= steps; ++i) {
      const double x = lo + double(i) * 1e-3;
      const double e = env(x), v = f(x);
      if (std::isfinite(v)) {
        worst_slack = std::min(worst_slack, v - e);
        c.expect(v - e >= -1e-9, "envelope above f at x=" + fmt("%.6g", x));
      }
      if (std::isfinite(e)) {
        xs.push_back(x);
        ys.push_back(e);
      }
    }
    for (std::size_t i = 0; i < xs.size(); i += 11) {
      for (std::size_t j = i + 2; j < xs.size(); j += 37) {
        const double mid = 0.5 * (xs[i] + xs[j]);
        c.expect(env(mid) <= 0.5 * (ys[i] + ys[j]) + 1e-9, "midpoint convexity fails at " + fmt("%.6g", mid));
      }
    }
    const BruteHull hull = brute_hull(f, lo, hi, 1e-3);
    for (long i = 0; i <= steps; i += 5) {
      const double x = lo + double(i) * 1e-3, h = hull(x);
      if (!std::isfinite(h)) { continue; }
      worst_hull = std::max(worst_hull, std::abs(env(x) - h));
      c.expect(std::abs(env(x) - h) <= 2e-3, "hull mismatch at x=" + fmt("%.6g", x));
    }
  }
  const double secs = seconds_since(t0);
  c.expect(secs < 60, "runtime " + fmt("%.1f s", secs));
  return c.outcome("500 functions, min f-env " + fmt("%.2e", worst_slack) + ", max |env-hull| " + fmt("%.2e", worst_hull)
                   + ", " + fmt("%.1f s", secs));
}

// 2. Prox against a grid search; the convex fast path against the general one.
Outcome prox_property()
{
  const auto t0 = Clock::now();
  Rng rng(1002);
  Checker c;
  double worst = -kInf;
  int convex_cases = 0;
  auto check = [&](const Pwq& f, double u) {
    const double x = prox(f, u);
    const double got = f(x) + 0.5 * (x - u) * (x - u);
    const double ref = brute_prox_value(f, u, 1e-4);
    worst = std::max(worst, got - ref);
    c.expect(got <= ref + 1e-8, "prox worse than grid by " + fmt("%.3e", got - ref));
    if (is_convex(f)) {
      ++convex_cases;
      const double xc = prox_convex(f, u);
      c.expect(std::abs(xc - x) <= 1e-9 * (1 + std::abs(x)), "prox_convex differs: " + fmt("%.3e", xc - x));
    }
  };
  for (int t = 0; t < 200; ++t) {
    // Every fourth function is convex so the fast path is exercised.
    const Pwq f = t % 4 == 3 ? random_convex_pwq(rng, 5, t % 8 == 3) : random_pwq(rng, 6);
    for (int s = 0; s < 50; ++s) { check(f, rng.uniform(-5, 5)); }
  }
  const double secs = seconds_since(t0);
  c.expect(secs < 60, "runtime " + fmt("%.1f s", secs));
  return c.outcome("10000 prox calls, max excess over grid " + fmt("%.2e", worst) + ", "
                   + std::to_string(convex_cases) + " convex comparisons, " + fmt("%.1f s", secs));
}

struct ConvexRecord
{
  double o_best;
  double d_star;
};

// 3. Convex problems against the direct solve of the optimality conditions.
Outcome convex_accuracy(std::vector<ConvexRecord>& records)
{
  const auto t0 = Clock::now();
  Rng rng(1003);
  Checker c;
  double worst = 0;
  for (int t = 0; t < 100; ++t) {
    const Eigen::Index n = rng.integer(2, 50);
    const Eigen::Index m = rng.integer(1, int(std::min<Eigen::Index>(10, n - 1)));
    const ConvexInstance inst = random_convex_instance(rng, n, m);
    const SolveResult r = solve(inst.problem());
    const double ref = inst.value(equality_qp(inst.p, inst.q, inst.A, inst.b));
    const double rel = std::abs(r.o_best - ref) / std::max(1.0, std::abs(ref));
    worst = std::max(worst, rel);
    c.expect(r.status == SolveStatus::Converged, "instance " + std::to_string(t) + " did not converge");
    c.expect(rel <= 1e-3, "instance " + std::to_string(t) + " relative error " + fmt("%.3e", rel));
    records.push_back({r.o_best, r.d_star.value_or(kInf)});
  }
  const double secs = seconds_since(t0);
  c.expect(secs < 120, "runtime " + fmt("%.1f s", secs));
  return c.outcome("100 instances, max relative error " + fmt("%.2e", worst) + ", " + fmt("%.1f s", secs));
}

/// Runs the command-line tool and returns its exit status; stdout goes to `out`.
int run_cli(const std::string& args, const fs::path& out)
{
  const std::string cmd = std::string(SAPOPT_CLI) + " " + args + " > " + out.string() + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// 4. d* <= o_best everywhere; d* <= oracle <= o_best on small nonconvex problems.
Outcome bound_sandwich(const std::vector<ConvexRecord>& convex)
{
  const auto t0 = Clock::now();
  Checker c;
  auto sandwich = [&](double d, double o, const std::string& where) {
    c.expect(d <= o + 1e-6 * (1 + std::abs(o)), where + ": d* " + fmt("%.8g", d) + " above o_best " + fmt("%.8g", o));
  };
  for (std::size_t i = 0; i < convex.size(); ++i) {
    sandwich(convex[i].d_star, convex[i].o_best, "convex " + std::to_string(i));
  }

  const fs::path dir = fs::temp_directory_path() / ("sapopt_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  Rng rng(1004);
  const double step = 1e-3;
  double worst_lower = kInf, worst_upper = kInf;
  int instances = 0;
  for (int t = 0; t < 50; ++t) {
    const Eigen::Index m = 1 + t % 3, free = 1 + (t / 3) % 3;
    const SapProblem p = random_card_instance(rng, m + free, m);
    const SolveResult r = solve(p);
    const std::string where = "nonconvex " + std::to_string(t);
    if (r.status == SolveStatus::NoFeasibleCandidate || !r.d_star) {
      c.expect(false, where + ": no candidate");
      continue;
    }
    sandwich(*r.d_star, r.o_best, where);

    const fs::path file = dir / ("p" + std::to_string(t) + ".json");
    std::ofstream(file) << dump(problem_to_json(p));
    const fs::path out = dir / "oracle.json";
    const int code = run_cli("oracle " + file.string() + " --grid-step " + fmt("%g", step), out);
    c.expect(code == 0, where + ": oracle exit code " + std::to_string(code));
    if (code != 0) { continue; }
    std::ifstream in(out);
    std::stringstream ss;
    ss << in.rdbuf();
    const Json j = parse_json(ss.str());
    const double oracle = j["o_best"].get<double>();
    // Grid tolerance: the grid point next to the optimum differs by at most one
    // step per coordinate and the tracking terms have slope at most 12 on [-3, 3].
    const double tol = 12 * step * double(p.cols());
    worst_lower = std::min(worst_lower, oracle - *r.d_star);
    worst_upper = std::min(worst_upper, r.o_best + tol - oracle);
    c.expect(*r.d_star <= oracle + 1e-6 * (1 + std::abs(oracle)), where + ": oracle below d*");
    c.expect(oracle <= r.o_best + tol, where + ": oracle " + fmt("%.8g", oracle) + " above o_best " + fmt("%.8g", r.o_best));
    ++instances;
  }
  fs::remove_all(dir);
  return c.outcome(std::to_string(convex.size()) + " convex + " + std::to_string(instances)
                   + " oracle-checked instances, min(oracle - d*) " + fmt("%.2e", worst_lower)
                   + ", min(o_best + tol - oracle) " + fmt("%.2e", worst_upper) + ", " + fmt("%.1f s", seconds_since(t0)));
}

// 5. Full-size rebalancing problem.
Outcome scale_performance()
{
  Checker c;
  const PortfolioSpec spec = synthesize_instance(1, 1000, 100, 2);
  const PortfolioSap ps = build_sap(spec);
  SolveOptions o;
  o.scaling = portfolio_scaling(spec);
  const SolveResult r = solve(ps.problem, o, ps.recover);
  const double total = r.wall_ms / 1e3, relax = r.relaxation_ms / 1e3;
  c.expect(r.status == SolveStatus::Converged, std::string("status ") + to_string(r.status));
  c.expect(total <= 5, "solve took " + fmt("%.2f s", total));
  c.expect(relax <= 3, "relaxation took " + fmt("%.2f s", relax));
  c.expect(r.gap.has_value() && *r.gap >= 0, "gap missing or negative");
  return c.outcome("n=1101 m=101, " + std::string(to_string(r.status)) + " in " + std::to_string(r.iterations)
                   + " iterations, " + fmt("%.3f s", total) + " total, " + fmt("%.3f s", relax) + " relaxation, gap "
                   + fmt("%.2f bp", r.gap.value_or(std::nan("")) * 1e4));
}

// 6. Each way a bridge can touch two pieces, against the sampled hull.
Outcome bridge_cases()
{
  using Kind = Bridge<double>::Kind;
  Checker c;
  struct Case
  {
    std::string name;
    Piece g1, g2;
    Kind kind;
    double lo, hi;              // comparison window
    double sample_lo, sample_hi;  // hull sample range (wider for rays)
    double step;
  };
  const std::vector<Case> cases{
      {"midpoint-midpoint", {1, 0, 0, -2, 1}, {1, -6, 9, 2, 5}, Kind::MidpointMidpoint, -2, 5, -2, 5, 1e-3},
      {"midpoint-endpoint", {1, 0, 0, -1, 1}, {0, 0, 0, 3, 3}, Kind::MidpointEndpoint, -1, 3, -1, 3, 1e-3},
      {"midpoint-endpoint, ray to +inf", {1, 0, 0, -2, 2}, {0, 1, 1, 3, kInf}, Kind::MidpointEndpoint, -2, 6, -2, 1e4, 1e-2},
      {"endpoint-midpoint", {0, 0, 0, -3, -3}, {1, 0, 0, -1, 1}, Kind::EndpointMidpoint, -3, 1, -3, 1, 1e-3},
      {"endpoint-midpoint, ray from -inf", {0, -1, 1, -kInf, -3}, {1, 0, 0, -2, 2}, Kind::EndpointMidpoint, -6, 2, -1e4, 2, 1e-2},
      {"endpoint-endpoint", {1, 0, 0, -2, 0}, {1, -4, 4, 2, 4}, Kind::EndpointEndpoint, -2, 4, -2, 4, 1e-3},
      {"endpoint-endpoint, intervals", {1, 0, 0, 0, 1}, {1, 1, -1, 2, 3}, Kind::EndpointEndpoint, 0, 3, 0, 3, 1e-3},
      {"point-point", {0, 0, 1, 0, 0}, {0, 0, 3, 2, 2}, Kind::EndpointEndpoint, 0, 2, 0, 2, 1e-3},
  };
  for (const Case& k : cases) {
    const auto br = bridge_two_piece(k.g1, k.g2);
    c.expect(br.has_value(), k.name + ": no bridge");
    if (!br) { continue; }
    c.expect(br->kind == k.kind, k.name + ": wrong case");
    const Pwq env = envelope_two_piece(k.g1, k.g2);
    const BruteHull hull = brute_hull(Pwq({k.g1, k.g2}), k.sample_lo, k.sample_hi, k.step);
    for (double x = k.lo; x <= k.hi; x += 1e-2) {
      const double h = hull(x);
      if (!std::isfinite(h)) { continue; }
      c.expect(std::abs(env(x) - h) <= 2e-3, k.name + ": mismatch at x=" + fmt("%.4g", x));
    }
  }
  // The ray case degenerates to the ray's own slope: p2 = 0 and alpha = q2.
  const auto ray = bridge_two_piece(Piece{1, 0, 0, -2, 2}, Piece{0, 1, 1, 3, kInf});
  c.expect(ray && ray->slope == 1.0 && ray->right == kInf, "ray bridge slope is not the ray slope");
  return c.outcome(std::to_string(cases.size()) + " bridge cases checked against the sampled hull");
}

// 7. The problem built for the solver agrees with the utility computed term by term.
Outcome portfolio_equivalence()
{
  Checker c;
  Rng rng(1007);
  double worst = 0, worst_res = 0;
  for (int t = 0; t < 20; ++t) {
    PortfolioSpec s = synthesize_instance(100 + std::uint64_t(t), 20 + 5 * t, 2 + t % 5, 1 + t % 3);
    const Eigen::Index l = s.assets_count();
    if (t % 2 == 1) {
      for (auto& a : s.assets) {
        a.impact = 0.01;
        a.impact_max = 2;
      }
      s.benchmark_mode = false;
      s.alpha = 0.01 * rng.vector(l);
    }
    const PortfolioSap ps = build_sap(s);
    for (int k = 0; k < 100; ++k) {
      Vector h(l);
      while (true) {
        for (Eigen::Index i = 0; i < l; ++i) { h[i] = rng.uniform(0, s.assets[std::size_t(i)].upper); }
        h *= rng.uniform(s.eta_lb, s.eta_ub) / h.sum();
        bool inside = true;
        for (Eigen::Index i = 0; i < l; ++i) { inside = inside && h[i] <= s.assets[std::size_t(i)].upper; }
        if (inside) { break; }
      }
      Vector z = Vector::Zero(ps.problem.cols());
      z.head(l) = h;
      const Vector x = ps.recover(z);
      const double u = utility(s, h), f = objective(ps.problem, x);
      const double rel = std::abs(f + u) / (1 + std::abs(u));
      worst = std::max(worst, rel);
      c.expect(std::isfinite(u) && rel <= 1e-8, "spec " + std::to_string(t) + ": objective " + fmt("%.12g", f)
                                                     + " vs utility " + fmt("%.12g", u));
      const double res = (ps.problem.A() * x - ps.problem.b()).lpNorm<Eigen::Infinity>();
      worst_res = std::max(worst_res, res);
      c.expect(res <= 1e-14 * (1 + x.lpNorm<Eigen::Infinity>() * double(l)), "spec " + std::to_string(t) + ": Ax-b " + fmt("%.3e", res));
    }
  }
  return c.outcome("20 specs x 100 holdings, max relative difference " + fmt("%.2e", worst) + ", max |Ax-b| "
                   + fmt("%.2e", worst_res));
}

// 8. Defaults of the solver and of the command-line tool.
Outcome default_echo()
{
  Checker c;
  const SolveOptions o;
  c.expect(o.eps_res == 3e-4, "eps_res");
  c.expect(o.eps_obj == 1e-5, "eps_obj");
  c.expect(o.check_every == 10, "check_every");
  c.expect(o.patience == 50, "patience");
  c.expect(o.max_iter == 10000, "max_iter");
  c.expect(o.init == InitMode::Relaxation, "init");

  const fs::path dir = fs::temp_directory_path() / ("sapopt_defaults_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const SapProblem p = new_problem(Matrix::Ones(1, 2), Vector::Constant(1, 2.0),
                                   {Pwq::quadratic(1, -2, 1), Pwq::quadratic(1, -6, 9)});
  std::ofstream(dir / "p.json") << dump(problem_to_json(p));
  const int code = run_cli("solve " + (dir / "p.json").string(), dir / "r.json");
  c.expect(code == 0, "cli exit code " + std::to_string(code));
  if (code == 0) {
    std::ifstream in(dir / "r.json");
    std::stringstream ss;
    ss << in.rdbuf();
    const Json opts = parse_json(ss.str())["options"];
    c.expect(opts["eps_res"] == 3e-4, "cli eps_res");
    c.expect(opts["eps_obj"] == 1e-5, "cli eps_obj");
    c.expect(opts["check_every"] == 10, "cli check_every");
    c.expect(opts["patience"] == 50, "cli patience");
    c.expect(opts["max_iter"] == 10000, "cli max_iter");
  }
  fs::remove_all(dir);
  return c.outcome("eps_res 3e-4, eps_obj 1e-5, check every 10, patience 50");
}

}  // namespace

int main()
{
  Eigen::setNbThreads(1);
  std::vector<ConvexRecord> convex;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"envelope correctness", envelope_property},
      {"prox correctness", prox_property},
      {"convex solver accuracy", [&] { return convex_accuracy(convex); }},
      {"bound sandwich", [&] { return bound_sandwich(convex); }},
      {"scale performance", scale_performance},
      {"bridge case coverage", bridge_cases},
      {"portfolio equivalence", portfolio_equivalence},
      {"default parameters", default_echo},
  };
  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome out;
    try {
      out = criteria[i].second();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    all = all && out.pass;
    std::printf("%s criterion %zu (%s): %s\n", out.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                out.detail.c_str());
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
