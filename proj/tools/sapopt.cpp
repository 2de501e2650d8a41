// sapopt: solve separable-affine problems and portfolio rebalancing instances.
//
// Exit codes: 0 converged, 1 input error, 2 iteration limit, 3 no feasible
// candidate, 4 no oracle applies.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"

#include "sapopt/io.hpp"
#include "sapopt/oracle.hpp"

using namespace sapopt;

namespace {

struct SolverFlags
{
  double eps_res = 3e-4;
  double eps_obj = 1e-5;
  int check_every = 10;
  int patience = 50;
  long max_iter = 10000;
  std::string init = "relax";
  std::string scaling = "auto";
  std::uint64_t seed = 0;
  std::string telemetry;
  std::string out;
  bool parallel_prox = false;
};

void add_solver_flags(CLI::App* cmd, SolverFlags& f)
{
  cmd->add_option("--eps-res", f.eps_res, "Residual tolerance for accepting a candidate")->capture_default_str();
  cmd->add_option("--eps-obj", f.eps_obj, "Improvement that resets the patience counter")->capture_default_str();
  cmd->add_option("--check-every", f.check_every, "Iterations between candidate checks")->capture_default_str();
  cmd->add_option("--patience", f.patience, "Iterations without improvement before stopping")->capture_default_str();
  cmd->add_option("--max-iter", f.max_iter, "Iteration limit")->capture_default_str();
  cmd->add_option("--init", f.init, "Starting point")->check(CLI::IsMember({"relax", "zeros"}))->capture_default_str();
  cmd->add_option("--scaling", f.scaling, "Problem scaling")
      ->check(CLI::IsMember({"file", "auto", "none"}))
      ->capture_default_str();
  cmd->add_option("--seed", f.seed, "Seed (the solver itself is deterministic; recorded in the output)");
  cmd->add_option("--telemetry", f.telemetry, "Write per-check records as JSON lines");
  cmd->add_option("--out", f.out, "Write the result here instead of stdout");
  cmd->add_flag("--parallel-prox", f.parallel_prox, "Run the componentwise prox step in parallel");
}

/// A loaded input: a raw problem or a portfolio turned into one.
struct Input
{
  std::optional<SapProblem> problem;
  std::optional<Scaling> file_scaling;
  std::optional<PortfolioSpec> portfolio;
  RecoverHook recover;
};

Input load_input(const std::string& path)
{
  const Json j = read_json_file(path);
  Input in;
  if (j.is_object() && j.contains("format") && j["format"] == "portfolio") {
    PortfolioSpec spec = portfolio_from_json(j);
    PortfolioSap ps = build_sap(spec);
    in.problem = std::move(ps.problem);
    in.recover = std::move(ps.recover);
    in.portfolio = std::move(spec);
  } else {
    ProblemFile pf = problem_from_json(j);
    in.problem = std::move(pf.problem);
    in.file_scaling = std::move(pf.scaling);
  }
  return in;
}

std::optional<Scaling> choose_scaling(const Input& in, const std::string& mode)
{
  if (mode == "none") { return std::nullopt; }
  if (mode == "file") {
    if (!in.file_scaling) { throw Error(ErrorCode::InvalidInput, "--scaling file but the input has no scaling block"); }
    return in.file_scaling;
  }
  if (in.portfolio) { return portfolio_scaling(*in.portfolio); }
  if (in.file_scaling) { return in.file_scaling; }
  return equilibrate(*in.problem);
}

SolveOptions to_options(const SolverFlags& f)
{
  SolveOptions o;
  o.eps_res = f.eps_res;
  o.eps_obj = f.eps_obj;
  o.check_every = f.check_every;
  o.patience = f.patience;
  o.max_iter = f.max_iter;
  o.init = f.init == "zeros" ? InitMode::Zeros : InitMode::Relaxation;
  o.parallel_prox = f.parallel_prox;
  return o;
}

void emit(const Json& j, const std::string& out)
{
  if (out.empty()) {
    std::cout << dump(j);
    return;
  }
  std::ofstream file(out);
  if (!file) { throw Error(ErrorCode::InvalidInput, out + ": cannot write file"); }
  file << dump(j);
}

int exit_code(SolveStatus s)
{
  switch (s) {
    case SolveStatus::Converged: return 0;
    case SolveStatus::MaxIter: return 2;
    case SolveStatus::NoFeasibleCandidate: return 3;
  }
  return 1;
}

int run_solve(const std::string& path, const SolverFlags& flags)
{
  const Input in = load_input(path);
  SolveOptions opts = to_options(flags);
  opts.scaling = choose_scaling(in, flags.scaling);

  std::ofstream tel;
  Telemetry telemetry;
  if (!flags.telemetry.empty()) {
    tel.open(flags.telemetry);
    if (!tel) { throw Error(ErrorCode::InvalidInput, flags.telemetry + ": cannot write file"); }
    telemetry = [&tel](const TelemetryRecord& r) {
      Json line{{"iter", r.iteration}, {"o", std::isfinite(r.o) ? Json(r.o) : Json(nullptr)}, {"r", r.r},
                {"o_best", std::isfinite(r.o_best) ? Json(r.o_best) : Json(nullptr)}};
      tel << line.dump() << "\n";
    };
  }
  const SolveResult res = solve(*in.problem, opts, in.recover, telemetry);
  Json j = result_to_json(res, opts);
  j["options"]["seed"] = flags.seed;
  j["options"]["scaling_mode"] = flags.scaling;
  emit(j, flags.out);
  return exit_code(res.status);
}

int run_relax(const std::string& path, const SolverFlags& flags, const std::string& dump_path)
{
  const Input in = load_input(path);
  const SapProblem relaxed = relax(*in.problem);
  if (!dump_path.empty()) {
    Json env = Json::array();
    for (const auto& f : relaxed.f()) { env.push_back(pwq_to_json(f)); }
    std::ofstream file(dump_path);
    if (!file) { throw Error(ErrorCode::InvalidInput, dump_path + ": cannot write file"); }
    file << dump(env);
  }
  SolveOptions opts = to_options(flags);
  opts.init = InitMode::Zeros;
  opts.scaling = choose_scaling(in, flags.scaling);
  SolveResult res = solve(relaxed, opts, in.recover);
  if (res.status != SolveStatus::NoFeasibleCandidate) {
    res.d_star = res.o_best;
    res.gap = 0.0;
  }
  Json j = result_to_json(res, opts);
  j["options"]["scaling_mode"] = flags.scaling;
  emit(j, flags.out);
  return exit_code(res.status);
}

int run_oracle(const std::string& path, double step, long budget, const std::string& out)
{
  const Input in = load_input(path);
  const SapProblem& p = *in.problem;
  GridSpec g;
  g.step = step;
  g.budget = budget;
  const auto start = std::chrono::steady_clock::now();
  OracleResult r;
  std::string method;
  try {
    try {
      r = exhaustive(p, g);
      method = "exhaustive";
    } catch (const Error& e) {
      if (e.code() != ErrorCode::TooManyDegreesOfFreedom) { throw; }
      if (p.rows() > 2) {
        std::cerr << "oracle: " << p.cols() << " variables, " << p.rows()
                  << " constraints; neither exhaustive search (at most 4 free coordinates) nor the value-function "
                     "method (at most 2 rows) applies\n";
        return 4;
      }
      r = dp_solve(p, g);
      method = "value_function";
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::BudgetExceeded) { throw; }
    std::cerr << "oracle: " << e.what() << "; use a coarser --grid-step or a larger --budget\n";
    return 4;
  }
  const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  Json j = Json::object();
  Json x = Json::array();
  for (Eigen::Index i = 0; i < r.x.size(); ++i) { x.push_back(std::isfinite(r.x[i]) ? Json(r.x[i]) : Json(nullptr)); }
  j["x_best"] = std::move(x);
  j["o_best"] = std::isfinite(r.value) ? Json(r.value) : Json(nullptr);
  j["d_star"] = nullptr;
  j["gap"] = nullptr;
  j["residual"] = r.x.allFinite() ? Json(residual_norm(p, r.x)) : Json(nullptr);
  j["method"] = method;
  j["status"] = std::isfinite(r.value) ? "converged" : "no_feasible_candidate";
  j["runtime_ms"] = ms;
  j["options"] = Json{{"grid_step", step}, {"budget", budget}};
  emit(j, out);
  return std::isfinite(r.value) ? 0 : 3;
}

int run_bench(int seeds, Eigen::Index assets, Eigen::Index factors, int lots, const SolverFlags& flags)
{
  std::vector<double> times, gaps;
  std::printf("%6s %10s %16s %16s %10s %8s %s\n", "seed", "time_ms", "o_best", "d_star", "gap_bp", "iters", "status");
  for (int s = 0; s < seeds; ++s) {
    const PortfolioSpec spec = synthesize_instance(std::uint64_t(s), assets, factors, lots);
    const PortfolioSap ps = build_sap(spec);
    SolveOptions opts = to_options(flags);
    opts.scaling = flags.scaling == "none" ? std::nullopt : std::optional<Scaling>(portfolio_scaling(spec));
    const SolveResult r = solve(ps.problem, opts, ps.recover);
    const double gap_bp = r.gap ? *r.gap * 1e4 : std::nan("");
    times.push_back(r.wall_ms);
    if (r.gap) { gaps.push_back(gap_bp); }
    std::printf("%6d %10.1f %16.10g %16.10g %10.4f %8ld %s\n", s, r.wall_ms, r.o_best, r.d_star.value_or(std::nan("")),
                gap_bp, r.iterations, to_string(r.status));
  }
  auto stats = [](const std::vector<double>& v) {
    double mean = 0, var = 0;
    for (double x : v) { mean += x; }
    mean /= double(std::max<std::size_t>(v.size(), 1));
    for (double x : v) { var += (x - mean) * (x - mean); }
    return std::pair<double, double>{mean, v.size() > 1 ? std::sqrt(var / double(v.size() - 1)) : 0.0};
  };
  const auto [tm, ts] = stats(times);
  const auto [gm, gs] = stats(gaps);
  double gmin = gaps.empty() ? std::nan("") : *std::min_element(gaps.begin(), gaps.end());
  double gmax = gaps.empty() ? std::nan("") : *std::max_element(gaps.begin(), gaps.end());
  std::printf("runtime_ms mean %.1f stddev %.1f\n", tm, ts);
  std::printf("gap_bp mean %.4f stddev %.4f min %.4f max %.4f\n", gm, gs, gmin, gmax);
  return 0;
}

}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Separable-affine problem solver"};
  app.require_subcommand(1);

  SolverFlags solve_flags;
  std::string solve_path;
  auto* solve_cmd = app.add_subcommand("solve", "Run ADMM on a problem or portfolio file");
  solve_cmd->add_option("input", solve_path, "Problem or portfolio JSON file")->required();
  add_solver_flags(solve_cmd, solve_flags);

  SolverFlags relax_flags;
  std::string relax_path, dump_envelopes;
  auto* relax_cmd = app.add_subcommand("relax", "Solve the convex relaxation and report its value as d_star");
  relax_cmd->add_option("input", relax_path, "Problem or portfolio JSON file")->required();
  relax_cmd->add_option("--dump-envelopes", dump_envelopes, "Write the convex envelopes of all components");
  add_solver_flags(relax_cmd, relax_flags);

  std::string oracle_path, oracle_out;
  double grid_step = 1e-3;
  long budget = 20'000'000;
  auto* oracle_cmd = app.add_subcommand("oracle", "Reference value by grid search or value-function tables");
  oracle_cmd->add_option("input", oracle_path, "Problem or portfolio JSON file")->required();
  oracle_cmd->add_option("--grid-step", grid_step, "Grid step")->capture_default_str();
  oracle_cmd->add_option("--budget", budget, "Maximum grid points per pass")->capture_default_str();
  oracle_cmd->add_option("--out", oracle_out, "Write the result here instead of stdout");

  std::uint64_t gen_seed = 0;
  Eigen::Index gen_assets = 50, gen_factors = 5;
  int gen_lots = 3;
  std::string gen_out;
  auto* gen_cmd = app.add_subcommand("gen", "Write a synthetic portfolio instance");
  gen_cmd->add_option("--seed", gen_seed)->capture_default_str();
  gen_cmd->add_option("--assets", gen_assets)->capture_default_str();
  gen_cmd->add_option("--factors", gen_factors)->capture_default_str();
  gen_cmd->add_option("--lots", gen_lots, "Tax lots per held asset")->capture_default_str();
  gen_cmd->add_option("--out", gen_out, "Write the instance here instead of stdout");

  int bench_seeds = 3;
  Eigen::Index bench_assets = 1000, bench_factors = 100;
  int bench_lots = 3;
  SolverFlags bench_flags;
  auto* bench_cmd = app.add_subcommand("bench", "Solve generated instances and summarize runtime and gap");
  bench_cmd->add_option("--seeds", bench_seeds, "Number of instances (seeds 0..k-1)")->capture_default_str();
  bench_cmd->add_option("--assets", bench_assets)->capture_default_str();
  bench_cmd->add_option("--factors", bench_factors)->capture_default_str();
  bench_cmd->add_option("--lots", bench_lots)->capture_default_str();
  add_solver_flags(bench_cmd, bench_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*solve_cmd) { return run_solve(solve_path, solve_flags); }
    if (*relax_cmd) { return run_relax(relax_path, relax_flags, dump_envelopes); }
    if (*oracle_cmd) { return run_oracle(oracle_path, grid_step, budget, oracle_out); }
    if (*gen_cmd) {
      emit(portfolio_to_json(synthesize_instance(gen_seed, gen_assets, gen_factors, gen_lots)), gen_out);
      return 0;
    }
    if (*bench_cmd) { return run_bench(bench_seeds, bench_assets, bench_factors, bench_lots, bench_flags); }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what();
    if (e.index()) { std::cerr << " (component " << *e.index() << ")"; }
    std::cerr << "\n";
    return 1;
  }
  return 1;
}
