#include "sapopt/admm.hpp"

#include "sapopt/kkt.hpp"

#include <chrono>
#include <cmath>

namespace sapopt {

void SolveOptions::validate() const
{
  if (!(eps_res > 0)) { throw Error(ErrorCode::InvalidInput, "eps_res must be positive"); }
  if (!(eps_obj > 0)) { throw Error(ErrorCode::InvalidInput, "eps_obj must be positive"); }
  if (check_every < 1) { throw Error(ErrorCode::InvalidInput, "check_every must be at least 1"); }
  if (patience < 1) { throw Error(ErrorCode::InvalidInput, "patience must be at least 1"); }
  if (max_iter < 0) { throw Error(ErrorCode::InvalidInput, "max_iter must be nonnegative"); }
}

const char* to_string(SolveStatus status)
{
  switch (status) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::MaxIter: return "max_iter";
    case SolveStatus::NoFeasibleCandidate: return "no_feasible_candidate";
  }
  return "unknown";
}

DomainProjection dist_and_project_domain(const Pwq& f, double x)
{
  if (f.empty()) { throw Error(ErrorCode::EmptyDomain, "projection onto an empty domain"); }
  double best_p = 0, best_d = infinity<double>(), best_f = infinity<double>();
  for (const auto& pc : f.pieces()) {
    const double p = std::clamp(x, pc.a, pc.b);
    const double d = std::abs(x - p);
    if (d > best_d) { continue; }
    const double v = f(p);
    if (d < best_d || v < best_f || (v == best_f && p < best_p)) {
      best_p = p;
      best_d = d;
      best_f = v;
    }
  }
  return {best_p, best_d};
}

Decision check_termination(const SapProblem& p, const Vector& z, long iteration, Tracker& tracker,
                           const SolveOptions& opts, const RecoverHook& recover, const Telemetry& telemetry)
{
  Vector candidate = recover ? recover(z) : z;
  if (candidate.size() != p.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "recovered candidate has the wrong length");
  }
  Vector proj(candidate.size());
  double r2 = 0;
  for (Eigen::Index i = 0; i < candidate.size(); ++i) {
    const auto dp = dist_and_project_domain(p.f(i), candidate[i]);
    proj[i] = dp.proj;
    r2 += dp.dist * dp.dist;
  }
  const double r = std::sqrt(r2);
  const double o = objective(p, proj);

  if (r < opts.eps_res && o < tracker.o_best) {
    if (!tracker.accepted || tracker.o_best - o > opts.eps_obj) { tracker.last_improvement = iteration; }
    tracker.o_best = o;
    tracker.x_best = std::move(proj);
    tracker.x_candidate = std::move(candidate);
    tracker.residual_at_best = r;
    tracker.accepted = true;
  }
  if (telemetry) { telemetry({iteration, o, r, tracker.o_best}); }
  if (tracker.accepted && iteration - tracker.last_improvement > opts.patience) { return Decision::Stop; }
  return Decision::Continue;
}

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start)
{
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

struct RunOutcome
{
  Tracker tracker;
  AdmmState state;
  SolveStatus status = SolveStatus::NoFeasibleCandidate;
};

/// ADMM iterations on scale(p, s) starting from `state`; candidates are judged on p.
RunOutcome run(const SapProblem& p, const Scaling& s, AdmmState state, const SolveOptions& opts,
               const RecoverHook& recover, const Telemetry& telemetry)
{
  const SapProblem ps = scale(p, s);
  const KktFactor<double> kkt(ps.A());
  const Eigen::Index n = ps.cols();

  std::vector<char> convex(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) { convex[std::size_t(i)] = is_convex(ps.f(i)); }

  RunOutcome out;
  Vector& x = state.x;
  Vector& z = state.z;
  Vector& lambda = state.lambda;
  if (x.size() != n) { x = z; }
  const bool parallel = opts.parallel_prox;
  (void)parallel;

  bool stopped = false;
  long it = 0;
  while (it < opts.max_iter) {
    ++it;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (parallel)
#endif
    for (Eigen::Index i = 0; i < n; ++i) {
      const double u = z[i] - lambda[i];
      const auto& f = ps.f(i);
      x[i] = convex[std::size_t(i)] ? detail::prox_convex_unchecked(f.pieces(), u) : prox(f, u);
    }
    z = kkt.project(x + lambda, ps.b());
    lambda = (x - z) + lambda;

    if (it % opts.check_every == 0) {
      const Vector zu = unscale_solution(s, z);
      if (check_termination(p, zu, it, out.tracker, opts, recover, telemetry) == Decision::Stop) {
        stopped = true;
        break;
      }
    }
  }
  state.iteration = it;
  out.state = std::move(state);
  if (stopped) {
    out.status = SolveStatus::Converged;
  } else {
    out.status = out.tracker.accepted ? SolveStatus::MaxIter : SolveStatus::NoFeasibleCandidate;
  }
  return out;
}

struct InitOutcome
{
  AdmmState state;
  std::optional<SapProblem> relaxed;
  long relaxation_iterations = 0;
  double relaxation_ms = 0;
};

InitOutcome init_state(const SapProblem& p, const Scaling& s, const SolveOptions& opts, const RecoverHook& recover)
{
  const Eigen::Index n = p.cols();
  InitOutcome out;
  AdmmState& st = out.state;
  switch (opts.init) {
    case InitMode::Zeros:
      st.z = Vector::Zero(n);
      st.lambda = Vector::Zero(n);
      break;
    case InitMode::Warm:
      if (opts.warm_z.size() != n || opts.warm_lambda.size() != n) {
        throw Error(ErrorCode::DimensionMismatch, "warm start vectors must have one entry per variable");
      }
      st.z = scale_point(s, opts.warm_z);
      st.lambda = scale_point(s, opts.warm_lambda);
      break;
    case InitMode::Relaxation: {
      const auto start = Clock::now();
      out.relaxed = relax(p);
      AdmmState zero;
      zero.z = Vector::Zero(n);
      zero.lambda = Vector::Zero(n);
      RunOutcome r = run(*out.relaxed, s, std::move(zero), opts, recover, {});
      st.z = std::move(r.state.z);
      st.lambda = std::move(r.state.lambda);
      if (r.tracker.accepted) { st.d_star = r.tracker.o_best; }
      out.relaxation_iterations = r.state.iteration;
      out.relaxation_ms = elapsed_ms(start);
      break;
    }
  }
  st.x = st.z;
  st.iteration = 0;
  return out;
}

Scaling resolve_scaling(const SapProblem& p, const SolveOptions& opts)
{
  Scaling s = opts.scaling ? *opts.scaling : Scaling::identity(p.rows(), p.cols());
  s.validate(p.rows(), p.cols());
  return s;
}

}  // namespace

AdmmState initialize(const SapProblem& p, const SolveOptions& opts, const RecoverHook& recover)
{
  opts.validate();
  return init_state(p, resolve_scaling(p, opts), opts, recover).state;
}

SolveResult solve(const SapProblem& p, const SolveOptions& opts, const RecoverHook& recover,
                  const Telemetry& telemetry)
{
  opts.validate();
  const auto start = Clock::now();
  const Scaling s = resolve_scaling(p, opts);

  InitOutcome init = init_state(p, s, opts, recover);
  RunOutcome run_out = run(p, s, init.state, opts, recover, telemetry);

  SolveResult res;
  res.status = run_out.status;
  res.iterations = run_out.state.iteration;
  res.relaxation_iterations = init.relaxation_iterations;
  res.relaxation_ms = init.relaxation_ms;
  const Tracker& tr = run_out.tracker;
  if (tr.accepted) {
    res.x_best = tr.x_best;
    res.x_candidate = tr.x_candidate;
    res.o_best = tr.o_best;
    res.residual_at_best = tr.residual_at_best;
  }
  if (init.state.d_star) {
    double d = *init.state.d_star;
    // The relaxed run's value is itself an ADMM estimate; the relaxation
    // evaluated at the incumbent is an equally valid estimate that never exceeds o_best.
    if (tr.accepted) { d = std::min(d, objective(*init.relaxed, tr.x_best)); }
    res.d_star = d;
    if (tr.accepted) { res.gap = res.o_best - d; }
  }
  res.final_state = std::move(run_out.state);
  res.final_state.d_star = res.d_star;
  res.wall_ms = elapsed_ms(start);
  return res;
}

}  // namespace sapopt
