#ifndef SAPOPT_ADMM_HPP
#define SAPOPT_ADMM_HPP

/**
 * @file
 * @brief ADMM heuristic for separable-affine problems with best-candidate
 * tracking and a lower bound from the convex relaxation.
 *
 * Iterates, in scaled coordinates,
 *   x = prox_f(z - lambda)   (componentwise)
 *   z = Pi_{Az=b}(x + lambda)
 *   lambda = x - z + lambda
 */

#include <functional>
#include <optional>

#include "sapopt/problem.hpp"

namespace sapopt {

enum class InitMode { Relaxation, Zeros, Warm };

struct SolveOptions
{
  double eps_res = 3e-4;
  double eps_obj = 1e-5;
  int check_every = 10;
  int patience = 50;
  long max_iter = 10000;
  std::optional<Scaling> scaling;
  InitMode init = InitMode::Relaxation;
  /// Starting z and lambda for InitMode::Warm, in unscaled coordinates.
  Vector warm_z;
  Vector warm_lambda;
  bool parallel_prox = false;

  /// @throws Error(InvalidInput).
  void validate() const;
};

enum class SolveStatus { Converged, MaxIter, NoFeasibleCandidate };

const char* to_string(SolveStatus status);

struct AdmmState
{
  Vector x;
  Vector z;
  Vector lambda;
  long iteration = 0;
  /// Relaxation value recorded by relaxation-based initialization.
  std::optional<double> d_star;
};

struct SolveResult
{
  /// Domain-projected best candidate.
  Vector x_best;
  /// The same candidate before domain projection (satisfies A x = b up to solve accuracy).
  Vector x_candidate;
  double o_best = infinity<double>();
  std::optional<double> d_star;
  std::optional<double> gap;
  double residual_at_best = infinity<double>();
  long iterations = 0;
  long relaxation_iterations = 0;
  SolveStatus status = SolveStatus::NoFeasibleCandidate;
  double wall_ms = 0;
  double relaxation_ms = 0;
  /// Final iterates in scaled coordinates.
  AdmmState final_state;
};

struct TelemetryRecord
{
  long iteration;
  double o;
  double r;
  double o_best;
};

using Telemetry = std::function<void(const TelemetryRecord&)>;

/// Maps the unscaled z iterate (which satisfies A z = b) to a candidate point.
using RecoverHook = std::function<Vector(const Vector&)>;

struct DomainProjection
{
  double proj;
  double dist;
};

/// Nearest point of dom f; ties go to the smaller value of f, then the smaller point.
DomainProjection dist_and_project_domain(const Pwq& f, double x);

/// Best-candidate bookkeeping shared by the main and relaxation runs.
struct Tracker
{
  double o_best = infinity<double>();
  Vector x_best;
  Vector x_candidate;
  double residual_at_best = infinity<double>();
  long last_improvement = 0;
  bool accepted = false;
};

enum class Decision { Continue, Stop };

/**
 * @brief Evaluates the candidate built from z (or recover(z)) and updates the tracker.
 *
 * The candidate is accepted when its distance to dom f is below eps_res and its
 * pseudo-objective f(Pi_dom(x)) beats o_best. Stop is signalled once some
 * candidate has been accepted and o_best has not dropped by more than eps_obj
 * for more than `patience` iterations.
 */
Decision check_termination(const SapProblem& p, const Vector& z, long iteration, Tracker& tracker,
                           const SolveOptions& opts, const RecoverHook& recover = {},
                           const Telemetry& telemetry = {});

/// Starting iterates (scaled coordinates) per opts.init; relaxation mode runs ADMM on relax(p).
AdmmState initialize(const SapProblem& p, const SolveOptions& opts, const RecoverHook& recover = {});

SolveResult solve(const SapProblem& p, const SolveOptions& opts = {}, const RecoverHook& recover = {},
                  const Telemetry& telemetry = {});

}  // namespace sapopt

#endif  // SAPOPT_ADMM_HPP
