#ifndef SAPOPT_ORACLE_HPP
#define SAPOPT_ORACLE_HPP

/**
 * @file
 * @brief Brute-force reference solvers for small instances.
 *
 * None of these are meant to be fast; they exist to produce trustworthy
 * reference values for the heuristic and the envelope/prox code.
 */

#include <optional>
#include <vector>

#include "sapopt/problem.hpp"

namespace sapopt {

struct GridSpec
{
  /// Target grid step (free coordinates for exhaustive(), z-cells for dp_solve()).
  double step = 1e-3;
  /// Optional per-dimension bounds (free coordinates or problem variables);
  /// derived from breakpoints otherwise.
  std::optional<Vector> lower;
  std::optional<Vector> upper;
  /// Maximum number of points evaluated in one grid pass (or DP combine work).
  long budget = 20'000'000;
  /// Unbounded directions are truncated at this multiple of the breakpoint span.
  double padding = 10.0;
  /// Allow coarse-to-fine refinement when the full grid exceeds the budget.
  bool zoom = true;
};

struct OracleResult
{
  Vector x;
  double value;
};

/// Interval [lo, hi] that contains every breakpoint and piece vertex of f,
/// padded by `padding` times its span and clipped to dom f.
std::pair<double, double> search_box(const Pwq& f, double padding);

/**
 * @brief Grid search over a parameterization of {x | A x = b} by n - rank(A) free coordinates.
 *
 * Components with nonconvex f are preferred as free coordinates; grids always
 * include the breakpoints of the free components.
 *
 * @throws Error(TooManyDegreesOfFreedom) if n - rank(A) > 4,
 *         Error(BudgetExceeded) if even the breakpoint grid exceeds the budget.
 */
OracleResult exhaustive(const SapProblem& p, const GridSpec& g = {});

/**
 * @brief Divide-and-conquer over value functions V_S(z) = min { sum_{i in S} f_i(x_i) | sum a_i x_i = z }
 * tabulated on a z-grid with cell width g.step.
 *
 * @throws Error(TooManyConstraintRows) if m > 2, Error(BudgetExceeded) if a
 * combine step would exceed the budget.
 */
OracleResult dp_solve(const SapProblem& p, const GridSpec& g = {});

struct ProxReference
{
  double x;
  double value;
};

/// Grid argmin of f(x) + (x - u)^2 / 2 over multiples of `step` plus all breakpoints.
/// @throws Error(BudgetExceeded).
ProxReference prox_oracle(const Pwq& f, double u, double step, long budget = 50'000'000);

/// Lower convex hull of sampled points of the graph of f, evaluated by linear interpolation.
class SampledHull
{
public:
  SampledHull(std::vector<double> xs, std::vector<double> ys);

  /// +inf outside the sampled range.
  double operator()(double x) const;
  const std::vector<double>& xs() const { return xs_; }
  const std::vector<double>& ys() const { return ys_; }

private:
  std::vector<double> xs_;
  std::vector<double> ys_;
};

/// Hull of (x, f(x)) sampled on multiples of `step` in [lo, hi] plus breakpoints and vertices.
/// @throws Error(BudgetExceeded).
SampledHull envelope_oracle(const Pwq& f, double step, double lo, double hi, long budget = 50'000'000);

/// As above over dom f, which must be bounded.
SampledHull envelope_oracle(const Pwq& f, double step, long budget = 50'000'000);

}  // namespace sapopt

#endif  // SAPOPT_ORACLE_HPP
