#ifndef SAPOPT_PORTFOLIO_HPP
#define SAPOPT_PORTFOLIO_HPP

/**
 * @file
 * @brief Tax-aware mean-variance rebalancing written as a separable-affine problem.
 *
 * Weights h (fractions of account value) trade off expected return, factor
 * risk h^T (X Sigma X^T + diag(D)) h, trading costs phi_trd(h - h_init) and
 * holding costs phi_hld(h). With Sigma = C C^T the problem is posed over
 * x = (h, c, y) where c is the cash weight and y = C^T X^T h:
 *
 *   A = [[C^T X^T, 0, -I], [1^T, 1, 0]],  b = (0, 1).
 */

#include <cstdint>
#include <vector>

#include "sapopt/admm.hpp"

namespace sapopt {

struct TaxLot
{
  double weight = 0;          ///< fraction of account value held in the lot
  double basis_fraction = 1;  ///< cost basis over current value
  double rate = 0;            ///< tax rate applied to realized gains
};

enum class LotOrder { HighestBasisFirst, Fifo };

/// Per-asset cost configuration. Zero magnitudes switch a term off.
struct AssetCosts
{
  double half_spread = 0;
  double impact = 0;
  double impact_max = 0;
  int impact_segments = 16;
  double min_trade = 0;
  double trade_cost = 0;
  std::vector<TaxLot> lots;
  double lower = -infinity<double>();
  double upper = infinity<double>();
  double min_holding = 0;
  double holding_cost = 0;
  /// Share price for the integer-share constraint; 0 disables it.
  double price = 0;
};

struct PortfolioSpec
{
  /// Use alpha = 2 gamma_risk V h_bm instead of `alpha`.
  bool benchmark_mode = false;
  Vector alpha;
  Matrix X;
  Matrix Sigma;
  Vector D;
  Vector h_init;
  Vector h_bm;
  double gamma_risk = 100;
  double gamma_trd = 1;
  double gamma_hld = 1;
  double gamma_sprd = 1;
  double gamma_tax = 1;
  double eta_lb = 0;
  double eta_ub = 1;
  LotOrder lot_order = LotOrder::HighestBasisFirst;
  std::vector<AssetCosts> assets;

  Eigen::Index assets_count() const { return X.rows(); }
  Eigen::Index factors_count() const { return X.cols(); }

  /// @throws Error(DimensionMismatch) or Error(InvalidInput).
  void validate() const;
};

struct PortfolioSap
{
  SapProblem problem;
  /// (h, ...) -> (h, 1 - 1^T h, C^T X^T h).
  RecoverHook recover;
  /// X C, so that y = (X C)^T h.
  Matrix loadings;
};

/// @throws Error(InvalidInput) if Sigma has no Cholesky factor, Error(EmptyDomain) with the asset index.
PortfolioSap build_sap(const PortfolioSpec& spec);

/// 2 gamma_risk (X Sigma X^T + diag(D)) h_bm, without forming the covariance.
Vector benchmark_alpha(const PortfolioSpec& spec);

/// alpha used by the model: benchmark_alpha() in benchmark mode, spec.alpha otherwise.
Vector effective_alpha(const PortfolioSpec& spec);

/**
 * @brief Rebalancing utility alpha^T h - gamma_risk h^T V h - gamma_trd phi_trd(h - h_init) - gamma_hld phi_hld(h),
 * evaluated term by term from the PortfolioSpec; -inf outside the feasible set.
 */
double utility(const PortfolioSpec& spec, const Vector& h);

/// Variable scales for the solver; row scales are left at one since they do not change the iterates.
Scaling portfolio_scaling(const PortfolioSpec& spec);

// Separable cost terms, all in the trade u = h - h_init or the holding h.

/// s |u|.
Pwq spread_cost(double half_spread);

struct ImpactApprox
{
  Pwq f;
  double max_abs_error;
  /// max_abs_error over d u_max^{3/2}.
  double max_rel_error;
};

/// Convex piecewise-quadratic interpolant of d |u|^{3/2} on [-u_max, u_max] with
/// `segments` quadratically spaced knots per side.
ImpactApprox impact_cost_approx(double d, double u_max, int segments);

/// 0 on {0} and on |u| >= u_min within [lo, hi].
Pwq min_trade_size(double u_min, double lo = -infinity<double>(), double hi = infinity<double>());

/// c off the origin and 0 at the origin, within [lo, hi].
Pwq per_trade_cost(double c, double lo = -infinity<double>(), double hi = infinity<double>());

/**
 * @brief Realized-gain tax for the trade u, selling lots in the configured order.
 * Zero for purchases; domain [-h_init, inf).
 * @throws Error(LotMismatch) if the lot weights do not sum to h_init.
 */
Pwq tax_liability(const std::vector<TaxLot>& lots, double h_init, LotOrder order = LotOrder::HighestBasisFirst);

/// Indicator of [lo, hi].
Pwq position_limits(double lo, double hi);

/// 0 on {0} and on |h| >= h_min within [lo, hi].
Pwq min_holding_size(double h_min, double lo = -infinity<double>(), double hi = infinity<double>());

Pwq per_asset_holding_cost(double c, double lo = -infinity<double>(), double hi = infinity<double>());

/// Point pieces at the multiples of `price` in [lo, hi].
/// @throws Error(UnboundedInteger) if a bound is infinite.
Pwq integer_shares(double price, double lo, double hi);

/// Deterministic random instance with benchmark-tracking alpha, long-only limits
/// h_ub = max(3 h_bm, h_init), spreads, lots and cardinality costs.
PortfolioSpec synthesize_instance(std::uint64_t seed, Eigen::Index assets, Eigen::Index factors, int lots_per_asset);

}  // namespace sapopt

#endif  // SAPOPT_PORTFOLIO_HPP
