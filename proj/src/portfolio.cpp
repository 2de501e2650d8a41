#include "sapopt/portfolio.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <numeric>
#include <random>

namespace sapopt {

namespace {

constexpr double kInf = infinity<double>();

std::vector<TaxLot> ordered_lots(const std::vector<TaxLot>& lots, LotOrder order)
{
  std::vector<TaxLot> sorted = lots;
  if (order == LotOrder::HighestBasisFirst) {
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const TaxLot& a, const TaxLot& b) { return a.basis_fraction > b.basis_fraction; });
  }
  return sorted;
}

void check_lots(const std::vector<TaxLot>& lots, double h_init)
{
  double total = 0;
  for (const auto& lot : lots) {
    if (!(lot.weight >= 0) || !(lot.rate >= 0) || !std::isfinite(lot.basis_fraction)) {
      throw Error(ErrorCode::InvalidInput, "tax lots need nonnegative weight and rate and a finite basis");
    }
    total += lot.weight;
  }
  if (std::abs(total - h_init) > 1e-9) {
    throw Error(ErrorCode::LotMismatch, "lot weights sum to " + std::to_string(total) + " but the holding is "
                                            + std::to_string(h_init));
  }
}

/// Tax on selling `amount` straight from the lot list.
double tax_direct(const std::vector<TaxLot>& lots, double h_init, LotOrder order, double u)
{
  if (u >= 0) { return 0; }
  if (u < -h_init) { return kInf; }
  double remaining = -u, tax = 0;
  for (const auto& lot : ordered_lots(lots, order)) {
    const double sold = std::min(remaining, lot.weight);
    tax += lot.rate * (1 - lot.basis_fraction) * sold;
    remaining -= sold;
    if (remaining <= 0) { break; }
  }
  return tax;
}

Pwq trade_cost_function(const PortfolioSpec& spec, Eigen::Index i)
{
  const AssetCosts& a = spec.assets[std::size_t(i)];
  Pwq phi = Pwq::quadratic(0, 0, 0);
  if (a.half_spread > 0 && spec.gamma_sprd > 0) { phi = phi + scale_value(spread_cost(a.half_spread), spec.gamma_sprd); }
  if (a.impact > 0) { phi = phi + impact_cost_approx(a.impact, a.impact_max, a.impact_segments).f; }
  if (a.min_trade > 0) { phi = phi + min_trade_size(a.min_trade); }
  if (a.trade_cost > 0) { phi = phi + per_trade_cost(a.trade_cost); }
  if (!a.lots.empty()) {
    phi = phi + scale_value(tax_liability(a.lots, spec.h_init[i], spec.lot_order), spec.gamma_tax);
  }
  return phi;
}

Pwq holding_cost_function(const AssetCosts& a)
{
  Pwq phi = position_limits(a.lower, a.upper);
  if (a.holding_cost > 0) { phi = phi + per_asset_holding_cost(a.holding_cost); }
  if (a.min_holding > 0) { phi = phi + min_holding_size(a.min_holding); }
  if (a.price > 0) { phi = phi + integer_shares(a.price, a.lower, a.upper); }
  return phi;
}

}  // namespace

void PortfolioSpec::validate() const
{
  const Eigen::Index l = X.rows(), k = X.cols();
  if (Sigma.rows() != k || Sigma.cols() != k) { throw Error(ErrorCode::DimensionMismatch, "Sigma must be k x k"); }
  if (D.size() != l || h_init.size() != l) {
    throw Error(ErrorCode::DimensionMismatch, "D and h_init need one entry per asset");
  }
  if (benchmark_mode ? h_bm.size() != l : alpha.size() != l) {
    throw Error(ErrorCode::DimensionMismatch, benchmark_mode ? "h_bm needs one entry per asset" : "alpha needs one entry per asset");
  }
  if (Eigen::Index(assets.size()) != l) {
    throw Error(ErrorCode::DimensionMismatch, "cost configuration needs one entry per asset");
  }
  for (Eigen::Index i = 0; i < l; ++i) {
    if (!(D[i] > 0)) { throw Error(ErrorCode::InvalidInput, "idiosyncratic variance must be positive", i); }
  }
  for (double g : {gamma_risk, gamma_trd, gamma_hld, gamma_sprd, gamma_tax}) {
    if (!(g >= 0)) { throw Error(ErrorCode::InvalidInput, "tradeoff parameters must be nonnegative"); }
  }
  if (!(eta_lb <= eta_ub)) { throw Error(ErrorCode::InvalidInput, "eta_lb must not exceed eta_ub"); }
}

Vector benchmark_alpha(const PortfolioSpec& spec)
{
  const Vector f = spec.X.transpose() * spec.h_bm;
  return 2 * spec.gamma_risk * (spec.X * (spec.Sigma * f) + spec.D.cwiseProduct(spec.h_bm));
}

Vector effective_alpha(const PortfolioSpec& spec)
{
  return spec.benchmark_mode ? benchmark_alpha(spec) : spec.alpha;
}

PortfolioSap build_sap(const PortfolioSpec& spec)
{
  spec.validate();
  const Eigen::Index l = spec.assets_count(), k = spec.factors_count();
  Matrix C;
  if (k > 0) {
    Eigen::LLT<Matrix> llt(spec.Sigma);
    if (llt.info() != Eigen::Success) {
      throw Error(ErrorCode::InvalidInput, "factor covariance has no Cholesky factor");
    }
    C = llt.matrixL();
  } else {
    C = Matrix(0, 0);
  }
  const Matrix loadings = spec.X * C;  // l x k
  const Vector alpha = effective_alpha(spec);

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(std::size_t(l * k + l + 1 + k));
  for (Eigen::Index j = 0; j < k; ++j) {
    for (Eigen::Index i = 0; i < l; ++i) {
      if (loadings(i, j) != 0) { trip.emplace_back(j, i, loadings(i, j)); }
    }
    trip.emplace_back(j, l + 1 + j, -1.0);
  }
  for (Eigen::Index i = 0; i <= l; ++i) { trip.emplace_back(k, i, 1.0); }
  SparseMatrix A(k + 1, l + 1 + k);
  A.setFromTriplets(trip.begin(), trip.end());
  Vector b = Vector::Zero(k + 1);
  b[k] = 1;

  std::vector<Pwq> f;
  f.reserve(std::size_t(l + 1 + k));
  for (Eigen::Index i = 0; i < l; ++i) {
    try {
      Pwq fi = Pwq::quadratic(spec.gamma_risk * spec.D[i], -alpha[i], 0);
      fi = fi + scale_value(shift_scale_arg(trade_cost_function(spec, i), 1.0, -spec.h_init[i]), spec.gamma_trd);
      fi = fi + scale_value(holding_cost_function(spec.assets[std::size_t(i)]), spec.gamma_hld);
      f.push_back(std::move(fi));
    } catch (const Error& err) {
      throw Error(err.code(), std::string("asset cost terms: ") + err.what(), long(i));
    }
  }
  f.push_back(Pwq::indicator(1 - spec.eta_ub, 1 - spec.eta_lb));
  for (Eigen::Index j = 0; j < k; ++j) { f.push_back(Pwq::quadratic(spec.gamma_risk, 0, 0)); }

  RecoverHook recover = [loadings, l, k](const Vector& z) {
    Vector x(l + 1 + k);
    const auto h = z.head(l);
    x.head(l) = h;
    x[l] = 1 - h.sum();
    x.tail(k) = loadings.transpose() * h;
    return x;
  };
  return PortfolioSap{SapProblem(std::move(A), std::move(b), std::move(f)), std::move(recover), loadings};
}

double utility(const PortfolioSpec& spec, const Vector& h)
{
  const Eigen::Index l = spec.assets_count();
  const double invested = h.sum();
  if (invested < spec.eta_lb || invested > spec.eta_ub) { return -kInf; }
  const Vector alpha = effective_alpha(spec);
  const Vector fh = spec.X.transpose() * h;
  const double risk = fh.dot(spec.Sigma * fh) + spec.D.dot(h.cwiseProduct(h));

  double trd = 0, hld = 0;
  for (Eigen::Index i = 0; i < l; ++i) {
    const AssetCosts& a = spec.assets[std::size_t(i)];
    const double u = h[i] - spec.h_init[i];
    double t = spec.gamma_sprd * a.half_spread * std::abs(u);
    if (a.impact > 0) { t += impact_cost_approx(a.impact, a.impact_max, a.impact_segments).f(u); }
    if (a.min_trade > 0 && u != 0 && std::abs(u) < a.min_trade) { return -kInf; }
    if (u != 0) { t += a.trade_cost; }
    if (!a.lots.empty()) { t += spec.gamma_tax * tax_direct(a.lots, spec.h_init[i], spec.lot_order, u); }
    trd += t;

    if (h[i] < a.lower || h[i] > a.upper) { return -kInf; }
    if (h[i] != 0) { hld += a.holding_cost; }
    if (a.min_holding > 0 && h[i] != 0 && std::abs(h[i]) < a.min_holding) { return -kInf; }
    if (a.price > 0) {
      const double shares = h[i] / a.price;
      if (std::abs(shares - std::round(shares)) > 1e-9 * (1 + std::abs(shares))) { return -kInf; }
    }
  }
  if (!std::isfinite(trd)) { return -kInf; }
  return alpha.dot(h) - spec.gamma_risk * risk - spec.gamma_trd * trd - spec.gamma_hld * hld;
}

Scaling portfolio_scaling(const PortfolioSpec& spec)
{
  const Eigen::Index l = spec.assets_count(), k = spec.factors_count();
  Scaling s = Scaling::identity(k + 1, l + 1 + k);
  s.e.head(l).setConstant(0.1);
  s.e[l] = 0.3;
  s.e.tail(k).setConstant(0.1);
  return s;
}

Pwq spread_cost(double half_spread)
{
  if (!(half_spread >= 0)) { throw Error(ErrorCode::InvalidInput, "half spread must be nonnegative"); }
  return Pwq({Piece{0, -half_spread, 0, -kInf, 0}, Piece{0, half_spread, 0, 0, kInf}});
}

ImpactApprox impact_cost_approx(double d, double u_max, int segments)
{
  if (!(d >= 0)) { throw Error(ErrorCode::InvalidInput, "impact coefficient must be nonnegative"); }
  if (d == 0) { return {Pwq::quadratic(0, 0, 0), 0.0, 0.0}; }
  if (!(u_max > 0) || !std::isfinite(u_max) || segments < 1) {
    throw Error(ErrorCode::InvalidInput, "impact approximation needs a finite u_max > 0 and at least one segment");
  }
  auto g = [d](double u) { return d * std::pow(std::abs(u), 1.5); };
  const int S = segments;
  std::vector<double> t(static_cast<std::size_t>(S) + 1), slope(static_cast<std::size_t>(S));
  for (int j = 0; j <= S; ++j) {
    const double r = double(j) / S;
    t[std::size_t(j)] = u_max * r * r;
  }
  for (int j = 0; j < S; ++j) {
    slope[std::size_t(j)] = (g(t[std::size_t(j) + 1]) - g(t[std::size_t(j)])) / (t[std::size_t(j) + 1] - t[std::size_t(j)]);
  }
  std::vector<Piece> pieces;
  for (int j = 0; j < S; ++j) {
    const std::size_t J = std::size_t(j);
    const double t0 = t[J], t1 = t[J + 1], w = t1 - t0, mid = 0.5 * (t0 + t1);
    // curvature limited so that one-sided slopes stay monotone at both knots (and at the mirror point 0)
    const double left_gap = j == 0 ? 2 * slope[0] : slope[J] - slope[J - 1];
    const double right_gap = j + 1 < S ? slope[J + 1] - slope[J] : kInf;
    double theta = 0.375 * d / std::sqrt(mid);
    theta = std::min({theta, left_gap / (2 * w), right_gap / (2 * w)});
    theta = std::max(theta, 0.0);
    const double p = theta;
    const double q = slope[J] - theta * (t0 + t1);
    const double r = g(t0) - slope[J] * t0 + theta * t0 * t1;
    pieces.push_back({p, q, r, t0, t1});
    pieces.push_back({p, -q, r, -t1, -t0});
  }
  Pwq f(std::move(pieces));
  double max_abs = 0;
  for (int j = 0; j < S; ++j) {
    const double t0 = t[std::size_t(j)], w = t[std::size_t(j) + 1] - t0;
    for (int i = 0; i <= 256; ++i) {
      const double u = t0 + w * double(i) / 256;
      max_abs = std::max(max_abs, std::abs(f(u) - g(u)));
    }
  }
  return {std::move(f), max_abs, max_abs / g(u_max)};
}

Pwq min_trade_size(double u_min, double lo, double hi)
{
  if (!(u_min >= 0)) { throw Error(ErrorCode::InvalidInput, "minimum trade must be nonnegative"); }
  std::vector<Piece> pieces;
  if (lo <= -u_min) { pieces.push_back({0, 0, 0, lo, -u_min}); }
  if (lo <= 0 && 0 <= hi) { pieces.push_back({0, 0, 0, 0, 0}); }
  if (u_min <= hi) { pieces.push_back({0, 0, 0, u_min, hi}); }
  return Pwq(std::move(pieces));
}

Pwq per_trade_cost(double c, double lo, double hi)
{
  if (!(c >= 0)) { throw Error(ErrorCode::InvalidInput, "fixed cost must be nonnegative"); }
  std::vector<Piece> pieces;
  if (lo < 0) { pieces.push_back({0, 0, c, lo, std::min(0.0, hi)}); }
  if (lo <= 0 && 0 <= hi) { pieces.push_back({0, 0, 0, 0, 0}); }
  if (hi > 0) { pieces.push_back({0, 0, c, std::max(0.0, lo), hi}); }
  return Pwq(std::move(pieces));
}

Pwq tax_liability(const std::vector<TaxLot>& lots, double h_init, LotOrder order)
{
  check_lots(lots, h_init);
  std::vector<Piece> pieces{{0, 0, 0, 0, kInf}};
  double sold = 0, liability = 0;
  for (const auto& lot : ordered_lots(lots, order)) {
    if (lot.weight == 0) { continue; }
    const double gain = lot.rate * (1 - lot.basis_fraction);
    // L(u) = liability + gain * (-sold - u) on [-(sold + w), -sold]
    pieces.push_back({0, -gain, liability - gain * sold, -(sold + lot.weight), -sold});
    liability += gain * lot.weight;
    sold += lot.weight;
  }
  return Pwq(std::move(pieces));
}

Pwq position_limits(double lo, double hi)
{
  if (!(lo <= hi)) { throw Error(ErrorCode::EmptyDomain, "position limits with lower bound above upper bound"); }
  return Pwq::indicator(lo, hi);
}

Pwq min_holding_size(double h_min, double lo, double hi)
{
  return min_trade_size(h_min, lo, hi);
}

Pwq per_asset_holding_cost(double c, double lo, double hi)
{
  return per_trade_cost(c, lo, hi);
}

Pwq integer_shares(double price, double lo, double hi)
{
  if (!(price > 0)) { throw Error(ErrorCode::InvalidInput, "share price must be positive"); }
  if (!std::isfinite(lo) || !std::isfinite(hi)) {
    throw Error(ErrorCode::UnboundedInteger, "integer share constraint needs finite position bounds");
  }
  std::vector<Piece> pieces;
  const double first = std::ceil(lo / price - 1e-12), last = std::floor(hi / price + 1e-12);
  for (double j = first; j <= last; j += 1) { pieces.push_back({0, 0, 0, j * price, j * price}); }
  return Pwq(std::move(pieces));
}

PortfolioSpec synthesize_instance(std::uint64_t seed, Eigen::Index assets, Eigen::Index factors, int lots_per_asset)
{
  if (assets < 1 || factors < 1 || lots_per_asset < 0) {
    throw Error(ErrorCode::InvalidInput, "instance needs at least one asset and one factor");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Eigen::Index l = assets, k = factors;

  PortfolioSpec s;
  s.benchmark_mode = true;
  s.X.resize(l, k);
  for (Eigen::Index i = 0; i < l; ++i) {
    s.X(i, 0) = 1.0 + 0.3 * normal(rng);
    for (Eigen::Index j = 1; j < k; ++j) { s.X(i, j) = 0.5 * normal(rng); }
  }
  Matrix G(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) { G(i, j) = normal(rng); }
  }
  s.Sigma = 0.002 * (G * G.transpose()) / double(k) + 0.001 * Matrix::Identity(k, k);
  s.Sigma(0, 0) += 0.03;
  s.D.resize(l);
  for (Eigen::Index i = 0; i < l; ++i) { s.D[i] = 0.01 + 0.08 * unit(rng); }

  // capitalization-like benchmark weights
  s.h_bm.resize(l);
  for (Eigen::Index i = 0; i < l; ++i) { s.h_bm[i] = std::exp(1.2 * normal(rng)); }
  s.h_bm /= s.h_bm.sum();

  s.eta_lb = 0.98;
  s.eta_ub = 0.99;
  s.h_init.resize(l);
  for (Eigen::Index i = 0; i < l; ++i) {
    s.h_init[i] = unit(rng) < 0.4 ? 0.0 : s.h_bm[i] * (0.2 + 1.8 * unit(rng));
  }
  if (s.h_init.sum() <= 0) { s.h_init = s.h_bm; }
  s.h_init *= 0.985 / s.h_init.sum();

  s.gamma_risk = 100;
  s.gamma_trd = 1;
  s.gamma_hld = 1;
  s.gamma_sprd = 1;
  s.gamma_tax = 1;
  s.assets.resize(std::size_t(l));
  for (Eigen::Index i = 0; i < l; ++i) {
    AssetCosts& a = s.assets[std::size_t(i)];
    a.half_spread = 2e-4 + 8e-4 * unit(rng);
    a.trade_cost = 3e-5;
    a.holding_cost = 3e-5;
    a.lower = 0;
    a.upper = std::max(3 * s.h_bm[i], s.h_init[i]);
    if (s.h_init[i] > 0 && lots_per_asset > 0) {
      std::vector<double> w(static_cast<std::size_t>(lots_per_asset));
      for (auto& v : w) { v = 0.1 + unit(rng); }
      const double total = std::accumulate(w.begin(), w.end(), 0.0);
      double assigned = 0;
      for (int j = 0; j < lots_per_asset; ++j) {
        TaxLot lot;
        lot.weight = j + 1 < lots_per_asset ? s.h_init[i] * w[std::size_t(j)] / total : s.h_init[i] - assigned;
        assigned += lot.weight;
        lot.basis_fraction = 0.6 + 0.8 * unit(rng);
        lot.rate = unit(rng) < 0.5 ? 0.2 : 0.4;
        a.lots.push_back(lot);
      }
    } else if (s.h_init[i] > 0) {
      a.lots.push_back({s.h_init[i], 1.0, 0.0});
    }
  }
  return s;
}

}  // namespace sapopt
