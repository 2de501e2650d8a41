#include "sapopt/io.hpp"

#include <fstream>
#include <sstream>

namespace sapopt {

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& msg)
{
  throw Error(ErrorCode::ParseError, where + ": " + msg);
}

const Json& field(const Json& j, const char* key, const std::string& where)
{
  if (!j.is_object()) { fail(where, "expected an object"); }
  auto it = j.find(key);
  if (it == j.end()) { fail(where.empty() ? key : where + "." + key, "missing field"); }
  return *it;
}

std::string child(const std::string& where, const char* key)
{
  return where.empty() ? std::string(key) : where + "." + key;
}

std::string child(const std::string& where, std::size_t i)
{
  return where + "[" + std::to_string(i) + "]";
}

double extended(const Json& j, const std::string& where)
{
  if (j.is_number()) { return j.get<double>(); }
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf" || s == "+inf") { return infinity<double>(); }
    if (s == "-inf") { return -infinity<double>(); }
  }
  fail(where, "expected a number or \"inf\"/\"-inf\"");
}

double number(const Json& j, const std::string& where)
{
  if (!j.is_number()) { fail(where, "expected a number"); }
  return j.get<double>();
}

double number_or(const Json& j, const char* key, double fallback, const std::string& where)
{
  auto it = j.find(key);
  return it == j.end() ? fallback : extended(*it, child(where, key));
}

Json extended_json(double v)
{
  if (v == infinity<double>()) { return "inf"; }
  if (v == -infinity<double>()) { return "-inf"; }
  return v;
}

Json nullable(double v)
{
  return std::isfinite(v) ? Json(v) : Json(nullptr);
}

Vector vector_from(const Json& j, const std::string& where)
{
  if (!j.is_array()) { fail(where, "expected an array of numbers"); }
  Vector v(Eigen::Index(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) { v[Eigen::Index(i)] = number(j[i], child(where, i)); }
  return v;
}

Json vector_json(const Vector& v)
{
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) { out.push_back(v[i]); }
  return out;
}

Matrix matrix_from(const Json& j, Eigen::Index cols, const std::string& where)
{
  if (!j.is_array()) { fail(where, "expected an array of rows"); }
  Matrix M(Eigen::Index(j.size()), cols);
  for (std::size_t i = 0; i < j.size(); ++i) {
    const Vector row = vector_from(j[i], child(where, i));
    if (row.size() != cols) {
      fail(child(where, i), "row has " + std::to_string(row.size()) + " entries, expected " + std::to_string(cols));
    }
    M.row(Eigen::Index(i)) = row.transpose();
  }
  return M;
}

Json matrix_json(const Matrix& M)
{
  Json out = Json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) { out.push_back(vector_json(M.row(i).transpose())); }
  return out;
}

Eigen::Index row_length(const Json& rows, const std::string& where)
{
  if (!rows.is_array()) { fail(where, "expected an array of rows"); }
  if (rows.empty()) { return 0; }
  if (!rows[0].is_array()) { fail(child(where, std::size_t(0)), "expected an array of numbers"); }
  return Eigen::Index(rows[0].size());
}

}  // namespace

Json pwq_to_json(const Pwq& f)
{
  Json out = Json::array();
  for (const auto& pc : f.pieces()) {
    Json piece = Json::object();
    piece["p"] = pc.p;
    piece["q"] = pc.q;
    piece["r"] = pc.r;
    piece["a"] = extended_json(pc.a);
    piece["b"] = extended_json(pc.b);
    out.push_back(std::move(piece));
  }
  return out;
}

Pwq pwq_from_json(const Json& j, const std::string& where)
{
  if (!j.is_array()) { fail(where, "expected a list of pieces"); }
  std::vector<Piece> pieces;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string w = child(where, i);
    Piece pc;
    pc.p = number(field(j[i], "p", w), child(w, "p"));
    pc.q = number(field(j[i], "q", w), child(w, "q"));
    pc.r = number(field(j[i], "r", w), child(w, "r"));
    pc.a = extended(field(j[i], "a", w), child(w, "a"));
    pc.b = extended(field(j[i], "b", w), child(w, "b"));
    if (!(pc.a <= pc.b)) { fail(w, "interval must satisfy a <= b"); }
    if (!pieces.empty() && pc.a < pieces.back().b) { fail(w, "pieces must be ordered with b_i <= a_{i+1}"); }
    pieces.push_back(pc);
  }
  try {
    return Pwq(std::move(pieces));
  } catch (const Error& e) {
    fail(where, e.what());
  }
}

Json problem_to_json(const SapProblem& p, const std::optional<Scaling>& scaling)
{
  Json out = Json::object();
  out["format"] = "sap-problem";
  out["version"] = 1;
  const Eigen::Index m = p.rows(), n = p.cols();
  if (2 * p.A().nonZeros() >= m * n) {
    out["A"] = matrix_json(Matrix(p.A()));
  } else {
    std::vector<std::tuple<Eigen::Index, Eigen::Index, double>> trip;
    for (Eigen::Index j = 0; j < p.A().outerSize(); ++j) {
      for (SparseMatrix::InnerIterator it(p.A(), j); it; ++it) { trip.emplace_back(it.row(), it.col(), it.value()); }
    }
    std::sort(trip.begin(), trip.end());
    Json entries = Json::array();
    for (const auto& [i, jj, v] : trip) { entries.push_back(Json{{"i", i}, {"j", jj}, {"v", v}}); }
    out["A"] = Json{{"rows", m}, {"cols", n}, {"entries", entries}};
  }
  out["b"] = vector_json(p.b());
  Json fs = Json::array();
  for (const auto& f : p.f()) { fs.push_back(pwq_to_json(f)); }
  out["functions"] = std::move(fs);
  if (scaling) { out["scaling"] = Json{{"d", vector_json(scaling->d)}, {"e", vector_json(scaling->e)}}; }
  return out;
}

ProblemFile problem_from_json(const Json& j)
{
  if (!j.is_object()) { fail("(root)", "expected an object"); }
  if (j.contains("format") && j["format"] != "sap-problem") { fail("format", "expected \"sap-problem\""); }
  if (j.contains("version") && j["version"] != 1) { fail("version", "unsupported version"); }

  const Json& fj = field(j, "functions", "");
  if (!fj.is_array()) { fail("functions", "expected a list of functions"); }
  std::vector<Pwq> f;
  for (std::size_t i = 0; i < fj.size(); ++i) { f.push_back(pwq_from_json(fj[i], child("functions", i))); }
  const Vector b = vector_from(field(j, "b", ""), "b");
  const Eigen::Index n = Eigen::Index(f.size()), m = b.size();

  const Json& aj = field(j, "A", "");
  SparseMatrix A;
  if (aj.is_array()) {
    const Eigen::Index cols = aj.empty() ? n : row_length(aj, "A");
    A = matrix_from(aj, cols, "A").sparseView();
    if (aj.empty()) { A.resize(0, n); }
  } else if (aj.is_object()) {
    const auto rows = Eigen::Index(number(field(aj, "rows", "A"), "A.rows"));
    const auto cols = Eigen::Index(number(field(aj, "cols", "A"), "A.cols"));
    const Json& ej = field(aj, "entries", "A");
    if (!ej.is_array()) { fail("A.entries", "expected a list of {i, j, v}"); }
    std::vector<Eigen::Triplet<double>> trip;
    for (std::size_t t = 0; t < ej.size(); ++t) {
      const std::string w = child("A.entries", t);
      const auto i = Eigen::Index(number(field(ej[t], "i", w), child(w, "i")));
      const auto jj = Eigen::Index(number(field(ej[t], "j", w), child(w, "j")));
      if (i < 0 || i >= rows || jj < 0 || jj >= cols) { fail(w, "index out of range"); }
      trip.emplace_back(i, jj, number(field(ej[t], "v", w), child(w, "v")));
    }
    A.resize(rows, cols);
    A.setFromTriplets(trip.begin(), trip.end());
  } else {
    fail("A", "expected rows or {rows, cols, entries}");
  }
  (void)m;

  ProblemFile out{SapProblem(std::move(A), b, std::move(f)), std::nullopt};
  if (j.contains("scaling")) {
    const Json& sj = j["scaling"];
    Scaling s{vector_from(field(sj, "d", "scaling"), "scaling.d"), vector_from(field(sj, "e", "scaling"), "scaling.e")};
    s.validate(out.problem.rows(), out.problem.cols());
    out.scaling = std::move(s);
  }
  return out;
}

Json portfolio_to_json(const PortfolioSpec& spec)
{
  Json out = Json::object();
  out["format"] = "portfolio";
  out["version"] = 1;
  out["benchmark_mode"] = spec.benchmark_mode;
  if (!spec.benchmark_mode) { out["alpha"] = vector_json(spec.alpha); }
  out["X"] = matrix_json(spec.X);
  out["Sigma"] = matrix_json(spec.Sigma);
  out["D"] = vector_json(spec.D);
  out["h_init"] = vector_json(spec.h_init);
  out["h_bm"] = vector_json(spec.h_bm);
  out["gamma"] = Json{{"risk", spec.gamma_risk}, {"trd", spec.gamma_trd}, {"hld", spec.gamma_hld},
                      {"sprd", spec.gamma_sprd}, {"tax", spec.gamma_tax}};
  out["eta"] = Json{{"lb", spec.eta_lb}, {"ub", spec.eta_ub}};
  out["lot_order"] = spec.lot_order == LotOrder::Fifo ? "fifo" : "hifo";
  Json assets = Json::array();
  for (const auto& a : spec.assets) {
    Json aj = Json::object();
    aj["half_spread"] = a.half_spread;
    aj["impact"] = a.impact;
    aj["impact_max"] = a.impact_max;
    aj["impact_segments"] = a.impact_segments;
    aj["min_trade"] = a.min_trade;
    aj["trade_cost"] = a.trade_cost;
    Json lots = Json::array();
    for (const auto& lot : a.lots) {
      lots.push_back(Json{{"weight", lot.weight}, {"basis_fraction", lot.basis_fraction}, {"rate", lot.rate}});
    }
    aj["lots"] = std::move(lots);
    aj["lower"] = extended_json(a.lower);
    aj["upper"] = extended_json(a.upper);
    aj["min_holding"] = a.min_holding;
    aj["holding_cost"] = a.holding_cost;
    aj["price"] = a.price;
    assets.push_back(std::move(aj));
  }
  out["assets"] = std::move(assets);
  return out;
}

PortfolioSpec portfolio_from_json(const Json& j)
{
  if (!j.is_object()) { fail("(root)", "expected an object"); }
  if (!j.contains("format") || j["format"] != "portfolio") { fail("format", "expected \"portfolio\""); }
  PortfolioSpec s;
  s.benchmark_mode = j.value("benchmark_mode", false);
  const Json& xj = field(j, "X", "");
  s.X = matrix_from(xj, row_length(xj, "X"), "X");
  const Eigen::Index k = s.X.cols();
  s.Sigma = matrix_from(field(j, "Sigma", ""), k, "Sigma");
  s.D = vector_from(field(j, "D", ""), "D");
  s.h_init = vector_from(field(j, "h_init", ""), "h_init");
  if (j.contains("h_bm")) { s.h_bm = vector_from(j["h_bm"], "h_bm"); }
  if (j.contains("alpha")) { s.alpha = vector_from(j["alpha"], "alpha"); }
  if (j.contains("gamma")) {
    const Json& g = j["gamma"];
    s.gamma_risk = number_or(g, "risk", s.gamma_risk, "gamma");
    s.gamma_trd = number_or(g, "trd", s.gamma_trd, "gamma");
    s.gamma_hld = number_or(g, "hld", s.gamma_hld, "gamma");
    s.gamma_sprd = number_or(g, "sprd", s.gamma_sprd, "gamma");
    s.gamma_tax = number_or(g, "tax", s.gamma_tax, "gamma");
  }
  if (j.contains("eta")) {
    s.eta_lb = number_or(j["eta"], "lb", s.eta_lb, "eta");
    s.eta_ub = number_or(j["eta"], "ub", s.eta_ub, "eta");
  }
  if (j.contains("lot_order")) {
    const std::string order = j["lot_order"].is_string() ? j["lot_order"].get<std::string>() : "";
    if (order == "hifo") {
      s.lot_order = LotOrder::HighestBasisFirst;
    } else if (order == "fifo") {
      s.lot_order = LotOrder::Fifo;
    } else {
      fail("lot_order", "expected \"hifo\" or \"fifo\"");
    }
  }
  const Json& aj = field(j, "assets", "");
  if (!aj.is_array()) { fail("assets", "expected a list"); }
  for (std::size_t i = 0; i < aj.size(); ++i) {
    const std::string w = child("assets", i);
    const Json& e = aj[i];
    if (!e.is_object()) { fail(w, "expected an object"); }
    AssetCosts a;
    a.half_spread = number_or(e, "half_spread", 0, w);
    a.impact = number_or(e, "impact", 0, w);
    a.impact_max = number_or(e, "impact_max", 0, w);
    a.impact_segments = int(number_or(e, "impact_segments", 16, w));
    a.min_trade = number_or(e, "min_trade", 0, w);
    a.trade_cost = number_or(e, "trade_cost", 0, w);
    a.lower = number_or(e, "lower", -infinity<double>(), w);
    a.upper = number_or(e, "upper", infinity<double>(), w);
    a.min_holding = number_or(e, "min_holding", 0, w);
    a.holding_cost = number_or(e, "holding_cost", 0, w);
    a.price = number_or(e, "price", 0, w);
    if (e.contains("lots")) {
      const Json& lj = e["lots"];
      if (!lj.is_array()) { fail(child(w, "lots"), "expected a list"); }
      for (std::size_t t = 0; t < lj.size(); ++t) {
        const std::string lw = child(child(w, "lots"), t);
        TaxLot lot;
        lot.weight = number(field(lj[t], "weight", lw), child(lw, "weight"));
        lot.basis_fraction = number(field(lj[t], "basis_fraction", lw), child(lw, "basis_fraction"));
        lot.rate = number(field(lj[t], "rate", lw), child(lw, "rate"));
        a.lots.push_back(lot);
      }
    }
    s.assets.push_back(std::move(a));
  }
  s.validate();
  return s;
}

Json result_to_json(const SolveResult& r, const SolveOptions& opts)
{
  Json out = Json::object();
  out["x_best"] = r.x_best.size() > 0 ? vector_json(r.x_best) : Json(nullptr);
  out["o_best"] = nullable(r.o_best);
  out["d_star"] = r.d_star ? Json(*r.d_star) : Json(nullptr);
  out["gap"] = r.gap ? Json(*r.gap) : Json(nullptr);
  out["residual"] = nullable(r.residual_at_best);
  out["iterations"] = r.iterations;
  out["relaxation_iterations"] = r.relaxation_iterations;
  out["status"] = to_string(r.status);
  out["runtime_ms"] = r.wall_ms;
  out["relaxation_ms"] = r.relaxation_ms;
  const char* init = opts.init == InitMode::Relaxation ? "relax" : opts.init == InitMode::Zeros ? "zeros" : "warm";
  out["options"] = Json{{"eps_res", opts.eps_res},       {"eps_obj", opts.eps_obj},   {"check_every", opts.check_every},
                        {"patience", opts.patience},     {"max_iter", opts.max_iter}, {"init", init},
                        {"scaled", opts.scaling.has_value()}, {"parallel_prox", opts.parallel_prox}};
  return out;
}

Json parse_json(const std::string& text)
{
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ", column " + std::to_string(col)
                                           + ": malformed JSON");
  }
}

Json read_json_file(const std::string& path)
{
  std::ifstream in(path);
  if (!in) { throw Error(ErrorCode::ParseError, path + ": cannot open file"); }
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_json(ss.str());
  } catch (const Error& e) {
    throw Error(ErrorCode::ParseError, path + ": " + e.what());
  }
}

std::string dump(const Json& j)
{
  return j.dump(2) + "\n";
}

}  // namespace sapopt
