#include "bratteli/catalog.hpp"

namespace bratteli::catalog {

namespace {

PolyMatrix constant_polys(const IntMatrix& m) {
  PolyMatrix p(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) p(r, c) = Polynomial(m(r, c));
  return p;
}

Polynomial json_poly(const nlohmann::json& j, const char* what) {
  if (j.is_string()) return parse_expression(j.get<std::string>());
  if (j.is_number_integer()) return Polynomial(static_cast<long>(j.get<long long>()));
  throw ParamError(std::string("parameter '") + what + "' must be an expression");
}

}  // namespace

BratteliDiagram odometer(const std::vector<Integer>& bases) {
  if (bases.empty()) throw ParamError("odometer needs at least one base");
  for (const auto& b : bases)
    if (b < 1) throw ParamError("odometer bases must be positive");
  std::vector<IntMatrix> prefix;
  for (std::size_t i = 1; i < bases.size(); ++i) prefix.push_back(IntMatrix{{bases[i]}});
  return BratteliDiagram("odometer", {bases.front()}, std::move(prefix));
}

BratteliDiagram odometer(const Polynomial& base) {
  if (!base.positive_from(0)) throw ParamError("odometer base " + base.to_string() + " must be positive for n >= 0");
  PolyMatrix m(1, 1);
  m(0, 0) = base;
  return BratteliDiagram("odometer", {base(0L)}, {}, DiagramRule::constant(std::move(m), 1));
}

BratteliDiagram ers(const PolyMatrix& entries, IntVector root_edges) {
  DiagramRule rule = DiagramRule::constant(entries, 1);
  if (!rule.uniform_row_sum()) throw ParamError("ers: row sums of the rule differ");
  if (root_edges.empty()) root_edges.assign(entries.cols(), Integer(1));
  return BratteliDiagram("ers", std::move(root_edges), {}, std::move(rule));
}

BratteliDiagram two_vertex(const Polynomial& a) {
  PolyMatrix m(2, 2);
  m(0, 0) = a;
  m(0, 1) = Polynomial(1);
  m(1, 0) = Polynomial(1);
  m(1, 1) = a;
  return BratteliDiagram("two_vertex a=" + a.to_string(), {1, 1}, {}, DiagramRule::constant(std::move(m), 1));
}

BratteliDiagram stationary(const IntMatrix& matrix, IntVector root_edges) {
  if (!matrix.square()) throw ParamError("stationary matrix must be square");
  if (root_edges.empty()) root_edges.assign(matrix.cols(), Integer(1));
  return BratteliDiagram("stationary", std::move(root_edges), {}, DiagramRule::constant(constant_polys(matrix), 1));
}

BratteliDiagram pascal() { return BratteliDiagram("pascal", {1, 1}, {}, DiagramRule::pascal(1)); }

BratteliDiagram countable_chain(const Polynomial& a) {
  if (!a.positive_from(1)) throw ParamError("countable_chain: a(n) must be a positive integer for every n >= 1");
  const Polynomial n = Polynomial::variable();
  DegreeTest t = series_test(RationalFunction(n, a + n));
  if (!t.converges)
    throw ParamError("countable_chain: sum n/(a(n)+n) diverges for a = " + a.to_string() + " (" + t.reason + ")");
  return BratteliDiagram("countable_chain a=" + a.to_string(), {1, 1}, {}, DiagramRule::countable_chain(a, 1));
}

BratteliDiagram make(const std::string& family, const nlohmann::json& params) {
  if (family == "pascal") return pascal();
  if (family == "odometer") {
    if (params.contains("base")) return odometer(json_poly(params["base"], "base"));
    if (!params.contains("bases") || !params["bases"].is_array()) throw ParamError("odometer needs 'bases' or 'base'");
    std::vector<Integer> bases;
    for (const auto& b : params["bases"]) bases.emplace_back(std::to_string(b.get<long long>()));
    return odometer(bases);
  }
  if (family == "two_vertex") {
    if (!params.contains("a")) throw ParamError("two_vertex needs 'a'");
    return two_vertex(json_poly(params["a"], "a"));
  }
  if (family == "countable_chain") {
    if (!params.contains("a")) throw ParamError("countable_chain needs 'a'");
    return countable_chain(json_poly(params["a"], "a"));
  }
  if (family == "stationary" || family == "ers") {
    if (!params.contains("matrix") || !params["matrix"].is_array()) throw ParamError(family + " needs 'matrix'");
    const auto& j = params["matrix"];
    PolyMatrix m(j.size(), j.empty() ? 0 : j[0].size());
    for (std::size_t r = 0; r < m.rows(); ++r)
      for (std::size_t c = 0; c < m.cols(); ++c) m(r, c) = json_poly(j[r][c], "matrix");
    if (family == "ers") return ers(m);
    IntMatrix im(m.rows(), m.cols());
    for (std::size_t r = 0; r < m.rows(); ++r)
      for (std::size_t c = 0; c < m.cols(); ++c) {
        if (!m(r, c).is_constant()) throw ParamError("stationary matrix entries must be integers");
        im(r, c) = m(r, c)(0L);
      }
    return stationary(im);
  }
  throw ParamError("unknown catalog family '" + family + "'");
}

}  // namespace bratteli::catalog
