#include "system.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace sflow {

using nlohmann::json;

std::vector<std::string> LinSingSystem::chart_names() const {
  if (autonomous) return states;
  std::vector<std::string> names{common.time_variable};
  names.insert(names.end(), states.begin(), states.end());
  return names;
}

namespace {
std::vector<std::string> tqv_chart(const std::string& t,
                                   const std::vector<std::string>& q,
                                   const std::vector<std::string>& v) {
  std::vector<std::string> names{t};
  names.insert(names.end(), q.begin(), q.end());
  names.insert(names.end(), v.begin(), v.end());
  return names;
}
}  // namespace

std::vector<std::string> SecondOrderSystem::chart_names() const {
  return tqv_chart(common.time_variable, q_names, v_names);
}

std::vector<std::string> LagrangianSpec::chart_names() const {
  return tqv_chart(common.time_variable, q_names, v_names);
}

std::vector<std::string> SkinnerRuskSpec::chart_names() const {
  std::vector<std::string> names{common.time_variable};
  names.insert(names.end(), q_names.begin(), q_names.end());
  names.insert(names.end(), p_names.begin(), p_names.end());
  names.insert(names.end(), v_names.begin(), v_names.end());
  return names;
}

std::vector<std::string> ImplicitResiduals::chart_names() const {
  std::vector<std::string> names{common.time_variable};
  names.insert(names.end(), states.begin(), states.end());
  return names;
}

// ---------------------------------------------------------------------------
// Loading

namespace {

[[noreturn]] void schema_error(const std::string& path, const std::string& what) {
  fail(Err::Schema, "spec field '" + path + "': " + what);
}

const json& require(const json& doc, const std::string& key) {
  if (!doc.contains(key)) schema_error(key, "missing");
  return doc.at(key);
}

std::vector<std::string> name_list(const json& j, const std::string& path) {
  if (!j.is_array()) schema_error(path, "expected an array of names");
  std::vector<std::string> names;
  for (const auto& x : j) {
    if (!x.is_string()) schema_error(path, "expected strings");
    names.push_back(x.get<std::string>());
  }
  return names;
}

void check_unique(const std::vector<std::string>& names, const std::string& path) {
  std::set<std::string> seen;
  for (const auto& n : names) {
    if (n.empty()) schema_error(path, "empty name");
    if (!seen.insert(n).second) schema_error(path, "duplicate name '" + n + "'");
  }
}

SystemCommon load_common(const json& doc) {
  SystemCommon c;
  if (doc.contains("time_variable")) {
    if (!doc.at("time_variable").is_string())
      schema_error("time_variable", "expected a string");
    c.time_variable = doc.at("time_variable").get<std::string>();
  }
  if (doc.contains("parameters")) {
    const auto& p = doc.at("parameters");
    if (!p.is_object()) schema_error("parameters", "expected an object");
    for (auto it = p.begin(); it != p.end(); ++it) {
      if (!it.value().is_number())
        schema_error("parameters." + it.key(), "expected a number");
      c.parameters[it.key()] = it.value().get<double>();
    }
  }
  if (doc.contains("time_functions")) {
    const auto& tf = doc.at("time_functions");
    if (!tf.is_object()) schema_error("time_functions", "expected an object");
    for (auto it = tf.begin(); it != tf.end(); ++it) {
      if (!it.value().is_string())
        schema_error("time_functions." + it.key(), "expected an expression string");
      ParseContext ctx;
      ctx.variables = {c.time_variable};
      ctx.parameters = &c.parameters;
      ctx.time_functions = &c.time_functions;
      ctx.time_index = 0;
      try {
        c.time_functions.emplace_back(it.key(),
                                      parse_expr(it.value().get<std::string>(), ctx));
      } catch (const Error& e) {
        schema_error("time_functions." + it.key(), e.what());
      }
    }
  }
  if (doc.contains("tolerance")) {
    if (!doc.at("tolerance").is_number()) schema_error("tolerance", "expected a number");
    c.tolerance = doc.at("tolerance").get<double>();
    if (c.tolerance <= 0) schema_error("tolerance", "must be positive");
  }
  return c;
}

void load_seeds(const json& doc, SystemCommon& c, int dim) {
  if (!doc.contains("seeds")) return;
  const auto& s = doc.at("seeds");
  if (!s.is_array()) schema_error("seeds", "expected an array of points");
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto& pt = s[i];
    if (!pt.is_array() || int(pt.size()) != dim)
      schema_error("seeds[" + std::to_string(i) + "]",
                   "expected " + std::to_string(dim) + " numbers");
    std::vector<double> p;
    for (const auto& x : pt) {
      if (!x.is_number()) schema_error("seeds", "expected numbers");
      p.push_back(x.get<double>());
    }
    c.seeds.push_back(std::move(p));
  }
}

ParseContext make_ctx(const std::vector<std::string>& chart, const SystemCommon& c) {
  ParseContext ctx;
  ctx.variables = chart;
  ctx.parameters = &c.parameters;
  ctx.time_functions = &c.time_functions;
  ctx.time_index = -1;
  for (std::size_t i = 0; i < chart.size(); ++i)
    if (chart[i] == c.time_variable) ctx.time_index = int(i);
  return ctx;
}

Expr parse_field(const std::string& text, const ParseContext& ctx,
                 const std::string& path) {
  try {
    return parse_expr(text, ctx);
  } catch (const Error& e) {
    if (e.code() == Err::Syntax || e.code() == Err::UnknownIdentifier)
      schema_error(path, e.what());
    throw;
  }
}

Mat<Expr> load_matrix(const json& doc, const std::string& key, int cols,
                      const ParseContext& ctx) {
  const auto& a = require(doc, key);
  if (!a.is_array() || a.empty()) schema_error(key, "expected a non-empty array of rows");
  Mat<Expr> m(int(a.size()), cols);
  for (std::size_t r = 0; r < a.size(); ++r) {
    const auto& row = a[r];
    if (!row.is_array() || int(row.size()) != cols)
      schema_error(key + "[" + std::to_string(r) + "]",
                   "expected a row of " + std::to_string(cols) + " expressions");
    for (std::size_t cc = 0; cc < row.size(); ++cc) {
      if (!row[cc].is_string()) schema_error(key, "expected expression strings");
      m.at(int(r), int(cc)) = parse_field(
          row[cc].get<std::string>(), ctx,
          key + "[" + std::to_string(r) + "][" + std::to_string(cc) + "]");
    }
  }
  return m;
}

std::vector<Expr> load_vector(const json& doc, const std::string& key, int rows,
                              const ParseContext& ctx) {
  const auto& a = require(doc, key);
  if (!a.is_array() || int(a.size()) != rows)
    schema_error(key, "expected " + std::to_string(rows) + " expressions");
  std::vector<Expr> v;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a[i].is_string()) schema_error(key, "expected expression strings");
    v.push_back(parse_field(a[i].get<std::string>(), ctx,
                            key + "[" + std::to_string(i) + "]"));
  }
  return v;
}

std::vector<std::string> derived_names(const std::vector<std::string>& base,
                                       const std::string& prefix) {
  std::vector<std::string> out;
  for (const auto& n : base) out.push_back(prefix + n);
  return out;
}

LinSingSystem load_lin_sing(const json& doc) {
  LinSingSystem sys;
  sys.common = load_common(doc);
  sys.autonomous = doc.value("autonomous", false);
  sys.states = name_list(require(doc, "states"), "states");
  check_unique(sys.states, "states");
  if (!sys.autonomous)
    for (const auto& s : sys.states)
      if (s == sys.common.time_variable)
        schema_error("states", "time variable '" + s + "' may not be a state");

  auto chart = sys.chart_names();
  auto ctx = make_ctx(chart, sys.common);
  sys.A = load_matrix(doc, "A", sys.state_count(), ctx);
  const bool has_b = doc.contains("b"), has_c = doc.contains("c");
  if (sys.autonomous) {
    if (has_b == has_c)
      schema_error("b", "autonomous systems take exactly one of 'b' or 'c'");
    if (has_b) {
      auto b = load_vector(doc, "b", sys.A.rows, ctx);
      for (auto& e : b) sys.c.push_back(Expr::neg(e));
    } else {
      sys.c = load_vector(doc, "c", sys.A.rows, ctx);
    }
    if (doc.contains("time_state")) {
      if (!doc.at("time_state").is_number_integer())
        schema_error("time_state", "expected an integer");
      sys.time_state = doc.at("time_state").get<int>();
      if (sys.time_state < 0 || sys.time_state >= sys.state_count())
        schema_error("time_state", "out of range");
    }
  } else {
    if (has_b) schema_error("b", "time-dependent systems use 'c' (A q' + c = 0)");
    sys.c = load_vector(doc, "c", sys.A.rows, ctx);
  }
  load_seeds(doc, sys.common, sys.chart_dim());
  return sys;
}

SecondOrderSystem load_second_order(const json& doc) {
  SecondOrderSystem sys;
  sys.common = load_common(doc);
  sys.q_names = name_list(require(doc, "states"), "states");
  sys.v_names = derived_names(sys.q_names, "v_");
  auto chart = sys.chart_names();
  check_unique(chart, "states");
  auto ctx = make_ctx(chart, sys.common);
  sys.A = load_matrix(doc, "A", sys.dof(), ctx);
  sys.c = load_vector(doc, "c", sys.A.rows, ctx);
  load_seeds(doc, sys.common, int(chart.size()));
  return sys;
}

LagrangianSpec load_lagrangian(const json& doc) {
  LagrangianSpec spec;
  spec.common = load_common(doc);
  spec.q_names = name_list(require(doc, "q"), "q");
  spec.v_names = derived_names(spec.q_names, "v_");
  auto chart = spec.chart_names();
  check_unique(chart, "q");
  auto ctx = make_ctx(chart, spec.common);
  if (!require(doc, "L").is_string()) schema_error("L", "expected an expression string");
  spec.L = parse_field(doc.at("L").get<std::string>(), ctx, "L");
  load_seeds(doc, spec.common, int(chart.size()));
  return spec;
}

SkinnerRuskSpec load_skinner_rusk(const json& doc) {
  SkinnerRuskSpec spec;
  spec.common = load_common(doc);
  spec.q_names = name_list(require(doc, "q"), "q");
  spec.p_names.push_back("p_0");
  for (const auto& q : spec.q_names) spec.p_names.push_back("p_" + q);
  spec.v_names = derived_names(spec.q_names, "v_");
  auto chart = spec.chart_names();
  check_unique(chart, "q");
  auto ctx = make_ctx(chart, spec.common);
  if (!require(doc, "L").is_string()) schema_error("L", "expected an expression string");
  spec.L = parse_field(doc.at("L").get<std::string>(), ctx, "L");
  load_seeds(doc, spec.common, int(chart.size()));
  return spec;
}

ImplicitResiduals load_implicit(const json& doc) {
  ImplicitResiduals sys;
  sys.common = load_common(doc);
  sys.states = name_list(require(doc, "states"), "states");
  sys.v_names = derived_names(sys.states, "v_");
  std::vector<std::string> full{sys.common.time_variable};
  full.insert(full.end(), sys.states.begin(), sys.states.end());
  full.insert(full.end(), sys.v_names.begin(), sys.v_names.end());
  check_unique(full, "states");
  auto ctx = make_ctx(full, sys.common);
  const auto& f = require(doc, "F");
  if (!f.is_array() || f.empty()) schema_error("F", "expected a non-empty array");
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (!f[i].is_string()) schema_error("F", "expected expression strings");
    sys.F.push_back(
        parse_field(f[i].get<std::string>(), ctx, "F[" + std::to_string(i) + "]"));
  }
  load_seeds(doc, sys.common, int(sys.chart_names().size()));
  return sys;
}

}  // namespace

SystemDoc load_system(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    fail(Err::Schema, std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) fail(Err::Schema, "spec must be a JSON object");
  const std::string kind = require(doc, "kind").is_string()
                               ? doc.at("kind").get<std::string>()
                               : (schema_error("kind", "expected a string"), "");
  if (kind == "linearly_singular") return load_lin_sing(doc);
  if (kind == "second_order") return load_second_order(doc);
  if (kind == "lagrangian") return load_lagrangian(doc);
  if (kind == "skinner_rusk") return load_skinner_rusk(doc);
  if (kind == "implicit") return load_implicit(doc);
  schema_error("kind", "unknown kind '" + kind + "'");
}

SystemDoc load_system_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Err::Io, "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return load_system(ss.str());
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

json common_json(const SystemCommon& c) {
  json doc;
  doc["time_variable"] = c.time_variable;
  if (!c.parameters.empty()) {
    json p = json::object();
    for (const auto& [k, v] : c.parameters) p[k] = v;
    doc["parameters"] = p;
  }
  if (!c.time_functions.empty()) {
    json tf = json::object();
    for (const auto& [k, e] : c.time_functions) tf[k] = e.str();
    doc["time_functions"] = tf;
  }
  if (!c.seeds.empty()) doc["seeds"] = c.seeds;
  if (c.tolerance > 0) doc["tolerance"] = c.tolerance;
  return doc;
}

json matrix_json(const Mat<Expr>& m) {
  json rows = json::array();
  for (int r = 0; r < m.rows; ++r) {
    json row = json::array();
    for (int c = 0; c < m.cols; ++c) row.push_back(m.at(r, c).str());
    rows.push_back(row);
  }
  return rows;
}

json vector_json(const std::vector<Expr>& v, bool negate) {
  json a = json::array();
  for (const auto& e : v) a.push_back((negate ? Expr::neg(e) : e).str());
  return a;
}

}  // namespace

std::string serialize_system(const SystemDoc& doc) {
  json out;
  std::visit(
      [&](const auto& sys) {
        using T = std::decay_t<decltype(sys)>;
        out = common_json(sys.common);
        if constexpr (std::is_same_v<T, LinSingSystem>) {
          out["kind"] = "linearly_singular";
          out["autonomous"] = sys.autonomous;
          out["states"] = sys.states;
          out["A"] = matrix_json(sys.A);
          if (sys.autonomous) {
            out["b"] = vector_json(sys.c, /*negate=*/true);
            if (sys.time_state >= 0) out["time_state"] = sys.time_state;
          } else {
            out["c"] = vector_json(sys.c, /*negate=*/false);
          }
        } else if constexpr (std::is_same_v<T, SecondOrderSystem>) {
          out["kind"] = "second_order";
          out["states"] = sys.q_names;
          out["A"] = matrix_json(sys.A);
          out["c"] = vector_json(sys.c, false);
        } else if constexpr (std::is_same_v<T, LagrangianSpec>) {
          out["kind"] = "lagrangian";
          out["q"] = sys.q_names;
          out["L"] = sys.L.str();
        } else if constexpr (std::is_same_v<T, SkinnerRuskSpec>) {
          out["kind"] = "skinner_rusk";
          out["q"] = sys.q_names;
          out["L"] = sys.L.str();
        } else {
          out["kind"] = "implicit";
          out["states"] = sys.states;
          json f = json::array();
          for (const auto& e : sys.F) f.push_back(e.str());
          out["F"] = f;
        }
      },
      doc);
  return out.dump(2) + "\n";
}

const SystemCommon& system_common(const SystemDoc& doc) {
  return std::visit([](const auto& s) -> const SystemCommon& { return s.common; },
                    doc);
}

std::string system_kind(const SystemDoc& doc) {
  struct V {
    std::string operator()(const LinSingSystem&) { return "linearly_singular"; }
    std::string operator()(const SecondOrderSystem&) { return "second_order"; }
    std::string operator()(const LagrangianSpec&) { return "lagrangian"; }
    std::string operator()(const SkinnerRuskSpec&) { return "skinner_rusk"; }
    std::string operator()(const ImplicitResiduals&) { return "implicit"; }
  };
  return std::visit(V{}, doc);
}

std::vector<std::string> system_chart(const SystemDoc& doc) {
  return std::visit([](const auto& s) { return s.chart_names(); }, doc);
}

// ---------------------------------------------------------------------------
// Residuals

std::vector<double> residual(const LinSingSystem& sys,
                             std::span<const double> point,
                             std::span<const double> velocity) {
  if (int(point.size()) != sys.chart_dim())
    fail(Err::Dimension, "point dimension does not match system chart");
  if (int(velocity.size()) != sys.state_count())
    fail(Err::Dimension, "velocity dimension does not match state count");
  std::vector<double> r(sys.rows(), 0.0);
  for (int i = 0; i < sys.rows(); ++i) {
    double acc = sys.c[i].eval(point);
    for (int j = 0; j < sys.state_count(); ++j)
      acc += sys.A.at(i, j).eval(point) * velocity[j];
    r[i] = acc;
  }
  return r;
}

namespace {

// Residual of one interior sample given centered-difference derivatives.
struct SampleData {
  std::vector<double> state;      // chart coordinates
  std::vector<double> state_dot;  // centered difference of every column
  double time = 0.0;
};

std::vector<double> kind_residual(const LinSingSystem& sys, const SampleData& s) {
  if (sys.autonomous) return residual(sys, s.state, s.state_dot);
  // chart [t, q...]: velocities of the q-part only
  std::vector<double> qdot(s.state_dot.begin() + 1, s.state_dot.end());
  return residual(sys, s.state, qdot);
}

std::vector<double> kind_residual(const SecondOrderSystem& sys,
                                  const SampleData& s) {
  const int n = sys.dof();
  std::vector<double> r;
  // A(t,q,v) v' + c = 0 plus the prolongation q' = v
  for (int i = 0; i < sys.A.rows; ++i) {
    double acc = sys.c[i].eval(s.state);
    for (int j = 0; j < n; ++j)
      acc += sys.A.at(i, j).eval(s.state) * s.state_dot[1 + n + j];
    r.push_back(acc);
  }
  for (int j = 0; j < n; ++j)
    r.push_back(s.state_dot[1 + j] - s.state[1 + n + j]);
  return r;
}

std::vector<double> kind_residual(const ImplicitResiduals& sys,
                                  const SampleData& s) {
  std::vector<double> full = s.state;
  for (std::size_t j = 1; j < s.state.size(); ++j) full.push_back(s.state_dot[j]);
  std::vector<double> r;
  for (const auto& f : sys.F) r.push_back(f.eval(full));
  return r;
}

}  // namespace

CheckReport check_solution_samples(const SystemDoc& doc,
                                   const std::vector<double>& times,
                                   const std::vector<std::vector<double>>& states,
                                   double tol) {
  const std::size_t n = times.size();
  if (states.size() != n)
    fail(Err::Dimension, "times and states must have equal lengths");
  if (n < 3) fail(Err::TooFewSamples, "need at least 3 samples");
  const std::size_t dim = system_chart(doc).size();
  for (const auto& s : states)
    if (s.size() != dim)
      fail(Err::Dimension, "state row does not match the system chart");
  for (std::size_t i = 1; i < n; ++i)
    if (!(times[i] > times[i - 1]))
      fail(Err::InvalidArgument, "times must be strictly increasing");

  // Lagrangian and Skinner-Rusk residuals need finite differences of derived
  // quantities (the v-gradient of L), so they are handled inline.
  CheckReport rep;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    SampleData s;
    s.state = states[i];
    s.time = times[i];
    const double h = times[i + 1] - times[i - 1];
    s.state_dot.resize(dim);
    for (std::size_t k = 0; k < dim; ++k)
      s.state_dot[k] = (states[i + 1][k] - states[i - 1][k]) / h;

    std::vector<double> r;
    if (const auto* p = std::get_if<LinSingSystem>(&doc)) {
      r = kind_residual(*p, s);
    } else if (const auto* p2 = std::get_if<SecondOrderSystem>(&doc)) {
      r = kind_residual(*p2, s);
    } else if (const auto* p3 = std::get_if<ImplicitResiduals>(&doc)) {
      r = kind_residual(*p3, s);
    } else if (const auto* lg = std::get_if<LagrangianSpec>(&doc)) {
      const int nd = lg->dof();
      // d/dt (dL/dv) - dL/dq, with the time derivative taken by the same
      // centered difference as everything else.
      auto phat = [&](const std::vector<double>& x) {
        auto [val, g] = eval_grad(lg->L, x);
        (void)val;
        return std::vector<double>(g.begin() + 1 + nd, g.end());
      };
      auto pm = phat(states[i - 1]);
      auto pp = phat(states[i + 1]);
      auto [val, g] = eval_grad(lg->L, s.state);
      (void)val;
      for (int j = 0; j < nd; ++j)
        r.push_back((pp[j] - pm[j]) / h - g[1 + j]);
      for (int j = 0; j < nd; ++j)
        r.push_back(s.state_dot[1 + j] - s.state[1 + nd + j]);
    } else if (const auto* sr = std::get_if<SkinnerRuskSpec>(&doc)) {
      const int nd = sr->dof();
      auto [val, g] = eval_grad(sr->L, s.state);
      (void)val;
      // chart [t, q(nd), p_0, p(nd), v(nd)]
      const int p0 = 1 + nd;
      const int vq = 1 + nd + 1 + nd;
      for (int j = 0; j < nd; ++j) {
        r.push_back(s.state_dot[1 + j] - s.state[vq + j]);       // q' = v
        r.push_back(s.state_dot[p0 + 1 + j] - g[1 + j]);          // p' = dL/dq
        r.push_back(s.state[p0 + 1 + j] - g[vq + j]);             // p = dL/dv
      }
    }

    double m = 0.0;
    for (double x : r) m = std::max(m, std::abs(x));
    rep.sample_residuals.push_back(m);
    rep.max_residual = std::max(rep.max_residual, m);
  }
  rep.samples_checked = int(rep.sample_residuals.size());
  rep.pass = rep.max_residual <= tol;
  return rep;
}

}  // namespace sflow
