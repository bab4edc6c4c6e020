#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "expr.hpp"
#include "linalg.hpp"

namespace sflow {

// Shared chart/bookkeeping fields of every system kind.
struct SystemCommon {
  std::string time_variable = "t";
  std::map<std::string, double> parameters;
  std::vector<std::pair<std::string, Expr>> time_functions;  // bodies over [t]
  std::vector<std::vector<double>> seeds;  // points in the analysis chart
  double tolerance = -1.0;                 // < 0 means unset
};

// Linearly singular system A(.)x' + c(.) = 0.  Time-dependent systems read
// A(t,q)q' + c(t,q) = 0 with evaluation chart [t, states...]; autonomous ones
// read A(x)x' + c(x) = 0 over the states (exposed as A x' = b with b = -c).
struct LinSingSystem {
  SystemCommon common;
  bool autonomous = false;
  std::vector<std::string> states;
  Mat<Expr> A;
  std::vector<Expr> c;
  int time_state = -1;  // autonomous systems: index of the time-like state

  int state_count() const { return int(states.size()); }
  int rows() const { return A.rows; }
  // Chart the coefficient expressions are evaluated over; for time-dependent
  // systems this is also the chart of the associated autonomous system.
  std::vector<std::string> chart_names() const;
  int chart_dim() const { return int(chart_names().size()); }
};

// A(t,q,v) q'' + c(t,q,v) = 0 over chart [t, q..., v...].
struct SecondOrderSystem {
  SystemCommon common;
  std::vector<std::string> q_names;
  std::vector<std::string> v_names;
  Mat<Expr> A;
  std::vector<Expr> c;

  int dof() const { return int(q_names.size()); }
  std::vector<std::string> chart_names() const;
};

struct LagrangianSpec {
  SystemCommon common;
  std::vector<std::string> q_names;
  std::vector<std::string> v_names;
  Expr L;  // over [t, q..., v...]

  int dof() const { return int(q_names.size()); }
  std::vector<std::string> chart_names() const;
};

struct SkinnerRuskSpec {
  SystemCommon common;
  std::vector<std::string> q_names;
  std::vector<std::string> p_names;  // p_0 then one per q
  std::vector<std::string> v_names;
  Expr L;  // over the full mixed chart [t, q..., p_0, p..., v...]

  int dof() const { return int(q_names.size()); }
  std::vector<std::string> chart_names() const;
};

// Residual-only implicit system F(t, q, q') = 0.
struct ImplicitResiduals {
  SystemCommon common;
  std::vector<std::string> states;
  std::vector<std::string> v_names;
  std::vector<Expr> F;  // over [t, states..., v...]

  std::vector<std::string> chart_names() const;  // [t, states...]
};

using SystemDoc = std::variant<LinSingSystem, SecondOrderSystem, LagrangianSpec,
                               SkinnerRuskSpec, ImplicitResiduals>;

// Loads a JSON spec document; throws Err::Schema / parse errors with field
// context.  `load_system_file` adds Err::Io for unreadable paths.
SystemDoc load_system(const std::string& json_text);
SystemDoc load_system_file(const std::string& path);

std::string serialize_system(const SystemDoc& doc);

const SystemCommon& system_common(const SystemDoc& doc);
std::string system_kind(const SystemDoc& doc);
// Chart of the analysis/trajectory space for this document.
std::vector<std::string> system_chart(const SystemDoc& doc);

// A(point) * velocity + c(point); point lives in chart_names() coordinates.
std::vector<double> residual(const LinSingSystem& sys,
                             std::span<const double> point,
                             std::span<const double> velocity);

struct CheckReport {
  std::vector<double> sample_residuals;  // one per interior sample
  double max_residual = 0.0;
  bool pass = false;
  int samples_checked = 0;
};

// Residual check of a sampled trajectory against any system kind, using
// centered finite-difference velocities.  States are rows in system_chart
// order.  Throws Err::TooFewSamples below 3 samples.
CheckReport check_solution_samples(const SystemDoc& doc,
                                   const std::vector<double>& times,
                                   const std::vector<std::vector<double>>& states,
                                   double tol);

}  // namespace sflow
