#pragma once

#include <charconv>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "msm/det_equiv.hpp"
#include "msm/errors.hpp"
#include "msm/lp.hpp"

namespace msm {

struct PolicyEntry {
  std::string var;
  NodeId node = kNoNode;  // kNoNode for a stage-level column
  int stage = 0;
  double value = 0.0;
  NodeId scenario = kNoNode;

  bool operator==(const PolicyEntry&) const = default;
};

// Outcome of a solve run: status is OPTIMAL, INFEASIBLE, UNBOUNDED or ERROR.
struct RunReport {
  std::string status = "ERROR";
  std::optional<double> objective_value;
  std::vector<PolicyEntry> policy;  // one entry per LP column when OPTIMAL
  std::vector<std::string> diagnostics;

  bool operator==(const RunReport&) const = default;
};

inline RunReport make_report(const ExpandedModel& em, const LpSolution& sol) {
  RunReport r;
  r.status = to_string(sol.status);
  if (sol.status == LpStatus::Optimal) {
    r.objective_value = sol.objective_value;
    for (std::size_t j = 0; j < em.columns.reverse.size(); ++j) {
      const auto& k = em.columns.reverse[j];
      r.policy.push_back({k.var, k.node, k.stage, sol.x[j], k.scenario});
    }
  }
  std::ostringstream os;
  os << (em.form == ExpansionForm::Node ? "node" : "scenario") << " form: " << em.lp.n_cols
     << " columns, " << em.lp.n_rows() << " rows";
  if (em.form == ExpansionForm::Scenario) os << " (" << em.coupling_rows << " coupling)";
  os << ", " << sol.pivots << " pivots";
  r.diagnostics.push_back(os.str());
  if (sol.status == LpStatus::Optimal) {
    std::ostringstream res;
    res << "max residual " << sol.max_residual;
    r.diagnostics.push_back(res.str());
  }
  return r;
}

inline nlohmann::json to_json(const RunReport& r) {
  using nlohmann::json;
  json j;
  j["status"] = r.status;
  j["objective_value"] = r.objective_value ? json(*r.objective_value) : json(nullptr);
  j["policy"] = json::array();
  for (const auto& p : r.policy) {
    json e = {{"var", p.var}, {"stage", p.stage}, {"value", p.value}};
    e["node"] = p.node == kNoNode ? json(nullptr) : json(p.node);
    if (p.scenario != kNoNode) e["scenario"] = p.scenario;
    j["policy"].push_back(std::move(e));
  }
  j["diagnostics"] = r.diagnostics;
  return j;
}

inline RunReport report_from_json(const std::string& text) {
  using nlohmann::json;
  RunReport r;
  try {
    const json j = json::parse(text);
    r.status = j.at("status").get<std::string>();
    if (!j.at("objective_value").is_null()) r.objective_value = j.at("objective_value").get<double>();
    for (const auto& e : j.at("policy")) {
      PolicyEntry p;
      p.var = e.at("var").get<std::string>();
      p.node = e.at("node").is_null() ? kNoNode : e.at("node").get<int>();
      p.stage = e.at("stage").get<int>();
      p.value = e.at("value").get<double>();
      if (e.contains("scenario")) p.scenario = e.at("scenario").get<int>();
      r.policy.push_back(std::move(p));
    }
    r.diagnostics = j.at("diagnostics").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed report: ") + e.what());
  }
  return r;
}

inline std::string shortest(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc() ? std::string(buf, ptr) : std::to_string(v);
}

inline std::string to_text(const RunReport& r) {
  std::ostringstream os;
  os << "status: " << r.status << "\n";
  if (r.objective_value) os << "objective: " << shortest(*r.objective_value) << "\n";
  if (!r.policy.empty()) {
    os << "policy:\n";
    for (const auto& p : r.policy) {
      os << "  " << p.var;
      if (p.node == kNoNode)
        os << " @ stage " << p.stage;
      else
        os << " @ node " << p.node << " (stage " << p.stage << ")";
      if (p.scenario != kNoNode) os << " scenario " << p.scenario;
      os << " = " << shortest(p.value) << "\n";
    }
  }
  for (const auto& d : r.diagnostics) os << "# " << d << "\n";
  return os.str();
}

}  // namespace msm
