#pragma once

// Scenario trees: node storage, structural validation, ancestor and
// probability queries, and the JSON tree file reader.
//
// Tree file layout:
//   {"T": 1,
//    "stage_params": [{"name": "a", "stage": 1, "value": 1.0}],
//    "nodes": [{"id": 0, "stage": 0, "parent": null, "prob": 1.0, "params": {"V": 5.0}}, ...]}

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "msm/errors.hpp"

namespace msm {

inline constexpr double kProbTol = 1e-9;

using NodeId = int;

struct TreeNode {
  NodeId id = 0;
  int stage = 0;
  std::optional<NodeId> parent;
  double prob = 1.0;  // conditional on the parent
  std::map<std::string, double> params;

  bool operator==(const TreeNode&) const = default;
};

using StageParamKey = std::pair<std::string, int>;  // (name, stage)

class ScenarioTree;
std::vector<TreeIssue> validate_tree(const ScenarioTree& t);

class ScenarioTree {
 public:
  // Stores the raw node list without checking it; see validated().
  ScenarioTree(int horizon, std::vector<TreeNode> nodes,
               std::map<StageParamKey, double> stage_params = {})
      : horizon_(horizon), nodes_(std::move(nodes)), stage_params_(std::move(stage_params)) {}

  // Validates and indexes; throws TreeError listing every violation.
  static ScenarioTree validated(int horizon, std::vector<TreeNode> nodes,
                                std::map<StageParamKey, double> stage_params = {}) {
    ScenarioTree t(horizon, std::move(nodes), std::move(stage_params));
    if (auto issues = validate_tree(t); !issues.empty()) throw TreeError(std::move(issues));
    t.build_index();
    return t;
  }

  int horizon() const noexcept { return horizon_; }
  std::size_t size() const noexcept { return nodes_.size(); }
  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
  const TreeNode& node(NodeId id) const { return nodes_.at(static_cast<std::size_t>(id)); }
  const std::map<StageParamKey, double>& stage_params() const noexcept { return stage_params_; }
  bool indexed() const noexcept { return indexed_; }

  std::optional<double> stage_param(const std::string& name, int stage) const {
    auto it = stage_params_.find({name, stage});
    if (it == stage_params_.end()) return std::nullopt;
    return it->second;
  }

  std::optional<double> node_param(NodeId id, const std::string& name) const {
    const auto& p = node(id).params;
    auto it = p.find(name);
    if (it == p.end()) return std::nullopt;
    return it->second;
  }

  const std::vector<NodeId>& children(NodeId id) const { return index().children.at(id); }
  const std::vector<NodeId>& leaves() const { return index().leaves; }
  // Root-to-node path; path(n)[s] is the ancestor of n at stage s.
  const std::vector<NodeId>& path(NodeId id) const { return index().paths.at(id); }
  double probability(NodeId id) const { return index().probability.at(id); }
  const std::vector<NodeId>& stage_nodes(int stage) const { return index().by_stage.at(stage); }
  NodeId root() const { return index().root; }

  bool operator==(const ScenarioTree& o) const {
    return horizon_ == o.horizon_ && nodes_ == o.nodes_ && stage_params_ == o.stage_params_;
  }

 private:
  struct Index {
    NodeId root = 0;
    std::vector<std::vector<NodeId>> children;
    std::vector<std::vector<NodeId>> paths;
    std::vector<double> probability;
    std::vector<std::vector<NodeId>> by_stage;
    std::vector<NodeId> leaves;
  };

  const Index& index() const {
    if (!indexed_) throw std::logic_error("scenario tree used before validation");
    return idx_;
  }

  // Requires a tree that passed validate_tree; parents precede children in
  // stage order, so paths and probabilities fill in one sweep per stage.
  void build_index() {
    const std::size_t n = nodes_.size();
    idx_.children.assign(n, {});
    idx_.paths.assign(n, {});
    idx_.probability.assign(n, 0.0);
    idx_.by_stage.assign(static_cast<std::size_t>(horizon_) + 1, {});
    for (const auto& nd : nodes_) {
      idx_.by_stage[nd.stage].push_back(nd.id);
      if (nd.parent)
        idx_.children[*nd.parent].push_back(nd.id);
      else
        idx_.root = nd.id;
    }
    for (const auto& ids : idx_.by_stage)
      for (NodeId id : ids) {
        const auto& nd = nodes_[id];
        if (!nd.parent) {
          idx_.paths[id] = {id};
          idx_.probability[id] = 1.0;
        } else {
          idx_.paths[id] = idx_.paths[*nd.parent];
          idx_.paths[id].push_back(id);
          idx_.probability[id] = idx_.probability[*nd.parent] * nd.prob;
        }
      }
    idx_.leaves = idx_.by_stage[horizon_];
    indexed_ = true;
  }

  int horizon_ = 0;
  std::vector<TreeNode> nodes_;
  std::map<StageParamKey, double> stage_params_;
  bool indexed_ = false;
  Index idx_;
};

namespace detail {
inline std::string fmt_real(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}
}  // namespace detail

// Returns one finding per violated invariant; empty means the tree is usable.
inline std::vector<TreeIssue> validate_tree(const ScenarioTree& t) {
  std::vector<TreeIssue> issues;
  const auto& nodes = t.nodes();
  const int n = static_cast<int>(nodes.size());
  const int horizon = t.horizon();

  if (horizon < 0) issues.push_back({-1, "negative horizon " + std::to_string(horizon)});
  if (n == 0) {
    issues.push_back({-1, "tree has no nodes"});
    return issues;
  }
  for (int i = 0; i < n; ++i)
    if (nodes[i].id != i) {
      issues.push_back({nodes[i].id, "node ids must be dense 0.." + std::to_string(n - 1) +
                                         " in order (position " + std::to_string(i) + ")"});
      return issues;
    }

  std::vector<NodeId> roots;
  std::vector<std::vector<NodeId>> children(n);
  for (const auto& nd : nodes) {
    if (!(nd.prob > 0.0 && nd.prob <= 1.0 + kProbTol))
      issues.push_back({nd.id, "conditional probability " + detail::fmt_real(nd.prob) +
                                   " outside (0, 1]"});
    if (nd.stage > horizon)
      issues.push_back({nd.id, "stage " + std::to_string(nd.stage) + " beyond horizon " +
                                   std::to_string(horizon)});
    if (!nd.parent) {
      roots.push_back(nd.id);
      if (nd.stage != 0) issues.push_back({nd.id, "root must be at stage 0"});
      if (std::fabs(nd.prob - 1.0) > kProbTol)
        issues.push_back({nd.id, "root probability must be 1"});
      continue;
    }
    const NodeId p = *nd.parent;
    if (p < 0 || p >= n || p == nd.id) {
      issues.push_back({nd.id, "invalid parent " + std::to_string(p)});
      continue;
    }
    children[p].push_back(nd.id);
    if (nd.stage != nodes[p].stage + 1)
      issues.push_back({nd.id, "stage skip: stage " + std::to_string(nd.stage) + " under parent at stage " +
                                   std::to_string(nodes[p].stage)});
  }
  if (roots.size() != 1)
    issues.push_back({-1, "expected exactly one root, found " + std::to_string(roots.size())});

  for (const auto& nd : nodes) {
    const auto& kids = children[nd.id];
    if (kids.empty()) {
      if (nd.stage < horizon) issues.push_back({nd.id, "missing children before horizon"});
      continue;
    }
    if (nd.stage >= horizon) issues.push_back({nd.id, "node at horizon has children"});
    double sum = 0.0;
    for (NodeId c : kids) sum += nodes[c].prob;
    if (std::fabs(sum - 1.0) > kProbTol)
      issues.push_back({nd.id, "children of node " + std::to_string(nd.id) + " sum to " +
                                   detail::fmt_real(sum)});
  }

  if (roots.size() == 1) {
    std::vector<bool> seen(n, false);
    std::vector<NodeId> stack{roots.front()};
    seen[roots.front()] = true;
    while (!stack.empty()) {
      NodeId id = stack.back();
      stack.pop_back();
      for (NodeId c : children[id])
        if (!seen[c]) {
          seen[c] = true;
          stack.push_back(c);
        }
    }
    for (int i = 0; i < n; ++i)
      if (!seen[i]) issues.push_back({i, "unreachable from root"});
  }

  for (const auto& [key, value] : t.stage_params())
    if (key.second < 0 || key.second > horizon)
      issues.push_back({-1, "stage parameter '" + key.first + "' at stage " +
                                std::to_string(key.second) + " outside [0, " +
                                std::to_string(horizon) + "]"});
  return issues;
}

inline NodeId ancestor(const ScenarioTree& t, NodeId node, int depth) {
  const int stage = t.node(node).stage;
  if (depth < 0 || depth > stage)
    throw DepthError("depth " + std::to_string(depth) + " from node " + std::to_string(node) +
                     " at stage " + std::to_string(stage));
  return t.path(node)[stage - depth];
}

inline double node_probability(const ScenarioTree& t, NodeId node) { return t.probability(node); }

inline const std::vector<NodeId>& nodes_at_stage(const ScenarioTree& t, int stage) {
  if (stage < 0 || stage > t.horizon())
    throw StageError("stage " + std::to_string(stage) + " outside [0, " +
                     std::to_string(t.horizon()) + "]");
  return t.stage_nodes(stage);
}

inline ScenarioTree load_tree(std::string_view src) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(src);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("tree file is not valid JSON: ") + e.what());
  }

  auto need = [](const json& obj, const char* key, const std::string& where) -> const json& {
    if (!obj.is_object() || !obj.contains(key))
      throw FormatError(where + ": missing field '" + key + "'");
    return obj.at(key);
  };
  auto integer = [](const json& v, const std::string& what) {
    if (!v.is_number_integer()) throw FormatError(what + " must be an integer");
    return v.get<int>();
  };
  auto real = [](const json& v, const std::string& what) {
    if (!v.is_number()) throw FormatError(what + " must be a number");
    double d = v.get<double>();
    if (!std::isfinite(d)) throw FormatError(what + " must be finite");
    return d;
  };

  if (!doc.is_object()) throw FormatError("tree file must hold a JSON object");
  const int horizon = integer(need(doc, "T", "tree file"), "T");

  std::map<StageParamKey, double> stage_params;
  if (doc.contains("stage_params")) {
    const json& sp = doc.at("stage_params");
    if (!sp.is_array()) throw FormatError("stage_params must be a list");
    for (std::size_t i = 0; i < sp.size(); ++i) {
      const std::string where = "stage_params[" + std::to_string(i) + "]";
      const json& name = need(sp[i], "name", where);
      if (!name.is_string()) throw FormatError(where + ".name must be a string");
      const int stage = integer(need(sp[i], "stage", where), where + ".stage");
      const double value = real(need(sp[i], "value", where), where + ".value");
      if (!stage_params.emplace(StageParamKey{name.get<std::string>(), stage}, value).second)
        throw FormatError(where + ": duplicate entry for '" + name.get<std::string>() + "'");
    }
  }

  const json& jnodes = need(doc, "nodes", "tree file");
  if (!jnodes.is_array()) throw FormatError("nodes must be a list");
  std::vector<TreeNode> nodes;
  nodes.reserve(jnodes.size());
  for (std::size_t i = 0; i < jnodes.size(); ++i) {
    const std::string where = "nodes[" + std::to_string(i) + "]";
    const json& jn = jnodes[i];
    TreeNode nd;
    nd.id = integer(need(jn, "id", where), where + ".id");
    nd.stage = integer(need(jn, "stage", where), where + ".stage");
    const json& parent = need(jn, "parent", where);
    if (!parent.is_null()) nd.parent = integer(parent, where + ".parent");
    nd.prob = real(need(jn, "prob", where), where + ".prob");
    if (jn.contains("params")) {
      const json& ps = jn.at("params");
      if (!ps.is_object()) throw FormatError(where + ".params must be an object");
      for (const auto& [k, v] : ps.items()) nd.params[k] = real(v, where + ".params." + k);
    }
    nodes.push_back(std::move(nd));
  }
  std::sort(nodes.begin(), nodes.end(),
            [](const TreeNode& a, const TreeNode& b) { return a.id < b.id; });
  return ScenarioTree::validated(horizon, std::move(nodes), std::move(stage_params));
}

inline std::string dump_tree(const ScenarioTree& t) {
  using nlohmann::json;
  json doc;
  doc["T"] = t.horizon();
  doc["stage_params"] = json::array();
  for (const auto& [key, value] : t.stage_params())
    doc["stage_params"].push_back({{"name", key.first}, {"stage", key.second}, {"value", value}});
  doc["nodes"] = json::array();
  for (const auto& nd : t.nodes()) {
    json jn = {{"id", nd.id}, {"stage", nd.stage}, {"prob", nd.prob}};
    jn["parent"] = nd.parent ? json(*nd.parent) : json(nullptr);
    jn["params"] = json::object();
    for (const auto& [k, v] : nd.params) jn["params"][k] = v;
    doc["nodes"].push_back(std::move(jn));
  }
  return doc.dump();
}

}  // namespace msm
