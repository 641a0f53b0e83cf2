#pragma once

// Expansion of a validated model over a scenario tree into a deterministic
// equivalent LP, in two layouts:
//
//  * node form: one column per (variable, node); scenarios sharing a history
//    share the column, so non-anticipativity holds by construction.
//  * scenario form: every root-to-leaf path owns a full copy of each
//    stochastic variable, and explicit equality rows tie the copies together
//    wherever two paths pass through the same node.
//
// Deterministic variables get one column per stage in both layouts. A
// constraint or objective annotated deterministic whose symbols are all
// deterministic is instanced once per stage; everything else once per node.

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "msm/ast.hpp"
#include "msm/errors.hpp"
#include "msm/lp.hpp"
#include "msm/meta_model.hpp"
#include "msm/scenario_tree.hpp"

namespace msm {

inline constexpr NodeId kNoNode = -1;

enum class ExpansionForm { Node, Scenario };

struct ColumnKey {
  std::string var;
  NodeId node = kNoNode;  // kNoNode for a stage-level (deterministic) column
  int stage = 0;
  NodeId scenario = kNoNode;  // leaf id in scenario form

  auto operator<=>(const ColumnKey&) const = default;
};

struct ColumnMap {
  std::map<ColumnKey, int> forward;
  std::vector<ColumnKey> reverse;

  int add(ColumnKey key) {
    const int col = static_cast<int>(reverse.size());
    forward.emplace(key, col);
    reverse.push_back(std::move(key));
    return col;
  }
  std::optional<int> find(const ColumnKey& key) const {
    auto it = forward.find(key);
    if (it == forward.end()) return std::nullopt;
    return it->second;
  }
  std::size_t size() const noexcept { return reverse.size(); }
};

struct RowLabel {
  std::string constraint;  // empty for a coupling row
  NodeId node = kNoNode;
  int stage = 0;
  NodeId scenario = kNoNode;
  std::string coupled_var;  // set only on coupling rows

  bool operator==(const RowLabel&) const = default;
};

struct ExpandedModel {
  ExpansionForm form = ExpansionForm::Node;
  LpProblem lp;
  ColumnMap columns;
  std::vector<RowLabel> row_labels;
  int coupling_rows = 0;
};

namespace detail {

struct Instance {
  NodeId node = kNoNode;  // kNoNode for a stage-level instance
  int stage = 0;
  NodeId scenario = kNoNode;
};

inline std::string where(const Instance& in) {
  if (in.node == kNoNode) return "stage " + std::to_string(in.stage);
  return "node " + std::to_string(in.node);
}

class Expander {
 public:
  Expander(const ValidatedModel& vm, const ScenarioTree& tree, ExpansionForm form)
      : vm_(vm), m_(vm.model()), tree_(tree), form_(form) {
    if (vm.horizon() != tree.horizon())
      throw ExpansionError("model horizon " + std::to_string(vm.horizon()) +
                           " does not match tree horizon " + std::to_string(tree.horizon()));
    if (form == ExpansionForm::Scenario) index_scenarios();
  }

  ExpandedModel run() {
    out_.form = form_;
    build_columns();
    for (const auto& c : m_.constraints) add_constraint(c);
    if (m_.objective) add_objective(*m_.objective);
    if (form_ == ExpansionForm::Scenario) add_coupling_rows();
    return std::move(out_);
  }

  const ColumnMap& columns_only() {
    build_columns();
    return out_.columns;
  }

  int column_for(const std::string& var, const Instance& in, int depth) const {
    const VarDecl* v = m_.find_var(var);
    if (!v) throw RecourseError("'" + var + "' is not a variable");
    if (depth < 0 || depth > in.stage)
      throw RecourseError("recourse " + var + "(-" + std::to_string(depth) + ") at " + where(in) +
                          " reaches above the root");
    const int target_stage = in.stage - depth;
    const Annotation& ann = vm_.annotation_of(var);
    if (!ann.stages.contains(target_stage))
      throw RecourseError("variable '" + var + "' is not defined at stage " +
                          std::to_string(target_stage) + " (referenced from " + where(in) + ")");
    ColumnKey key{var, kNoNode, target_stage, kNoNode};
    if (ann.kind == StageKind::Stochastic) {
      if (in.node == kNoNode)
        throw RecourseError("stochastic variable '" + var + "' used in a stage-level object");
      key.node = ancestor(tree_, in.node, depth);
      if (form_ == ExpansionForm::Scenario) key.scenario = in.scenario;
    }
    auto col = out_.columns.find(key);
    if (!col) throw RecourseError("no column for '" + var + "' at " + where(in));
    return *col;
  }

 private:
  const ValidatedModel& vm_;
  const MetaModel& m_;
  const ScenarioTree& tree_;
  ExpansionForm form_;
  ExpandedModel out_;
  std::vector<std::vector<NodeId>> scenarios_through_;  // node -> leaves below it

  void index_scenarios() {
    scenarios_through_.assign(tree_.size(), {});
    for (NodeId leaf : tree_.leaves())
      for (NodeId n : tree_.path(leaf)) scenarios_through_[n].push_back(leaf);
    for (auto& v : scenarios_through_) std::sort(v.begin(), v.end());
  }

  std::vector<NodeId> nodes_in(const StageSet& stages) const {
    std::vector<NodeId> ids;
    for (const auto& nd : tree_.nodes())
      if (stages.contains(nd.stage)) ids.push_back(nd.id);
    return ids;
  }

  std::vector<NodeId> sorted_leaves() const {
    std::vector<NodeId> leaves = tree_.leaves();
    std::sort(leaves.begin(), leaves.end());
    return leaves;
  }

  void build_columns() {
    for (const auto& v : m_.vars) {
      const Annotation& ann = vm_.annotation_of(v.name);
      auto add = [&](ColumnKey key) {
        out_.columns.add(std::move(key));
        out_.lp.add_column(0.0, v.lb, v.ub);
      };
      if (ann.kind == StageKind::Deterministic) {
        for (int s : ann.stages) add({v.name, kNoNode, s, kNoNode});
      } else if (form_ == ExpansionForm::Node) {
        for (NodeId n : nodes_in(ann.stages)) add({v.name, n, tree_.node(n).stage, kNoNode});
      } else {
        for (NodeId leaf : sorted_leaves())
          for (int s : ann.stages) add({v.name, tree_.path(leaf)[s], s, leaf});
      }
    }
  }

  bool stage_level(const std::string& owner, std::initializer_list<const LinExpr*> exprs) const {
    if (vm_.annotation_of(owner).kind != StageKind::Deterministic) return false;
    for (const LinExpr* e : exprs)
      for (const auto& t : e->terms)
        for (const auto& f : t.factors) {
          const Annotation* a = vm_.annotation(f.name);
          if (!a || a->kind != StageKind::Deterministic) return false;
        }
    return true;
  }

  std::vector<Instance> instances(const std::string& owner, bool per_stage) const {
    const StageSet& stages = vm_.annotation_of(owner).stages;
    std::vector<Instance> out;
    if (per_stage) {
      for (int s : stages) out.push_back({kNoNode, s, kNoNode});
    } else if (form_ == ExpansionForm::Node) {
      for (NodeId n : nodes_in(stages)) out.push_back({n, tree_.node(n).stage, kNoNode});
    } else {
      for (NodeId leaf : sorted_leaves())
        for (int s : stages) out.push_back({tree_.path(leaf)[s], s, leaf});
    }
    return out;
  }

  double param_value(const std::string& name, const Instance& in) const {
    const Annotation* ann = vm_.annotation(name);
    std::optional<double> v;
    if (ann && ann->kind == StageKind::Deterministic) {
      v = tree_.stage_param(name, in.stage);
    } else if (in.node != kNoNode) {
      v = tree_.node_param(in.node, name);
      if (!v && !ann) v = tree_.stage_param(name, in.stage);
    } else if (!ann) {
      v = tree_.stage_param(name, in.stage);
    }
    if (!v) throw MissingParam(name, in.node, where(in));
    return *v;
  }

  // Adds sign * e evaluated at `in` into coeffs; returns the constant part.
  double accumulate(const LinExpr& e, const Instance& in, double sign,
                    std::map<int, double>& coeffs) const {
    double constant = sign * e.constant;
    for (const auto& t : e.terms) {
      double c = sign * t.coeff;
      std::optional<int> col;
      for (const auto& f : t.factors) {
        if (m_.find_var(f.name))
          col = column_for(f.name, in, f.recourse_depth);
        else
          c *= param_value(f.name, in);
      }
      if (col)
        coeffs[*col] += c;
      else
        constant += c;
    }
    return constant;
  }

  static void drop_zeros(std::map<int, double>& coeffs) {
    std::erase_if(coeffs, [](const auto& kv) { return kv.second == 0.0; });
  }

  void add_constraint(const Constraint& c) {
    const bool per_stage = stage_level(c.name, {&c.lhs, &c.rhs});
    for (const auto& in : instances(c.name, per_stage)) {
      std::map<int, double> coeffs;
      const double lhs_const = accumulate(c.lhs, in, 1.0, coeffs);
      const double rhs_const = accumulate(c.rhs, in, -1.0, coeffs);
      drop_zeros(coeffs);
      const double rhs = -(lhs_const + rhs_const);
      out_.lp.add_row(std::move(coeffs), c.relop, rhs == 0.0 ? 0.0 : rhs);
      out_.row_labels.push_back({c.name, in.node, in.stage, in.scenario, {}});
    }
  }

  void add_objective(const Objective& o) {
    const bool per_stage = stage_level(o.name, {&o.expr});
    for (const auto& in : instances(o.name, per_stage)) {
      double weight = 1.0;
      if (in.node != kNoNode) {
        if (o.expr.expect)
          weight = node_probability(tree_, in.node);
        else if (tree_.stage_nodes(in.stage).size() > 1)
          throw ExpansionError("objective '" + o.name + "' varies across the nodes of stage " +
                               std::to_string(in.stage) + "; wrap it in E()");
        if (in.scenario != kNoNode)
          weight *= node_probability(tree_, in.scenario) / node_probability(tree_, in.node);
      }
      std::map<int, double> coeffs;
      const double constant = accumulate(o.expr, in, 1.0, coeffs);
      for (const auto& [col, c] : coeffs) out_.lp.objective[col] += weight * c;
      out_.lp.objective_constant += weight * constant;
    }
  }

  void add_coupling_rows() {
    for (const auto& v : m_.vars) {
      const Annotation& ann = vm_.annotation_of(v.name);
      if (ann.kind != StageKind::Stochastic) continue;
      for (NodeId n : nodes_in(ann.stages)) {
        const auto& through = scenarios_through_[n];
        const int stage = tree_.node(n).stage;
        const int first = *out_.columns.find({v.name, n, stage, through.front()});
        for (std::size_t k = 1; k < through.size(); ++k) {
          const int other = *out_.columns.find({v.name, n, stage, through[k]});
          out_.lp.add_row({{first, 1.0}, {other, -1.0}}, RelOp::Eq, 0.0);
          out_.row_labels.push_back({{}, n, stage, through[k], v.name});
          ++out_.coupling_rows;
        }
      }
    }
  }
};

}  // namespace detail

inline ExpandedModel expand_node_form(const ValidatedModel& vm, const ScenarioTree& tree) {
  return detail::Expander(vm, tree, ExpansionForm::Node).run();
}

inline ExpandedModel expand_scenario_form(const ValidatedModel& vm, const ScenarioTree& tree) {
  return detail::Expander(vm, tree, ExpansionForm::Scenario).run();
}

inline ExpandedModel expand(const ValidatedModel& vm, const ScenarioTree& tree, ExpansionForm form) {
  return detail::Expander(vm, tree, form).run();
}

// Node-form column of `var` at ancestor(node, depth).
inline int resolve_recourse_ref(const ValidatedModel& vm, const ScenarioTree& tree,
                                const std::string& var, NodeId node, int depth) {
  detail::Expander ex(vm, tree, ExpansionForm::Node);
  ex.columns_only();
  const int stage = tree.node(node).stage;
  return ex.column_for(var, detail::Instance{node, stage, kNoNode}, depth);
}

inline std::string column_name(const ColumnKey& k) {
  std::string s = k.var;
  s += k.node == kNoNode ? "__s" + std::to_string(k.stage) : "__n" + std::to_string(k.node);
  if (k.scenario != kNoNode) s += "__w" + std::to_string(k.scenario);
  return s;
}

inline std::string row_name(const RowLabel& r) {
  std::string s = r.coupled_var.empty() ? r.constraint : r.coupled_var + "__na";
  s += r.node == kNoNode ? "__s" + std::to_string(r.stage) : "__n" + std::to_string(r.node);
  if (r.scenario != kNoNode) s += "__w" + std::to_string(r.scenario);
  return s;
}

inline std::string emit_lp_file(const ExpandedModel& em) {
  std::vector<std::string> cols, rows;
  for (const auto& k : em.columns.reverse) cols.push_back(column_name(k));
  for (const auto& r : em.row_labels) rows.push_back(row_name(r));
  return emit_lp_file(em.lp, std::move(cols), std::move(rows));
}

}  // namespace msm
