#pragma once

// Shared inputs for the unit and acceptance suites: the purchase model in
// both surface forms, small hand-checked trees, and seeded generators.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "msm/msm.hpp"

namespace msm::testing {

// Verbatim model text, including the misspelled constraint name and the
// trailing blank after the var statement.
inline const std::string kPurchaseModel =
    "deterministic a: T;\n"
    "stochastic x, s, objective_function: 0..T;\n"
    "stochastic non_anticitpativity: 1..T;\n"
    "stochastic root_stage: 0;\n"
    "stochastic terminal_stage: T;\n"
    "\n"
    "param a;\n"
    "var x >= 0, s >= 0; \n"
    "\n"
    "minimize objective_function: E(V * x);\n"
    "subject to non_anticitpativity: s - s(-1) = x;\n"
    "subject to root_stage: s = 0;\n"
    "subject to terminal_stage: s = a;\n";

// The builder call sequence for the same model. With corrected == false the
// names are kept as in the original builder listing: the objective is
// called "objective" and the balance annotation names "non_anticipativity",
// which does not match the declared constraint.
inline MetaModel purchase_model_via_builder(bool corrected) {
  const std::string objective = corrected ? "objective_function" : "objective";
  const std::string balance_annotation = corrected ? "non_anticitpativity" : "non_anticipativity";
  ModelBuilder m;
  m.parameter("a");
  m.variable("x", {.lb = 0});
  m.variable("s", {.lb = 0});

  m.minimize(objective, "E(V * x)");
  m.subject_to("non_anticitpativity", "s - s(-1) = x");
  m.subject_to("root_stage", "s = 0");
  m.subject_to("terminal_stage", "s = a");

  m.deterministic("T", {"a"});
  m.stochastic("0..T", {"x", "s", objective});
  m.stochastic("1..T", {balance_annotation});
  m.stochastic("0", {"root_stage"});
  m.stochastic("T", {"terminal_stage"});
  return m.build();
}

inline TreeNode node(NodeId id, int stage, std::optional<NodeId> parent, double prob, double v) {
  return TreeNode{id, stage, parent, prob, {{"V", v}}};
}

// T=1: root V=5, two leaves V=4 and V=8 with probability 1/2 each.
inline ScenarioTree three_node_tree(double amount = 1.0) {
  return ScenarioTree::validated(
      1, {node(0, 0, std::nullopt, 1.0, 5.0), node(1, 1, 0, 0.5, 4.0), node(2, 1, 0, 0.5, 8.0)},
      {{{"a", 1}, amount}});
}

// T=2: stage-1 nodes A (V=5) and B (V=7); A's children V=4/8, B's children V=2/6.
inline ScenarioTree seven_node_tree(double amount = 1.0) {
  return ScenarioTree::validated(2,
                                 {node(0, 0, std::nullopt, 1.0, 6.0), node(1, 1, 0, 0.5, 5.0),
                                  node(2, 1, 0, 0.5, 7.0), node(3, 2, 1, 0.5, 4.0),
                                  node(4, 2, 1, 0.5, 8.0), node(5, 2, 2, 0.5, 2.0),
                                  node(6, 2, 2, 0.5, 6.0)},
                                 {{{"a", 2}, amount}});
}

inline ScenarioTree chain_tree(int horizon, double amount = 1.0) {
  std::vector<TreeNode> nodes;
  for (int s = 0; s <= horizon; ++s)
    nodes.push_back(node(s, s, s == 0 ? std::nullopt : std::optional<NodeId>(s - 1), 1.0, 3.0 + s));
  return ScenarioTree::validated(horizon, std::move(nodes), {{{"a", horizon}, amount}});
}

struct RandomTreeOptions {
  int min_horizon = 1;
  int max_horizon = 4;
  int max_branching = 3;
  double v_lo = 1.0;
  double v_hi = 10.0;
};

// Random purchase tree: branching uniform in 1..max_branching per node,
// conditional probabilities from normalized uniform weights, V on every node,
// and amount a in {1, 2} at stage T.
inline ScenarioTree random_purchase_tree(std::mt19937_64& rng, RandomTreeOptions opt = {}) {
  std::uniform_int_distribution<int> horizon_dist(opt.min_horizon, opt.max_horizon);
  std::uniform_int_distribution<int> branch_dist(1, opt.max_branching);
  std::uniform_real_distribution<double> price(opt.v_lo, opt.v_hi);
  std::uniform_real_distribution<double> weight(0.1, 1.0);
  std::uniform_int_distribution<int> amount(1, 2);

  const int horizon = horizon_dist(rng);
  std::vector<TreeNode> nodes{{0, 0, std::nullopt, 1.0, {{"V", price(rng)}}}};
  std::vector<NodeId> frontier{0};
  for (int s = 1; s <= horizon; ++s) {
    std::vector<NodeId> next;
    for (NodeId parent : frontier) {
      const int k = branch_dist(rng);
      std::vector<double> w(k);
      double total = 0.0;
      for (auto& x : w) total += (x = weight(rng));
      for (int c = 0; c < k; ++c) {
        const NodeId id = static_cast<NodeId>(nodes.size());
        nodes.push_back({id, s, parent, w[c] / total, {{"V", price(rng)}}});
        next.push_back(id);
      }
    }
    frontier = std::move(next);
  }
  return ScenarioTree::validated(horizon, std::move(nodes),
                                 {{{"a", horizon}, static_cast<double>(amount(rng))}});
}

// Small LP with integer data and a finite box on every column.
inline LpProblem random_box_lp(std::mt19937_64& rng, int max_cols = 6, int max_rows = 6) {
  std::uniform_int_distribution<int> ncols(1, max_cols), nrows(0, max_rows);
  std::uniform_int_distribution<int> coef(-5, 5), rhs(-4, 10), relop(0, 2), lower(-3, 0),
      width(1, 6);
  std::bernoulli_distribution sparse(0.3);

  LpProblem p;
  const int n = ncols(rng);
  for (int j = 0; j < n; ++j) {
    const double l = lower(rng);
    p.add_column(coef(rng), l, l + width(rng));
  }
  const int m = nrows(rng);
  for (int i = 0; i < m; ++i) {
    std::map<int, double> row;
    for (int j = 0; j < n; ++j)
      if (!sparse(rng))
        if (int c = coef(rng); c != 0) row[j] = c;
    const int r = relop(rng);
    const RelOp op = r == 0 ? RelOp::Eq : (r == 1 ? RelOp::Le : RelOp::Ge);
    p.add_row(std::move(row), op, rhs(rng));
  }
  return p;
}

inline ValidatedModel purchase_model(int horizon) {
  return validate_model(parse_model(kPurchaseModel), horizon);
}

}  // namespace msm::testing
