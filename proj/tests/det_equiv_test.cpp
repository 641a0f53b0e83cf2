#include <gtest/gtest.h>

#include <random>

#include "msm/det_equiv.hpp"
#include "msm/lp.hpp"
#include "support/fixtures.hpp"

namespace msm {
namespace {

using testing::node;

ScenarioTree single_node_tree(double amount) {
  return ScenarioTree::validated(0, {node(0, 0, std::nullopt, 1.0, 5.0)}, {{{"a", 0}, amount}});
}

// Σ over stochastic vars of nodes in the stage set + Σ over deterministic vars of |stage set|.
std::size_t predicted_columns(const ValidatedModel& vm, const ScenarioTree& t) {
  std::size_t n = 0;
  for (const auto& v : vm.model().vars) {
    const Annotation& a = vm.annotation_of(v.name);
    if (a.kind == StageKind::Deterministic)
      n += a.stages.size();
    else
      for (int s : a.stages) n += t.stage_nodes(s).size();
  }
  return n;
}

int predicted_coupling_rows(const ValidatedModel& vm, const ScenarioTree& t) {
  std::vector<int> leaves_below(t.size(), 0);
  for (NodeId leaf : t.leaves())
    for (NodeId n : t.path(leaf)) ++leaves_below[n];
  int rows = 0;
  for (const auto& v : vm.model().vars) {
    const Annotation& a = vm.annotation_of(v.name);
    if (a.kind != StageKind::Stochastic) continue;
    for (int s : a.stages)
      for (NodeId n : t.stage_nodes(s)) rows += leaves_below[n] - 1;
  }
  return rows;
}

TEST(ExpandNodeForm, ThreeNodeTreeByHand) {
  const ScenarioTree t = testing::three_node_tree();
  const ExpandedModel em = expand_node_form(testing::purchase_model(1), t);
  const LpProblem& lp = em.lp;

  ASSERT_EQ(lp.n_cols, 6);
  ASSERT_EQ(lp.n_rows(), 5);
  // Columns grouped by variable, then node id.
  const std::vector<ColumnKey> cols = {{"x", 0, 0}, {"x", 1, 1}, {"x", 2, 1},
                                       {"s", 0, 0}, {"s", 1, 1}, {"s", 2, 1}};
  EXPECT_EQ(em.columns.reverse, cols);
  for (int j = 0; j < 6; ++j) {
    EXPECT_EQ(lp.lb[j], 0.0);
    EXPECT_EQ(lp.ub[j], kInf);
  }

  // Rows grouped by constraint declaration order, then node id.
  const std::vector<LpRow> rows = {
      {{{4, 1.0}, {3, -1.0}, {1, -1.0}}, RelOp::Eq, 0.0},  // s1 - s0 - x1 = 0
      {{{5, 1.0}, {3, -1.0}, {2, -1.0}}, RelOp::Eq, 0.0},  // s2 - s0 - x2 = 0
      {{{3, 1.0}}, RelOp::Eq, 0.0},                         // s0 = 0
      {{{4, 1.0}}, RelOp::Eq, 1.0},                         // s1 = a
      {{{5, 1.0}}, RelOp::Eq, 1.0},                         // s2 = a
  };
  EXPECT_EQ(lp.rows, rows);
  const std::vector<RowLabel> labels = {{"non_anticitpativity", 1, 1, kNoNode, {}},
                                        {"non_anticitpativity", 2, 1, kNoNode, {}},
                                        {"root_stage", 0, 0, kNoNode, {}},
                                        {"terminal_stage", 1, 1, kNoNode, {}},
                                        {"terminal_stage", 2, 1, kNoNode, {}}};
  EXPECT_EQ(em.row_labels, labels);

  // 1.0 * 5.0, 0.5 * 4.0, 0.5 * 8.0 on the x columns; nothing on s.
  EXPECT_EQ(lp.objective, (std::vector<double>{5.0, 2.0, 4.0, 0.0, 0.0, 0.0}));
  EXPECT_EQ(lp.objective_constant, 0.0);

  const auto sol = solve(lp);
  ASSERT_EQ(sol.status, LpStatus::Optimal);
  EXPECT_NEAR(sol.objective_value, 6.0, 1e-9);
}

TEST(ExpandNodeForm, LpFileNames) {
  const ExpandedModel em = expand_node_form(testing::purchase_model(1), testing::three_node_tree());
  const std::string lp = emit_lp_file(em);
  const std::string expected =
      "\\ deterministic equivalent\n"
      "Minimize\n"
      " obj: 5 x__n0 + 2 x__n1 + 4 x__n2\n"
      "Subject To\n"
      " non_anticitpativity__n1: - x__n1 - s__n0 + s__n1 = 0\n"
      " non_anticitpativity__n2: - x__n2 - s__n0 + s__n2 = 0\n"
      " root_stage__n0: s__n0 = 0\n"
      " terminal_stage__n1: s__n1 = 1\n"
      " terminal_stage__n2: s__n2 = 1\n"
      "Bounds\n"
      " x__n0 >= 0\n"
      " x__n1 >= 0\n"
      " x__n2 >= 0\n"
      " s__n0 >= 0\n"
      " s__n1 >= 0\n"
      " s__n2 >= 0\n"
      "End\n";
  EXPECT_EQ(lp, expected);
  EXPECT_EQ(emit_lp_file(expand_node_form(testing::purchase_model(1), testing::three_node_tree())), lp);
}

TEST(ExpandNodeForm, HorizonZero) {
  const ValidatedModel vm = testing::purchase_model(0);
  EXPECT_EQ(vm.annotation_of("non_anticitpativity").stages.size(), 0u);

  const ExpandedModel zero = expand_node_form(vm, single_node_tree(0.0));
  EXPECT_EQ(zero.lp.n_cols, 2);
  EXPECT_EQ(zero.lp.n_rows(), 2);
  EXPECT_EQ(zero.row_labels[0].constraint, "root_stage");
  EXPECT_EQ(zero.row_labels[1].constraint, "terminal_stage");
  const auto sol = solve(zero.lp);
  ASSERT_EQ(sol.status, LpStatus::Optimal);
  EXPECT_EQ(sol.x, (std::vector<double>{0.0, 0.0}));

  const ExpandedModel one = expand_node_form(vm, single_node_tree(1.0));
  EXPECT_EQ(one.lp.n_rows(), 2);
  EXPECT_EQ(solve(one.lp).status, LpStatus::Infeasible);
}

TEST(ExpandNodeForm, Errors) {
  EXPECT_THROW(expand_node_form(testing::purchase_model(2), testing::three_node_tree()), ExpansionError);

  // V missing on a leaf.
  const ScenarioTree no_v = ScenarioTree::validated(
      1, {node(0, 0, std::nullopt, 1.0, 5.0), TreeNode{1, 1, 0, 1.0, {}}}, {{{"a", 1}, 1.0}});
  try {
    expand_node_form(testing::purchase_model(1), no_v);
    FAIL();
  } catch (const MissingParam& e) {
    EXPECT_EQ(e.name, "V");
    EXPECT_EQ(e.node, 1);
  }

  // Deterministic a missing from the stage section.
  const ScenarioTree no_a = ScenarioTree::validated(
      1, {node(0, 0, std::nullopt, 1.0, 5.0), node(1, 1, 0, 1.0, 4.0)});
  EXPECT_THROW(expand_node_form(testing::purchase_model(1), no_a), MissingParam);

  // Recourse into a stage where the variable has no column.
  const ValidatedModel late = validate_model(
      parse_model("stochastic x: 1..T; stochastic o, c: 1..T;\n"
                  "var x >= 0; minimize o: E(x); subject to c: x(-1) <= 1;"),
      1);
  EXPECT_THROW(expand_node_form(late, testing::three_node_tree()), RecourseError);

  // Objective without E() that differs between the nodes of a stage.
  const ValidatedModel plain = validate_model(
      parse_model("stochastic x, o: 0..T; var x >= 0; minimize o: V * x;"), 1);
  EXPECT_THROW(expand_node_form(plain, testing::three_node_tree()), ExpansionError);
  EXPECT_NO_THROW(expand_node_form(plain, testing::chain_tree(1)));
}

TEST(ExpandNodeForm, DeterministicObjectsPerStage) {
  const ValidatedModel vm = validate_model(
      parse_model("deterministic a, y, cap: T; deterministic k: 0..T;\n"
                  "stochastic x: 0..T; stochastic o, c: T;\n"
                  "param a, k; var x >= 0, y >= 0;\n"
                  "minimize o: E(V * x + y);\n"
                  "subject to c: x <= k * y;\n"
                  "subject to cap: y <= a;"),
      2);
  ScenarioTree t = testing::seven_node_tree(3.0);
  std::map<StageParamKey, double> sp = t.stage_params();
  for (int s = 0; s <= 2; ++s) sp[{"k", s}] = 1.0 + s;
  t = ScenarioTree::validated(2, t.nodes(), sp);

  const ExpandedModel em = expand_node_form(vm, t);
  EXPECT_EQ(static_cast<std::size_t>(em.lp.n_cols), predicted_columns(vm, t));
  EXPECT_EQ(em.lp.n_cols, 8);  // 7 x + 1 y
  const int y = *em.columns.find({"y", kNoNode, 2, kNoNode});
  ASSERT_EQ(em.lp.n_rows(), 4 + 1);
  EXPECT_EQ(em.row_labels.back(), (RowLabel{"cap", kNoNode, 2, kNoNode, {}}));
  EXPECT_EQ(em.lp.rows.back(), (LpRow{{{y, 1.0}}, RelOp::Le, 3.0}));
  // The stage-2 rows of c use k at stage 2.
  const LpRow& c3 = em.lp.rows[0];
  EXPECT_EQ(em.row_labels[0].node, 3);
  EXPECT_EQ(c3.coeffs.at(y), -3.0);
  // y appears once per stage-2 node in E(), weighted by the node probabilities.
  EXPECT_NEAR(em.lp.objective[y], 1.0, 1e-12);
}

TEST(ExpandScenarioForm, ThreeNodeCounts) {
  const ValidatedModel vm = testing::purchase_model(1);
  const ScenarioTree t = testing::three_node_tree();
  const ExpandedModel em = expand_scenario_form(vm, t);
  EXPECT_EQ(em.lp.n_cols, 8);
  EXPECT_EQ(em.coupling_rows, 2);
  EXPECT_EQ(em.lp.n_rows(), 8);
  // Coupling rows come last and tie the stage-0 copies.
  for (int i = 6; i < 8; ++i) {
    EXPECT_EQ(em.row_labels[i].node, 0);
    EXPECT_EQ(em.lp.rows[i].rhs, 0.0);
    EXPECT_EQ(em.lp.rows[i].coeffs.size(), 2u);
  }
  EXPECT_EQ(em.row_labels[6].coupled_var, "x");
  EXPECT_EQ(em.row_labels[7].coupled_var, "s");
  EXPECT_EQ(row_name(em.row_labels[6]), "x__na__n0__w2");
  EXPECT_EQ(column_name(em.columns.reverse[0]), "x__n0__w1");

  const auto node_sol = solve(expand_node_form(vm, t).lp);
  const auto scen_sol = solve(em.lp);
  ASSERT_EQ(scen_sol.status, LpStatus::Optimal);
  EXPECT_NEAR(scen_sol.objective_value, node_sol.objective_value, 1e-6);
}

TEST(ExpandScenarioForm, ChainHasNoCoupling) {
  for (int T = 1; T <= 4; ++T) {
    const ValidatedModel vm = testing::purchase_model(T);
    const ScenarioTree t = testing::chain_tree(T);
    const ExpandedModel scen = expand_scenario_form(vm, t);
    const ExpandedModel nodef = expand_node_form(vm, t);
    EXPECT_EQ(scen.coupling_rows, 0);
    EXPECT_EQ(scen.lp.n_cols, nodef.lp.n_cols);
    EXPECT_EQ(scen.lp.n_rows(), nodef.lp.n_rows());
  }
}

TEST(ResolveRecourseRef, Examples) {
  const ValidatedModel vm = testing::purchase_model(1);
  const ScenarioTree t = testing::three_node_tree();
  const ExpandedModel em = expand_node_form(vm, t);
  for (NodeId leaf : {1, 2})
    EXPECT_EQ(resolve_recourse_ref(vm, t, "s", leaf, 1), *em.columns.find({"s", 0, 0}));
  for (NodeId n : {0, 1, 2})
    EXPECT_EQ(resolve_recourse_ref(vm, t, "x", n, 0), *em.columns.find({"x", n, t.node(n).stage}));
  EXPECT_THROW(resolve_recourse_ref(vm, t, "s", 0, 1), RecourseError);
  EXPECT_THROW(resolve_recourse_ref(vm, t, "V", 1, 0), RecourseError);
}

TEST(ExpansionProperties, RandomPurchaseInstances) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> lambda_dist(0.1, 5.0);
  for (int trial = 0; trial < 60; ++trial) {
    const ScenarioTree t = testing::random_purchase_tree(rng);
    const ValidatedModel vm = testing::purchase_model(t.horizon());
    const ExpandedModel em = expand_node_form(vm, t);

    // Column count and probability placement.
    EXPECT_EQ(static_cast<std::size_t>(em.lp.n_cols), predicted_columns(vm, t));
    for (int j = 0; j < em.lp.n_cols; ++j) {
      const ColumnKey& k = em.columns.reverse[j];
      const double expected = k.var == "x" ? node_probability(t, k.node) * *t.node_param(k.node, "V") : 0.0;
      EXPECT_NEAR(em.lp.objective[j], expected, 1e-12);
    }
    for (const auto& row : em.lp.rows)
      for (const auto& [col, c] : row.coeffs) EXPECT_TRUE(c == 1.0 || c == -1.0);

    const auto node_sol = solve(em.lp);
    ASSERT_EQ(node_sol.status, LpStatus::Optimal);

    const ExpandedModel scen = expand_scenario_form(vm, t);
    EXPECT_EQ(scen.coupling_rows, predicted_coupling_rows(vm, t));
    const auto scen_sol = solve(scen.lp);
    ASSERT_EQ(scen_sol.status, LpStatus::Optimal);
    EXPECT_NEAR(scen_sol.objective_value, node_sol.objective_value, 1e-6);

    // Scaling V by lambda: the old optimizer stays feasible and costs lambda * opt.
    const double lambda = lambda_dist(rng);
    std::vector<TreeNode> scaled = t.nodes();
    for (auto& nd : scaled) nd.params["V"] *= lambda;
    const ScenarioTree ts = ScenarioTree::validated(t.horizon(), scaled, t.stage_params());
    const ExpandedModel ems = expand_node_form(vm, ts);
    const auto scaled_sol = solve(ems.lp);
    ASSERT_EQ(scaled_sol.status, LpStatus::Optimal);
    EXPECT_NEAR(scaled_sol.objective_value, lambda * node_sol.objective_value,
                1e-9 * std::max(1.0, lambda * node_sol.objective_value));
    double old_x_cost = 0.0;
    for (int j = 0; j < ems.lp.n_cols; ++j) old_x_cost += ems.lp.objective[j] * node_sol.x[j];
    EXPECT_TRUE(check_solution(ems.lp, node_sol.x).feasible);
    EXPECT_NEAR(old_x_cost, scaled_sol.objective_value, 1e-9 * std::max(1.0, old_x_cost));
  }
}

}  // namespace
}  // namespace msm
