#pragma once

// Brute-force reference solutions used to cross-check the expansion and the
// simplex. Neither routine shares code with the paths they check beyond the
// LP and tree containers.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "msm/errors.hpp"
#include "msm/lp.hpp"
#include "msm/scenario_tree.hpp"

namespace msm {

// Purchase-over-time instance: buy a total amount at prices V that evolve on
// the tree, with inventory starting at 0 and reaching the amount at stage T.
struct PurchaseInstance {
  ScenarioTree tree;
  double amount = 0.0;
};

// Reads the amount from the tree's stage parameter `a` at stage T.
inline PurchaseInstance purchase_instance(ScenarioTree tree) {
  auto a = tree.stage_param("a", tree.horizon());
  if (!a) throw OracleError("tree has no stage parameter 'a' at stage T");
  return {std::move(tree), *a};
}

// Costs are linear and inventory only grows from 0 to the amount, so some
// optimal policy buys everything at one node per path: an optimal stopping
// problem over stages 1..T. Backward recursion gives the value per unit:
//   leaf:           V(n)
//   interior n:     min(V(n), sum_c q_c value(c))
//   root:           sum_c q_c value(c)   (nothing can be stored at stage 0)
inline double dp_purchase_oracle(const PurchaseInstance& inst) {
  const ScenarioTree& t = inst.tree;
  if (t.horizon() < 1) throw OracleError("purchase instance needs T >= 1");
  if (inst.amount < 0) throw OracleError("purchase amount must be nonnegative");

  std::vector<double> value(t.size(), 0.0);
  for (int s = t.horizon(); s >= 0; --s)
    for (NodeId n : t.stage_nodes(s)) {
      double cont = 0.0;
      for (NodeId c : t.children(n)) cont += t.node(c).prob * value[c];
      if (s == 0) {
        value[n] = cont;
        continue;
      }
      auto price = t.node_param(n, "V");
      if (!price) throw OracleError("node " + std::to_string(n) + " lacks V");
      if (!(*price > 0)) throw OracleError("node " + std::to_string(n) + " has V <= 0");
      value[n] = s == t.horizon() ? *price : std::min(*price, cont);
    }
  return inst.amount * value[t.root()];
}

struct VertexResult {
  LpStatus status = LpStatus::Infeasible;
  double best_objective = 0.0;
  std::vector<double> best_x;
};

namespace detail {

// Solves the square system in place; nullopt when (numerically) singular.
inline std::optional<std::vector<double>> solve_square(std::vector<std::vector<double>> a,
                                                       std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::fabs(a[i][k]) > std::fabs(a[piv][k])) piv = i;
    if (std::fabs(a[piv][k]) < 1e-10) return std::nullopt;
    std::swap(a[k], a[piv]);
    std::swap(b[k], b[piv]);
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = a[i][k] / a[k][k];
      if (f == 0.0) continue;
      for (std::size_t j = k; j < n; ++j) a[i][j] -= f * a[k][j];
      b[i] -= f * b[k];
    }
  }
  std::vector<double> x(n);
  for (std::size_t k = n; k-- > 0;) {
    double s = b[k];
    for (std::size_t j = k + 1; j < n; ++j) s -= a[k][j] * x[j];
    x[k] = s / a[k][k];
  }
  return x;
}

}  // namespace detail

// Enumerates every basic solution: each choice of n_cols hyperplanes among the
// rows and the 2 * n_cols bound faces that pins down a unique point. The best
// feasible point is the LP optimum because finite boxes make the polytope bounded.
inline VertexResult enumerate_vertices(const LpProblem& p) {
  const int n = p.n_cols;
  if (n > 10) throw SizeError("vertex enumeration supports at most 10 columns, got " + std::to_string(n));
  for (int j = 0; j < n; ++j)
    if (!std::isfinite(p.lb[j]) || !std::isfinite(p.ub[j]))
      throw SizeError("vertex enumeration needs finite bounds on every column");

  std::vector<std::vector<double>> planes;
  std::vector<double> rhs;
  for (const auto& row : p.rows) {
    std::vector<double> a(n, 0.0);
    for (const auto& [j, c] : row.coeffs) a[j] += c;
    planes.push_back(std::move(a));
    rhs.push_back(row.rhs);
  }
  for (int j = 0; j < n; ++j)
    for (double bound : {p.lb[j], p.ub[j]}) {
      std::vector<double> a(n, 0.0);
      a[j] = 1.0;
      planes.push_back(std::move(a));
      rhs.push_back(bound);
    }

  VertexResult best;
  auto consider = [&](const std::vector<double>& x) {
    if (!check_solution(p, x).feasible) return;
    double obj = p.objective_constant;
    for (int j = 0; j < n; ++j) obj += p.objective[j] * x[j];
    if (best.status != LpStatus::Optimal || obj < best.best_objective) {
      best.status = LpStatus::Optimal;
      best.best_objective = obj;
      best.best_x = x;
    }
  };

  if (n == 0) {
    consider({});
    return best;
  }

  const int h = static_cast<int>(planes.size());
  std::vector<int> pick(n);
  for (int i = 0; i < n; ++i) pick[i] = i;
  while (true) {
    std::vector<std::vector<double>> a;
    std::vector<double> b;
    for (int i : pick) {
      a.push_back(planes[i]);
      b.push_back(rhs[i]);
    }
    if (auto x = detail::solve_square(std::move(a), std::move(b))) consider(*x);

    int k = n - 1;
    while (k >= 0 && pick[k] == h - n + k) --k;
    if (k < 0) break;
    ++pick[k];
    for (int i = k + 1; i < n; ++i) pick[i] = pick[i - 1] + 1;
  }
  return best;
}

}  // namespace msm
