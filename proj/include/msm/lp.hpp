#pragma once

// Linear programs in minimization form, a dense bounded-variable two-phase
// simplex, a feasibility checker, and an LP text writer.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "msm/ast.hpp"
#include "msm/errors.hpp"

namespace msm {

inline constexpr double kPivotTol = 1e-9;
inline constexpr double kFeasTol = 1e-8;
inline constexpr int kBlandAfterDegenerate = 50;
inline constexpr std::int64_t kMaxPivots = 1'000'000;

struct LpRow {
  std::map<int, double> coeffs;  // column -> coefficient
  RelOp relop = RelOp::Eq;
  double rhs = 0.0;

  bool operator==(const LpRow&) const = default;
};

struct LpProblem {
  int n_cols = 0;
  std::vector<double> objective;  // minimized
  double objective_constant = 0.0;
  std::vector<LpRow> rows;
  std::vector<double> lb;
  std::vector<double> ub;

  int n_rows() const noexcept { return static_cast<int>(rows.size()); }

  int add_column(double cost, double lower = 0.0, double upper = kInf) {
    objective.push_back(cost);
    lb.push_back(lower);
    ub.push_back(upper);
    return n_cols++;
  }

  int add_row(std::map<int, double> coeffs, RelOp relop, double rhs) {
    rows.push_back({std::move(coeffs), relop, rhs});
    return n_rows() - 1;
  }

  bool operator==(const LpProblem&) const = default;
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

inline const char* to_string(LpStatus s) {
  switch (s) {
    case LpStatus::Optimal: return "OPTIMAL";
    case LpStatus::Infeasible: return "INFEASIBLE";
    case LpStatus::Unbounded: return "UNBOUNDED";
  }
  return "?";
}

struct LpSolution {
  LpStatus status = LpStatus::Infeasible;
  std::vector<double> x;  // empty unless optimal
  double objective_value = 0.0;
  double max_residual = 0.0;
  std::int64_t pivots = 0;
};

struct SolutionCheck {
  bool feasible = false;
  double max_residual = 0.0;
};

inline double row_activity(const LpRow& row, const std::vector<double>& x) {
  double s = 0.0;
  for (const auto& [j, a] : row.coeffs) s += a * x[static_cast<std::size_t>(j)];
  return s;
}

inline SolutionCheck check_solution(const LpProblem& p, const std::vector<double>& x) {
  if (x.size() != static_cast<std::size_t>(p.n_cols))
    throw DimensionError("solution has " + std::to_string(x.size()) + " entries, problem has " +
                         std::to_string(p.n_cols) + " columns");
  double worst = 0.0;
  for (const auto& row : p.rows) {
    const double act = row_activity(row, x);
    double v = 0.0;
    switch (row.relop) {
      case RelOp::Eq: v = std::fabs(act - row.rhs); break;
      case RelOp::Le: v = std::max(0.0, act - row.rhs); break;
      case RelOp::Ge: v = std::max(0.0, row.rhs - act); break;
    }
    worst = std::max(worst, v);
  }
  for (int j = 0; j < p.n_cols; ++j) {
    worst = std::max(worst, p.lb[j] - x[j]);
    worst = std::max(worst, x[j] - p.ub[j]);
  }
  return {worst <= kFeasTol, worst};
}

namespace detail {

// Tableau simplex over  A y = b, 0 <= y <= u,  with b >= 0 after row scaling.
// Every row starts with a unit column (slack or artificial) in the basis, so
// the tableau columns of those starting variables hold the basis inverse.
class BoundedSimplex {
 public:
  enum class Status { Basic, AtLower, AtUpper };

  BoundedSimplex(std::vector<std::vector<double>> a, std::vector<double> b,
                 std::vector<double> upper, std::vector<int> initial_basis,
                 std::vector<bool> artificial)
      : m_(a.size()),
        n_(upper.size()),
        a0_(a),
        b0_(b),
        tab_(std::move(a)),
        beta_(std::move(b)),
        upper_(std::move(upper)),
        basis_(std::move(initial_basis)),
        unit_cols_(basis_),
        artificial_(std::move(artificial)),
        status_(n_, Status::AtLower),
        barred_(n_, false),
        d_(n_, 0.0) {
    for (int j : basis_) status_[j] = Status::Basic;
  }

  // Minimizes cost . y from the current basis. Returns false if unbounded.
  bool optimize(const std::vector<double>& cost) {
    cost_ = cost;
    reprice();
    int degenerate_run = 0;
    bool bland = false;
    while (true) {
      if (++pivots_ > kMaxPivots)
        throw IterationLimit("simplex exceeded " + std::to_string(kMaxPivots) + " pivots");
      const int q = choose_entering(bland);
      if (q < 0) {
        --pivots_;
        return true;
      }
      const double dir = status_[q] == Status::AtLower ? 1.0 : -1.0;

      double theta = kInf;
      int leave = -1;
      bool leave_to_upper = false;
      double best_alpha = 0.0;
      for (std::size_t i = 0; i < m_; ++i) {
        const double g = dir * tab_[i][q];
        double limit;
        bool to_upper;
        if (g > kPivotTol) {
          limit = std::max(0.0, beta_[i]) / g;
          to_upper = false;
        } else if (g < -kPivotTol && std::isfinite(upper_[basis_[i]])) {
          limit = std::max(0.0, upper_[basis_[i]] - beta_[i]) / -g;
          to_upper = true;
        } else {
          continue;
        }
        const bool better =
            limit < theta - 1e-12 ||
            (limit <= theta + 1e-12 && leave >= 0 &&
             (bland ? basis_[i] < basis_[leave] : std::fabs(g) > best_alpha));
        if (better) {
          theta = limit;
          leave = static_cast<int>(i);
          leave_to_upper = to_upper;
          best_alpha = std::fabs(g);
        }
      }
      const bool flip = std::isfinite(upper_[q]) && upper_[q] <= theta;
      if (flip) theta = upper_[q];
      if (!std::isfinite(theta)) return false;

      if (theta <= 1e-12) {
        if (++degenerate_run > kBlandAfterDegenerate) bland = true;
      } else {
        degenerate_run = 0;
        bland = false;
      }

      for (std::size_t i = 0; i < m_; ++i)
        if (tab_[i][q] != 0.0) beta_[i] -= dir * tab_[i][q] * theta;

      if (flip) {
        status_[q] = status_[q] == Status::AtLower ? Status::AtUpper : Status::AtLower;
        continue;
      }
      const double entering_value = dir > 0 ? theta : upper_[q] - theta;
      const int out = basis_[leave];
      status_[out] = leave_to_upper ? Status::AtUpper : Status::AtLower;
      pivot(static_cast<std::size_t>(leave), q);
      beta_[leave] = entering_value;
    }
  }

  // Pivots basic artificials out where some admissible column has weight in
  // their row; rows where none exists are redundant and keep a zero artificial.
  void expel_artificials() {
    for (std::size_t r = 0; r < m_; ++r) {
      if (!artificial_[basis_[r]]) continue;
      int best = -1;
      double best_abs = 1e-7;
      for (std::size_t j = 0; j < n_; ++j)
        if (status_[j] != Status::Basic && !barred_[j] && std::fabs(tab_[r][j]) > best_abs) {
          best = static_cast<int>(j);
          best_abs = std::fabs(tab_[r][j]);
        }
      if (best < 0) continue;
      const double value = status_[best] == Status::AtUpper ? upper_[best] : 0.0;
      status_[basis_[r]] = Status::AtLower;
      pivot(r, best);
      beta_[r] = value;
      ++pivots_;
    }
  }

  void bar(int j) {
    barred_[j] = true;
    upper_[j] = 0.0;
  }

  // Recomputes basic values from the original data: beta = B^-1 (b - N_u u).
  void refresh_values() {
    std::vector<double> rhs = b0_;
    for (std::size_t j = 0; j < n_; ++j)
      if (status_[j] == Status::AtUpper)
        for (std::size_t i = 0; i < m_; ++i) rhs[i] -= a0_[i][j] * upper_[j];
    for (std::size_t i = 0; i < m_; ++i) {
      double v = 0.0;
      for (std::size_t k = 0; k < m_; ++k) v += tab_[i][unit_cols_[k]] * rhs[k];
      beta_[i] = v;
    }
  }

  std::vector<double> values() const {
    std::vector<double> y(n_, 0.0);
    for (std::size_t j = 0; j < n_; ++j)
      if (status_[j] == Status::AtUpper) y[j] = upper_[j];
    for (std::size_t i = 0; i < m_; ++i) y[basis_[i]] = beta_[i];
    return y;
  }

  std::int64_t pivots() const noexcept { return pivots_; }

 private:
  void reprice() {
    for (std::size_t j = 0; j < n_; ++j) {
      double z = 0.0;
      for (std::size_t i = 0; i < m_; ++i) z += cost_[basis_[i]] * tab_[i][j];
      d_[j] = cost_[j] - z;
    }
  }

  int choose_entering(bool bland) const {
    int best = -1;
    double best_score = 0.0;
    for (std::size_t j = 0; j < n_; ++j) {
      if (status_[j] == Status::Basic || barred_[j]) continue;
      double score;
      if (status_[j] == Status::AtLower && d_[j] < -kPivotTol)
        score = -d_[j];
      else if (status_[j] == Status::AtUpper && d_[j] > kPivotTol)
        score = d_[j];
      else
        continue;
      if (bland) return static_cast<int>(j);
      if (score > best_score) {
        best_score = score;
        best = static_cast<int>(j);
      }
    }
    return best;
  }

  void pivot(std::size_t r, int q) {
    auto& prow = tab_[r];
    const double piv = prow[q];
    for (auto& v : prow) v /= piv;
    prow[q] = 1.0;
    for (std::size_t i = 0; i < m_; ++i) {
      if (i == r) continue;
      const double f = tab_[i][q];
      if (f == 0.0) continue;
      auto& row = tab_[i];
      for (std::size_t j = 0; j < n_; ++j)
        if (prow[j] != 0.0) row[j] -= f * prow[j];
      row[q] = 0.0;
    }
    const double dq = d_[q];
    if (dq != 0.0)
      for (std::size_t j = 0; j < n_; ++j)
        if (prow[j] != 0.0) d_[j] -= dq * prow[j];
    d_[q] = 0.0;
    status_[q] = Status::Basic;
    basis_[r] = q;
  }

  std::size_t m_, n_;
  std::vector<std::vector<double>> a0_;
  std::vector<double> b0_;
  std::vector<std::vector<double>> tab_;
  std::vector<double> beta_;
  std::vector<double> upper_;
  std::vector<int> basis_;
  std::vector<int> unit_cols_;
  std::vector<bool> artificial_;
  std::vector<Status> status_;
  std::vector<bool> barred_;
  std::vector<double> d_;
  std::vector<double> cost_;
  std::int64_t pivots_ = 0;
};

}  // namespace detail

// Two-phase bounded-variable simplex. Columns are shifted onto [0, u - l],
// reflected when only an upper bound exists, and split when free.
inline LpSolution solve(const LpProblem& p) {
  for (int j = 0; j < p.n_cols; ++j)
    if (p.lb[j] > p.ub[j]) return LpSolution{LpStatus::Infeasible, {}, 0.0, 0.0, 0};
  struct Piece {
    int col;
    double sign;
  };
  std::vector<Piece> pieces;
  std::vector<double> upper;
  std::vector<double> offset(p.n_cols, 0.0);
  std::vector<std::vector<int>> pieces_of(p.n_cols);

  for (int j = 0; j < p.n_cols; ++j) {
    const double l = p.lb[j], u = p.ub[j];
    auto add = [&](double sign, double ub) {
      pieces_of[j].push_back(static_cast<int>(pieces.size()));
      pieces.push_back({j, sign});
      upper.push_back(ub);
    };
    if (std::isfinite(l)) {
      offset[j] = l;
      add(1.0, u - l);
    } else if (std::isfinite(u)) {
      offset[j] = u;
      add(-1.0, kInf);
    } else {
      add(1.0, kInf);
      add(-1.0, kInf);
    }
  }
  const int n_struct = static_cast<int>(pieces.size());
  const std::size_t m = p.rows.size();

  // Column layout: structural pieces, one slack per inequality row, then artificials.
  std::vector<double> rhs(m);
  std::vector<int> slack_of(m, -1);
  int n_total = n_struct;
  for (std::size_t i = 0; i < m; ++i) {
    if (p.rows[i].relop != RelOp::Eq) slack_of[i] = n_total++;
    double b = p.rows[i].rhs;
    for (const auto& [j, a] : p.rows[i].coeffs) b -= a * offset[j];
    rhs[i] = b;
  }
  for (int j = n_struct; j < n_total; ++j) upper.push_back(kInf);

  std::vector<std::vector<double>> a(m);
  std::vector<int> basis(m, -1);
  std::vector<int> art_rows;
  for (std::size_t i = 0; i < m; ++i) {
    const auto& row = p.rows[i];
    a[i].assign(static_cast<std::size_t>(n_total), 0.0);
    for (const auto& [j, coef] : row.coeffs)
      for (int k : pieces_of[j]) a[i][k] += coef * pieces[k].sign;
    if (slack_of[i] >= 0) a[i][slack_of[i]] = row.relop == RelOp::Le ? 1.0 : -1.0;
    if (rhs[i] < 0) {
      for (auto& v : a[i]) v = -v;
      rhs[i] = -rhs[i];
    }
    if (slack_of[i] >= 0 && a[i][slack_of[i]] > 0)
      basis[i] = slack_of[i];
    else
      art_rows.push_back(static_cast<int>(i));
  }
  const int n_art = static_cast<int>(art_rows.size());
  std::vector<bool> artificial(static_cast<std::size_t>(n_total + n_art), false);
  for (int k = 0; k < n_art; ++k) {
    const int col = n_total + k;
    for (std::size_t i = 0; i < m; ++i) a[i].push_back(static_cast<std::size_t>(art_rows[k]) == i ? 1.0 : 0.0);
    basis[art_rows[k]] = col;
    upper.push_back(kInf);
    artificial[col] = true;
  }
  const std::size_t n_all = upper.size();

  detail::BoundedSimplex sx(std::move(a), rhs, upper, basis, artificial);

  LpSolution sol;
  if (n_art > 0) {
    std::vector<double> phase1(n_all, 0.0);
    for (std::size_t j = 0; j < n_all; ++j)
      if (artificial[j]) phase1[j] = 1.0;
    sx.optimize(phase1);
    sx.refresh_values();
    const auto y = sx.values();
    double infeas = 0.0;
    for (std::size_t j = 0; j < n_all; ++j)
      if (artificial[j]) infeas += y[j];
    if (infeas > kPivotTol) {
      sol.status = LpStatus::Infeasible;
      sol.pivots = sx.pivots();
      return sol;
    }
    for (std::size_t j = 0; j < n_all; ++j)
      if (artificial[j]) sx.bar(static_cast<int>(j));
    sx.expel_artificials();
  }

  std::vector<double> cost(n_all, 0.0);
  for (int k = 0; k < n_struct; ++k) cost[k] = p.objective[pieces[k].col] * pieces[k].sign;
  const bool bounded = sx.optimize(cost);
  sol.pivots = sx.pivots();
  if (!bounded) {
    sol.status = LpStatus::Unbounded;
    return sol;
  }
  sx.refresh_values();
  const auto y = sx.values();

  sol.status = LpStatus::Optimal;
  sol.x = offset;
  for (int k = 0; k < n_struct; ++k) sol.x[pieces[k].col] += pieces[k].sign * y[k];
  sol.objective_value = p.objective_constant;
  for (int j = 0; j < p.n_cols; ++j) sol.objective_value += p.objective[j] * sol.x[j];
  sol.max_residual = check_solution(p, sol.x).max_residual;
  return sol;
}

namespace detail {

inline std::string lp_number(double v) {
  if (v == 0.0) v = 0.0;  // no "-0"
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc() ? std::string(buf, ptr) : std::to_string(v);
}

inline void lp_linear(std::ostringstream& os, const std::vector<std::pair<int, double>>& terms,
                      const std::vector<std::string>& names) {
  bool first = true;
  for (const auto& [j, c] : terms) {
    const double mag = std::fabs(c);
    os << (c < 0 ? (first ? "- " : " - ") : (first ? "" : " + "));
    if (mag != 1.0) os << lp_number(mag) << " ";
    os << names[j];
    first = false;
  }
}

}  // namespace detail

// Writes the problem in LP text format (Minimize / Subject To / Bounds / End).
// Every column appears in the Bounds section so that unused columns keep their names.
inline std::string emit_lp_file(const LpProblem& p, std::vector<std::string> col_names = {},
                                std::vector<std::string> row_names = {}) {
  if (col_names.empty())
    for (int j = 0; j < p.n_cols; ++j) col_names.push_back("x" + std::to_string(j));
  if (row_names.empty())
    for (int i = 0; i < p.n_rows(); ++i) row_names.push_back("c" + std::to_string(i));
  if (col_names.size() != static_cast<std::size_t>(p.n_cols) ||
      row_names.size() != static_cast<std::size_t>(p.n_rows()))
    throw DimensionError("LP name lists do not match problem dimensions");

  std::ostringstream os;
  os << "\\ deterministic equivalent\n";
  os << "Minimize\n obj:";
  std::vector<std::pair<int, double>> obj;
  for (int j = 0; j < p.n_cols; ++j)
    if (p.objective[j] != 0.0) obj.emplace_back(j, p.objective[j]);
  if (!obj.empty()) {
    os << " ";
    detail::lp_linear(os, obj, col_names);
  }
  if (p.objective_constant != 0.0 || obj.empty()) {
    const double c = p.objective_constant;
    os << (obj.empty() ? " " : (c < 0 ? " - " : " + "))
       << detail::lp_number(obj.empty() ? c : std::fabs(c));
  }
  os << "\n";

  if (!p.rows.empty()) {
    os << "Subject To\n";
    for (int i = 0; i < p.n_rows(); ++i) {
      const auto& row = p.rows[i];
      os << " " << row_names[i] << ": ";
      std::vector<std::pair<int, double>> terms;
      for (const auto& [j, c] : row.coeffs)
        if (c != 0.0) terms.emplace_back(j, c);
      if (terms.empty())
        os << "0 " << (p.n_cols > 0 ? col_names[0] : std::string("x0"));
      else
        detail::lp_linear(os, terms, col_names);
      os << " " << to_string(row.relop) << " " << detail::lp_number(row.rhs) << "\n";
    }
  }

  if (p.n_cols > 0) {
    os << "Bounds\n";
    for (int j = 0; j < p.n_cols; ++j) {
      const double l = p.lb[j], u = p.ub[j];
      const auto& nm = col_names[j];
      os << " ";
      if (std::isinf(l) && std::isinf(u))
        os << nm << " free";
      else if (std::isinf(u))
        os << nm << " >= " << detail::lp_number(l);
      else if (std::isinf(l))
        os << "-inf <= " << nm << " <= " << detail::lp_number(u);
      else if (l == u)
        os << nm << " = " << detail::lp_number(l);
      else
        os << detail::lp_number(l) << " <= " << nm << " <= " << detail::lp_number(u);
      os << "\n";
    }
  }
  os << "End\n";
  return os.str();
}

}  // namespace msm
