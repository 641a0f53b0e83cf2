#pragma once

// Data structures produced by the model parser and the builder API.

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace msm {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class TokenKind { Keyword, Ident, Int, Real, Op, LParen, RParen, Colon, Comma, Semi, Range };

struct Token {
  TokenKind kind;
  std::string text;
  int line = 1;
  int col = 1;

  bool operator==(const Token&) const = default;
};

// A stage bound: either an integer literal or the horizon symbol `T`.
struct StageAtom {
  bool is_horizon = false;
  int value = 0;

  static StageAtom horizon() { return {true, 0}; }
  static StageAtom literal(int v) { return {false, v}; }

  bool operator==(const StageAtom&) const = default;
};

struct StageSetExpr {
  StageAtom lo;
  std::optional<StageAtom> hi;  // absent for a single stage

  bool operator==(const StageSetExpr&) const = default;
};

struct SymbolRef {
  std::string name;
  int recourse_depth = 0;  // k in name(-k); 0 is the current node

  bool operator==(const SymbolRef&) const = default;
};

struct Term {
  double coeff = 1.0;
  std::vector<SymbolRef> factors;  // at most two

  bool operator==(const Term&) const = default;
};

struct LinExpr {
  std::vector<Term> terms;
  double constant = 0.0;
  bool expect = false;  // whole expression wrapped in E(...)

  bool operator==(const LinExpr&) const = default;
};

enum class RelOp { Eq, Le, Ge };
enum class StageKind { Deterministic, Stochastic };

struct ParamDecl {
  std::string name;
  bool operator==(const ParamDecl&) const = default;
};

struct VarDecl {
  std::string name;
  double lb = -kInf;
  double ub = kInf;
  bool operator==(const VarDecl&) const = default;
};

struct Objective {
  std::string name;
  LinExpr expr;  // always minimized
  bool operator==(const Objective&) const = default;
};

struct Constraint {
  std::string name;
  LinExpr lhs;
  RelOp relop = RelOp::Eq;
  LinExpr rhs;
  bool operator==(const Constraint&) const = default;
};

struct StageDecl {
  StageKind kind = StageKind::Stochastic;
  std::vector<std::string> objects;
  StageSetExpr stages;
  bool operator==(const StageDecl&) const = default;
};

struct MetaModel {
  std::vector<ParamDecl> params;
  std::vector<VarDecl> vars;
  std::optional<Objective> objective;
  std::vector<Constraint> constraints;
  std::vector<StageDecl> stage_decls;
  // Identifiers used in expressions without a param/var declaration, in order
  // of first use. Their values must come from the scenario tree.
  std::vector<std::string> implicit_params;

  bool operator==(const MetaModel&) const = default;

  const VarDecl* find_var(const std::string& name) const {
    for (const auto& v : vars)
      if (v.name == name) return &v;
    return nullptr;
  }
  bool has_param(const std::string& name) const {
    for (const auto& p : params)
      if (p.name == name) return true;
    for (const auto& p : implicit_params)
      if (p == name) return true;
    return false;
  }
};

inline const char* to_string(RelOp op) {
  switch (op) {
    case RelOp::Eq: return "=";
    case RelOp::Le: return "<=";
    case RelOp::Ge: return ">=";
  }
  return "?";
}

inline const char* to_string(StageKind k) {
  return k == StageKind::Deterministic ? "deterministic" : "stochastic";
}

}  // namespace msm
