#pragma once

// Recursive-descent parser for model text and the canonical pretty-printer.
//
//   model      := statement*
//   statement  := stage_decl | param_decl | var_decl | objective | constraint
//   stage_decl := ("deterministic" | "stochastic") name ("," name)* ":" stage_set ";"
//   stage_set  := atom (".." atom)?          atom := INT | "T"
//   param_decl := "param" name ("," name)* ";"
//   var_decl   := "var" var_item ("," var_item)* ";"
//   var_item   := name ((">=" | "<=") number)*
//   objective  := "minimize" name ":" ("E" "(" expr ")" | expr) ";"
//   constraint := "subject" "to" name ":" expr relop expr ";"
//   expr       := ("+" | "-")? term (("+" | "-") term)*
//   term       := factor ("*" factor)*
//   factor     := number | name ("(" INT ")")?

#include <charconv>
#include <cmath>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "msm/ast.hpp"
#include "msm/errors.hpp"
#include "msm/lexer.hpp"

namespace msm {

struct ConstraintBody {
  LinExpr lhs;
  RelOp relop = RelOp::Eq;
  LinExpr rhs;
};

// Recomputes MetaModel::implicit_params: undeclared names in the objective,
// then in each constraint (lhs before rhs), in order of first appearance.
inline void refresh_implicit_params(MetaModel& m) {
  std::set<std::string> declared;
  for (const auto& p : m.params) declared.insert(p.name);
  for (const auto& v : m.vars) declared.insert(v.name);

  std::vector<std::string> implicit;
  std::set<std::string> seen;
  auto visit = [&](const LinExpr& e) {
    for (const auto& t : e.terms)
      for (const auto& f : t.factors)
        if (!declared.contains(f.name) && seen.insert(f.name).second) implicit.push_back(f.name);
  };
  if (m.objective) visit(m.objective->expr);
  for (const auto& c : m.constraints) {
    visit(c.lhs);
    visit(c.rhs);
  }
  m.implicit_params = std::move(implicit);
}

namespace detail {

class Parser {
 public:
  explicit Parser(const std::vector<Token>& tokens) : toks_(tokens) {}

  MetaModel model() {
    MetaModel m;
    std::set<std::string> params, vars, rows;
    while (!at_end()) statement(m, params, vars, rows);
    refresh_implicit_params(m);
    return m;
  }

  LinExpr objective_expr() {
    LinExpr e = objective_body();
    expect_end();
    return e;
  }

  ConstraintBody constraint_body() {
    ConstraintBody b = relation();
    expect_end();
    return b;
  }

  StageSetExpr stage_set_only() {
    StageSetExpr s = stage_set();
    expect_end();
    return s;
  }

 private:
  const std::vector<Token>& toks_;
  std::size_t pos_ = 0;

  bool at_end() const { return pos_ >= toks_.size(); }
  const Token* peek(std::size_t ahead = 0) const {
    return pos_ + ahead < toks_.size() ? &toks_[pos_ + ahead] : nullptr;
  }

  [[noreturn]] void fail(const std::string& expected) const {
    if (at_end()) {
      int line = 1, col = 1;
      if (!toks_.empty()) {
        line = toks_.back().line;
        col = toks_.back().col + static_cast<int>(toks_.back().text.size());
      }
      throw ParseError(line, col, expected, "end of input");
    }
    const Token& t = toks_[pos_];
    throw ParseError(t.line, t.col, expected, "'" + t.text + "'");
  }

  bool check(TokenKind kind, std::string_view text = {}) const {
    const Token* t = peek();
    return t && t->kind == kind && (text.empty() || t->text == text);
  }

  bool accept(TokenKind kind, std::string_view text = {}) {
    if (!check(kind, text)) return false;
    ++pos_;
    return true;
  }

  const Token& expect(TokenKind kind, std::string_view text, const std::string& what) {
    if (!check(kind, text)) fail(what);
    return toks_[pos_++];
  }

  void expect_end() {
    if (!at_end()) fail("end of input");
  }

  std::string name() { return expect(TokenKind::Ident, {}, "identifier").text; }

  std::string new_name(std::set<std::string>& taken, const char* category) {
    if (check(TokenKind::Ident) && taken.contains(peek()->text))
      fail(std::string("a new ") + category + " name");
    std::string n = name();
    taken.insert(n);
    return n;
  }

  void statement(MetaModel& m, std::set<std::string>& params, std::set<std::string>& vars,
                 std::set<std::string>& rows) {
    const Token* t = peek();
    if (t->kind != TokenKind::Keyword) fail("statement keyword");
    if (t->text == "deterministic" || t->text == "stochastic") {
      ++pos_;
      StageDecl d;
      d.kind = t->text == "deterministic" ? StageKind::Deterministic : StageKind::Stochastic;
      do d.objects.push_back(name());
      while (accept(TokenKind::Comma));
      expect(TokenKind::Colon, {}, "':'");
      d.stages = stage_set();
      m.stage_decls.push_back(std::move(d));
    } else if (t->text == "param") {
      ++pos_;
      do m.params.push_back({new_name(params, "parameter")});
      while (accept(TokenKind::Comma));
    } else if (t->text == "var") {
      ++pos_;
      do m.vars.push_back(var_item(vars));
      while (accept(TokenKind::Comma));
    } else if (t->text == "minimize") {
      if (m.objective) fail("a single objective");
      ++pos_;
      Objective o;
      o.name = new_name(rows, "objective/constraint");
      expect(TokenKind::Colon, {}, "':'");
      o.expr = objective_body();
      m.objective = std::move(o);
    } else if (t->text == "subject") {
      ++pos_;
      expect(TokenKind::Keyword, "to", "'to'");
      Constraint c;
      c.name = new_name(rows, "objective/constraint");
      expect(TokenKind::Colon, {}, "':'");
      auto body = relation();
      c.lhs = std::move(body.lhs);
      c.relop = body.relop;
      c.rhs = std::move(body.rhs);
      m.constraints.push_back(std::move(c));
    } else {
      fail("statement keyword");
    }
    expect(TokenKind::Semi, {}, "';'");
  }

  VarDecl var_item(std::set<std::string>& vars) {
    VarDecl v;
    v.name = new_name(vars, "variable");
    bool has_lb = false, has_ub = false;
    while (check(TokenKind::Op, ">=") || check(TokenKind::Op, "<=")) {
      const bool lower = peek()->text == ">=";
      if (lower ? has_lb : has_ub) fail("at most one bound of each kind");
      ++pos_;
      (lower ? v.lb : v.ub) = signed_number();
      (lower ? has_lb : has_ub) = true;
    }
    return v;
  }

  double signed_number() {
    double sign = 1.0;
    if (accept(TokenKind::Op, "-"))
      sign = -1.0;
    else
      accept(TokenKind::Op, "+");
    if (!check(TokenKind::Int) && !check(TokenKind::Real)) fail("number");
    return sign * number_value(toks_[pos_++]);
  }

  static double number_value(const Token& t) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
    if (ec != std::errc() || ptr != t.text.data() + t.text.size())
      throw ParseError(t.line, t.col, "number", "'" + t.text + "'");
    return v;
  }

  StageAtom stage_atom() {
    if (check(TokenKind::Int) && peek()->text.front() != '-') {
      const Token& t = toks_[pos_];
      int v = 0;
      auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
      if (ec != std::errc() || ptr != t.text.data() + t.text.size()) fail("stage number");
      ++pos_;
      return StageAtom::literal(v);
    }
    if (check(TokenKind::Ident, "T")) {
      ++pos_;
      return StageAtom::horizon();
    }
    fail("stage (integer or T)");
  }

  StageSetExpr stage_set() {
    StageSetExpr s;
    s.lo = stage_atom();
    if (accept(TokenKind::Range)) s.hi = stage_atom();
    return s;
  }

  LinExpr objective_body() {
    if (check(TokenKind::Ident, "E") && peek(1) && peek(1)->kind == TokenKind::LParen) {
      pos_ += 2;
      LinExpr e = expr();
      expect(TokenKind::RParen, {}, "')'");
      e.expect = true;
      return e;
    }
    return expr();
  }

  ConstraintBody relation() {
    ConstraintBody b;
    b.lhs = expr();
    if (accept(TokenKind::Op, "="))
      b.relop = RelOp::Eq;
    else if (accept(TokenKind::Op, "<="))
      b.relop = RelOp::Le;
    else if (accept(TokenKind::Op, ">="))
      b.relop = RelOp::Ge;
    else
      fail("relational operator");
    b.rhs = expr();
    return b;
  }

  LinExpr expr() {
    LinExpr e;
    double sign = 1.0;
    if (accept(TokenKind::Op, "-"))
      sign = -1.0;
    else
      accept(TokenKind::Op, "+");
    term(e, sign);
    while (true) {
      if (accept(TokenKind::Op, "+"))
        term(e, 1.0);
      else if (accept(TokenKind::Op, "-"))
        term(e, -1.0);
      else
        break;
    }
    return e;
  }

  void term(LinExpr& e, double sign) {
    Term t;
    t.coeff = sign;
    factor(t);
    while (accept(TokenKind::Op, "*")) factor(t);
    if (t.factors.empty())
      e.constant += t.coeff;
    else
      e.terms.push_back(std::move(t));
  }

  void factor(Term& t) {
    if (check(TokenKind::Int) || check(TokenKind::Real)) {
      t.coeff *= number_value(toks_[pos_++]);
      return;
    }
    if (!check(TokenKind::Ident)) fail("number or identifier");
    if (peek()->text == "E" && peek(1) && peek(1)->kind == TokenKind::LParen)
      fail("E() only as the outermost wrapper of the objective");
    if (t.factors.size() == 2) fail("linear term (at most two symbol factors)");
    SymbolRef ref{toks_[pos_++].text, 0};
    if (accept(TokenKind::LParen)) {
      if (!check(TokenKind::Int) || (peek()->text.front() != '-' && peek()->text != "0"))
        fail("recourse offset (-k)");
      const Token& off = toks_[pos_++];
      int v = 0;
      std::from_chars(off.text.data(), off.text.data() + off.text.size(), v);
      ref.recourse_depth = -v;
      expect(TokenKind::RParen, {}, "')'");
    }
    t.factors.push_back(std::move(ref));
  }
};

}  // namespace detail

inline MetaModel parse_model(const std::vector<Token>& tokens) {
  return detail::Parser(tokens).model();
}

inline MetaModel parse_model(std::string_view src) { return parse_model(tokenize(src)); }

// Expression-level entry points shared with the builder API.
inline LinExpr parse_objective_expr(std::string_view text) {
  auto toks = tokenize(text);
  return detail::Parser(toks).objective_expr();
}

inline ConstraintBody parse_constraint_body(std::string_view text) {
  auto toks = tokenize(text);
  return detail::Parser(toks).constraint_body();
}

inline StageSetExpr parse_stage_set(std::string_view text) {
  auto toks = tokenize(text);
  return detail::Parser(toks).stage_set_only();
}

// Shortest decimal text that reads back to exactly v, never in exponent form.
inline std::string format_number(double v) {
  char buf[512];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed);
  if (ec != std::errc()) return std::to_string(v);
  return std::string(buf, ptr);
}

inline std::string format_symbol(const SymbolRef& r) {
  if (r.recourse_depth == 0) return r.name;
  return r.name + "(-" + std::to_string(r.recourse_depth) + ")";
}

inline std::string format_expr(const LinExpr& e) {
  std::ostringstream os;
  bool first = true;
  auto sign = [&](double v) {
    if (first) {
      if (v < 0 || (v == 0 && std::signbit(v))) os << "-";
    } else {
      os << (v < 0 || (v == 0 && std::signbit(v)) ? " - " : " + ");
    }
    first = false;
  };
  for (const auto& t : e.terms) {
    sign(t.coeff);
    const double mag = std::fabs(t.coeff);
    bool need_star = false;
    if (mag != 1.0) {
      os << format_number(mag);
      need_star = true;
    }
    for (const auto& f : t.factors) {
      if (need_star) os << " * ";
      os << format_symbol(f);
      need_star = true;
    }
  }
  if (e.constant != 0.0 || e.terms.empty()) {
    sign(e.constant);
    os << format_number(std::fabs(e.constant));
  }
  std::string body = os.str();
  return e.expect ? "E(" + body + ")" : body;
}

inline std::string format_stage_set(const StageSetExpr& s) {
  auto atom = [](const StageAtom& a) { return a.is_horizon ? std::string("T") : std::to_string(a.value); };
  return s.hi ? atom(s.lo) + ".." + atom(*s.hi) : atom(s.lo);
}

// Canonical text: stage declarations, params, vars, objective, constraints.
inline std::string format_model(const MetaModel& m) {
  std::ostringstream os;
  auto join = [&](const std::vector<std::string>& names) {
    for (std::size_t i = 0; i < names.size(); ++i) os << (i ? ", " : "") << names[i];
  };
  auto section_break = [&] {
    if (os.tellp() > 0) os << "\n";
  };

  if (!m.stage_decls.empty()) {
    for (const auto& d : m.stage_decls) {
      os << to_string(d.kind) << " ";
      join(d.objects);
      os << ": " << format_stage_set(d.stages) << ";\n";
    }
  }
  if (!m.params.empty() || !m.vars.empty()) {
    section_break();
    if (!m.params.empty()) {
      std::vector<std::string> names;
      for (const auto& p : m.params) names.push_back(p.name);
      os << "param ";
      join(names);
      os << ";\n";
    }
    if (!m.vars.empty()) {
      os << "var ";
      for (std::size_t i = 0; i < m.vars.size(); ++i) {
        const auto& v = m.vars[i];
        os << (i ? ", " : "") << v.name;
        if (v.lb != -kInf) os << " >= " << (v.lb < 0 ? "-" : "") << format_number(std::fabs(v.lb));
        if (v.ub != kInf) os << " <= " << (v.ub < 0 ? "-" : "") << format_number(std::fabs(v.ub));
      }
      os << ";\n";
    }
  }
  if (m.objective || !m.constraints.empty()) {
    section_break();
    if (m.objective)
      os << "minimize " << m.objective->name << ": " << format_expr(m.objective->expr) << ";\n";
    for (const auto& c : m.constraints)
      os << "subject to " << c.name << ": " << format_expr(c.lhs) << " " << to_string(c.relop)
         << " " << format_expr(c.rhs) << ";\n";
  }
  return os.str();
}

}  // namespace msm
