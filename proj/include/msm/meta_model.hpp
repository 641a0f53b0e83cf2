#pragma once

#include <algorithm>
#include <initializer_list>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "msm/ast.hpp"
#include "msm/errors.hpp"
#include "msm/parser.hpp"

namespace msm {

// Resolved stages of an annotation; sorted and within [0, T]. Empty only for
// a constraint whose "k..T" range lies past a short horizon.
class StageSet {
 public:
  StageSet() = default;
  StageSet(int lo, int hi) {
    for (int s = lo; s <= hi; ++s) stages_.push_back(s);
  }

  const std::vector<int>& stages() const noexcept { return stages_; }
  int min() const { return stages_.front(); }
  int max() const { return stages_.back(); }
  bool contains(int s) const { return std::binary_search(stages_.begin(), stages_.end(), s); }
  std::size_t size() const noexcept { return stages_.size(); }
  auto begin() const { return stages_.begin(); }
  auto end() const { return stages_.end(); }

  bool operator==(const StageSet&) const = default;

 private:
  std::vector<int> stages_;
};

inline StageSet resolve_stage_set(const StageSetExpr& e, int horizon) {
  if (horizon < 0) throw StageError("horizon must be nonnegative, got " + std::to_string(horizon));
  auto value = [&](const StageAtom& a) { return a.is_horizon ? horizon : a.value; };
  const int lo = value(e.lo);
  const int hi = e.hi ? value(*e.hi) : lo;
  if (lo > hi)
    throw StageError("empty stage range " + format_stage_set(e) + " (" + std::to_string(lo) +
                     " > " + std::to_string(hi) + ")");
  if (lo < 0 || hi > horizon)
    throw StageError("stage range " + format_stage_set(e) + " leaves [0, " +
                     std::to_string(horizon) + "]");
  return StageSet(lo, hi);
}

struct Annotation {
  StageKind kind = StageKind::Stochastic;
  StageSet stages;
  bool operator==(const Annotation&) const = default;
};

enum class ObjectCategory { Param, Var, Objective, Constraint };

// A model whose annotations have been resolved against a horizon and checked.
// Only validate_model() constructs one.
class ValidatedModel {
 public:
  const MetaModel& model() const noexcept { return model_; }
  int horizon() const noexcept { return horizon_; }
  const std::map<std::string, Annotation>& resolved() const noexcept { return resolved_; }
  const std::vector<std::string>& implicit_params() const noexcept {
    return model_.implicit_params;
  }

  const Annotation* annotation(const std::string& name) const {
    auto it = resolved_.find(name);
    return it == resolved_.end() ? nullptr : &it->second;
  }
  const Annotation& annotation_of(const std::string& name) const { return resolved_.at(name); }

  bool is_var(const std::string& name) const { return model_.find_var(name) != nullptr; }
  bool is_deterministic_var(const std::string& name) const {
    auto* a = annotation(name);
    return is_var(name) && a && a->kind == StageKind::Deterministic;
  }

  bool operator==(const ValidatedModel&) const = default;

 private:
  friend ValidatedModel validate_model(const MetaModel& m, int horizon);
  ValidatedModel(MetaModel m, int horizon, std::map<std::string, Annotation> resolved)
      : model_(std::move(m)), horizon_(horizon), resolved_(std::move(resolved)) {}

  MetaModel model_;
  int horizon_ = 0;
  std::map<std::string, Annotation> resolved_;
};

// Checks every annotation and expression of m against the horizon and
// throws a ValidationError listing all findings, or returns the resolved model.
inline ValidatedModel validate_model(const MetaModel& m, int horizon) {
  std::vector<ValidationIssue> issues;
  auto report = [&](const std::string& object, std::string reason) {
    issues.push_back({object, std::move(reason)});
  };

  if (horizon < 0) {
    report("<model>", "horizon must be nonnegative, got " + std::to_string(horizon));
    throw ValidationError(std::move(issues));
  }

  std::map<std::string, ObjectCategory> category;
  auto declare = [&](const std::string& name, ObjectCategory c) {
    auto [it, fresh] = category.emplace(name, c);
    if (!fresh) report(name, "name declared more than once");
  };
  for (const auto& p : m.params) declare(p.name, ObjectCategory::Param);
  for (const auto& p : m.implicit_params) declare(p, ObjectCategory::Param);
  for (const auto& v : m.vars) declare(v.name, ObjectCategory::Var);
  if (m.objective) declare(m.objective->name, ObjectCategory::Objective);
  for (const auto& c : m.constraints) declare(c.name, ObjectCategory::Constraint);

  if (!m.objective) report("<model>", "model has no objective");

  for (const auto& v : m.vars)
    if (v.lb > v.ub) report(v.name, "lower bound exceeds upper bound");

  std::map<std::string, Annotation> resolved;
  for (const auto& d : m.stage_decls) {
    StageSet stages;
    std::string stage_problem;
    try {
      stages = resolve_stage_set(d.stages, horizon);
    } catch (const StageError& e) {
      stage_problem = e.what();
    }
    // "k..T" with k > T: the horizon is too short for the object to occur.
    // Constraints simply have no instances then; anything else is an error.
    const bool short_horizon = !stage_problem.empty() && d.stages.hi && d.stages.hi->is_horizon &&
                               !d.stages.lo.is_horizon && d.stages.lo.value > horizon;
    for (const auto& name : d.objects) {
      if (!category.contains(name)) {
        report(name, "annotation references unknown object");
        continue;
      }
      if (short_horizon && category.at(name) == ObjectCategory::Constraint) {
        if (!resolved.emplace(name, Annotation{d.kind, StageSet{}}).second)
          report(name, "multiple stage annotations");
        continue;
      }
      if (!stage_problem.empty()) {
        report(name, stage_problem);
        continue;
      }
      if (!resolved.emplace(name, Annotation{d.kind, stages}).second)
        report(name, "multiple stage annotations");
    }
  }

  auto annotated = [&](const std::string& name) { return resolved.contains(name); };
  for (const auto& v : m.vars)
    if (!annotated(v.name)) report(v.name, "missing stage annotation");
  if (m.objective && !annotated(m.objective->name))
    report(m.objective->name, "missing stage annotation");
  for (const auto& c : m.constraints)
    if (!annotated(c.name)) report(c.name, "missing stage annotation");

  auto check_expr = [&](const std::string& owner, const LinExpr& e) {
    const Annotation* own = resolved.contains(owner) ? &resolved.at(owner) : nullptr;
    for (const auto& t : e.terms) {
      int var_factors = 0;
      for (const auto& f : t.factors) {
        const bool is_var = m.find_var(f.name) != nullptr;
        if (is_var) ++var_factors;
        if (f.recourse_depth > 0 && !is_var) {
          report(owner, "recourse on parameter '" + f.name + "'");
          continue;
        }
        if (!own || own->stages.size() == 0) continue;
        if (f.recourse_depth > 0 && own->stages.min() - f.recourse_depth < 0)
          report(owner, "recourse depth exceeds root: " + format_symbol(f) + " at stage " +
                            std::to_string(own->stages.min()));
        if (!is_var && resolved.contains(f.name)) {
          const auto& param = resolved.at(f.name);
          for (int s : own->stages)
            if (!param.stages.contains(s)) {
              report(owner, "parameter '" + f.name + "' is not defined at stage " +
                                std::to_string(s));
              break;
            }
        }
      }
      if (var_factors > 1) {
        std::string text;
        for (const auto& f : t.factors) text += (text.empty() ? "" : " * ") + format_symbol(f);
        report(owner, "bilinear term " + text);
      }
    }
  };
  if (m.objective) check_expr(m.objective->name, m.objective->expr);
  for (const auto& c : m.constraints) {
    check_expr(c.name, c.lhs);
    check_expr(c.name, c.rhs);
  }

  if (!issues.empty()) throw ValidationError(std::move(issues));
  return ValidatedModel(m, horizon, std::move(resolved));
}

struct VarBounds {
  double lb = -kInf;
  double ub = kInf;
};

// Programmatic construction mirroring the statements of the model language:
//
//   ModelBuilder b;
//   b.parameter("a").variable("x", {.lb = 0}).minimize("obj", "E(V * x)");
//   b.stochastic("0..T", {"x", "obj"});
//   MetaModel m = b.build();
//
// Expression and stage-set texts go through the same parser as model files.
class ModelBuilder {
 public:
  ModelBuilder& parameter(std::string name) {
    claim(params_, name);
    m_.params.push_back({std::move(name)});
    return *this;
  }

  ModelBuilder& variable(std::string name, VarBounds bounds = {}) {
    claim(vars_, name);
    m_.vars.push_back({std::move(name), bounds.lb, bounds.ub});
    return *this;
  }

  ModelBuilder& minimize(std::string name, std::string_view expr) {
    if (m_.objective) throw DuplicateName(m_.objective->name);
    LinExpr e = parse_objective_expr(expr);
    claim(rows_, name);
    m_.objective = Objective{std::move(name), std::move(e)};
    return *this;
  }

  ModelBuilder& subject_to(std::string name, std::string_view relation) {
    ConstraintBody b = parse_constraint_body(relation);
    claim(rows_, name);
    m_.constraints.push_back({std::move(name), std::move(b.lhs), b.relop, std::move(b.rhs)});
    return *this;
  }

  ModelBuilder& deterministic(std::string_view stages, std::vector<std::string> objects) {
    return annotate(StageKind::Deterministic, stages, std::move(objects));
  }

  ModelBuilder& stochastic(std::string_view stages, std::vector<std::string> objects) {
    return annotate(StageKind::Stochastic, stages, std::move(objects));
  }

  MetaModel build() const {
    MetaModel out = m_;
    refresh_implicit_params(out);
    return out;
  }

 private:
  static void claim(std::set<std::string>& taken, const std::string& name) {
    if (!taken.insert(name).second) throw DuplicateName(name);
  }

  ModelBuilder& annotate(StageKind kind, std::string_view stages, std::vector<std::string> objects) {
    StageSetExpr expr = parse_stage_set(stages);
    m_.stage_decls.push_back({kind, std::move(objects), std::move(expr)});
    return *this;
  }

  MetaModel m_;
  std::set<std::string> params_, vars_, rows_;
};

}  // namespace msm
