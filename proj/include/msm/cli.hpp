#pragma once

// Command-line driver shared by the msmc tool and the tests.
//
//   msmc parse MODEL
//   msmc validate --model MODEL --tree TREE [--horizon T]
//   msmc expand   --model MODEL --tree TREE --out FILE.lp [--form node|scenario] [--horizon T]
//   msmc solve    --model MODEL --tree TREE [--format text|structured] [--form node|scenario] [--horizon T]
//
// Exit codes: 0 success / OPTIMAL, 1 INFEASIBLE or UNBOUNDED, 2 usage or input error.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "msm/det_equiv.hpp"
#include "msm/errors.hpp"
#include "msm/lp.hpp"
#include "msm/meta_model.hpp"
#include "msm/parser.hpp"
#include "msm/report.hpp"
#include "msm/scenario_tree.hpp"

namespace msm::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitNotOptimal = 1;
inline constexpr int kExitInput = 2;

struct Failure {
  std::string message;
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{path + ": cannot open file"};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline MetaModel load_model(const std::string& path) {
  const std::string src = read_file(path);
  try {
    return parse_model(src);
  } catch (const LexError& e) {
    throw Failure{path + ":" + std::to_string(e.line) + ":" + std::to_string(e.col) +
                  ": error: unexpected character '" + e.snippet + "'"};
  } catch (const ParseError& e) {
    throw Failure{path + ":" + std::to_string(e.line) + ":" + std::to_string(e.col) +
                  ": error: expected " + e.expected + ", found " + e.found};
  }
}

inline ScenarioTree load_tree_file(const std::string& path) {
  const std::string src = read_file(path);
  try {
    return load_tree(src);
  } catch (const TreeError& e) {
    std::string msg = path + ": error: invalid scenario tree";
    for (const auto& i : e.issues())
      msg += "\n  " + (i.node >= 0 ? "node " + std::to_string(i.node) + ": " : "") + i.reason;
    throw Failure{msg};
  } catch (const FormatError& e) {
    throw Failure{path + ": error: " + e.what()};
  }
}

inline ValidatedModel validate_file(const MetaModel& m, const std::string& path, int horizon) {
  try {
    return validate_model(m, horizon);
  } catch (const ValidationError& e) {
    std::string msg = path + ": error: model is invalid at T=" + std::to_string(horizon);
    for (const auto& i : e.issues()) msg += "\n  " + i.object + ": " + i.reason;
    throw Failure{msg};
  }
}

struct Inputs {
  MetaModel model;
  ScenarioTree tree;
  std::optional<ValidatedModel> validated;
};

inline Inputs load_inputs(const std::string& model_path, const std::string& tree_path,
                          std::optional<int> horizon) {
  MetaModel m = load_model(model_path);
  ScenarioTree t = load_tree_file(tree_path);
  if (horizon && *horizon != t.horizon())
    throw Failure{"error: horizon mismatch: --horizon " + std::to_string(*horizon) + " but " +
                  tree_path + " has T=" + std::to_string(t.horizon())};
  ValidatedModel vm = validate_file(m, model_path, t.horizon());
  return {std::move(m), std::move(t), std::move(vm)};
}

inline ExpandedModel expand_inputs(const Inputs& in, ExpansionForm form) {
  try {
    return expand(*in.validated, in.tree, form);
  } catch (const ExpansionError& e) {
    throw Failure{std::string("error: expansion failed: ") + e.what()};
  }
}

inline int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-stage stochastic model compiler and solver", "msmc"};
  app.require_subcommand(1);

  std::string model_path, tree_path, out_path, form_name = "node", format = "text";
  std::optional<int> horizon;

  auto* parse_cmd = app.add_subcommand("parse", "Print a model file in canonical form");
  parse_cmd->add_option("model", model_path, "Model file (.msm)")->required();

  auto add_inputs = [&](CLI::App* cmd) {
    cmd->add_option("--model", model_path, "Model file (.msm)")->required();
    cmd->add_option("--tree", tree_path, "Scenario tree file")->required();
    cmd->add_option("--horizon", horizon, "Expected horizon T; must match the tree");
  };
  auto add_form = [&](CLI::App* cmd) {
    cmd->add_option("--form", form_name, "Expansion layout")
        ->check(CLI::IsMember({"node", "scenario"}));
  };

  auto* validate_cmd = app.add_subcommand("validate", "Check a model against a scenario tree");
  add_inputs(validate_cmd);

  auto* expand_cmd = app.add_subcommand("expand", "Write the deterministic equivalent as an LP file");
  add_inputs(expand_cmd);
  add_form(expand_cmd);
  expand_cmd->add_option("--out", out_path, "Output LP file")->required();

  auto* solve_cmd = app.add_subcommand("solve", "Solve the deterministic equivalent");
  add_inputs(solve_cmd);
  add_form(solve_cmd);
  solve_cmd->add_option("--format", format, "Report format")
      ->check(CLI::IsMember({"text", "structured"}));

  std::vector<std::string> args(argv.rbegin(), argv.rend());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }
  const ExpansionForm form = form_name == "scenario" ? ExpansionForm::Scenario : ExpansionForm::Node;

  try {
    if (parse_cmd->parsed()) {
      out << format_model(load_model(model_path));
      return kExitOk;
    }

    if (validate_cmd->parsed()) {
      Inputs in = load_inputs(model_path, tree_path, horizon);
      expand_inputs(in, ExpansionForm::Node);
      out << model_path << ": ok at T=" << in.tree.horizon() << " (" << in.model.vars.size()
          << " variables, " << in.model.constraints.size() << " constraints, "
          << in.model.implicit_params.size() << " implicit parameters)\n";
      out << tree_path << ": ok (" << in.tree.size() << " nodes, " << in.tree.leaves().size()
          << " scenarios)\n";
      return kExitOk;
    }

    if (expand_cmd->parsed()) {
      Inputs in = load_inputs(model_path, tree_path, horizon);
      const ExpandedModel em = expand_inputs(in, form);
      std::ofstream f(out_path, std::ios::binary);
      if (!f) throw Failure{out_path + ": cannot write file"};
      f << emit_lp_file(em);
      out << "wrote " << out_path << ": " << em.lp.n_cols << " columns, " << em.lp.n_rows()
          << " rows\n";
      return kExitOk;
    }

    // solve
    RunReport report;
    int code = kExitOk;
    try {
      Inputs in = load_inputs(model_path, tree_path, horizon);
      const ExpandedModel em = expand_inputs(in, form);
      const LpSolution sol = solve(em.lp);
      report = make_report(em, sol);
      code = sol.status == LpStatus::Optimal ? kExitOk : kExitNotOptimal;
    } catch (const Failure& f) {
      report.status = "ERROR";
      report.diagnostics.push_back(f.message);
      code = kExitInput;
      err << f.message << "\n";
    } catch (const IterationLimit& e) {
      report.status = "ERROR";
      report.diagnostics.push_back(e.what());
      code = kExitInput;
      err << "error: " << e.what() << "\n";
    }
    if (format == "structured")
      out << to_json(report).dump(2) << "\n";
    else if (code != kExitInput)
      out << to_text(report);
    return code;
  } catch (const Failure& f) {
    err << f.message << "\n";
    return kExitInput;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  }
}

}  // namespace msm::cli
