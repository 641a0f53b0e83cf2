#pragma once

// Exception types raised by the modeling, tree, expansion, and LP layers.
// Errors that are naturally reported in bulk (validation, tree structure)
// carry the full list of findings rather than only the first one.

#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace msm {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct LexError : Error {
  int line;
  int col;
  std::string snippet;

  LexError(int line_, int col_, std::string snippet_)
      : Error("unexpected character '" + snippet_ + "' at " + std::to_string(line_) + ":" +
              std::to_string(col_)),
        line(line_),
        col(col_),
        snippet(std::move(snippet_)) {}
};

struct ParseError : Error {
  int line;
  int col;
  std::string expected;
  std::string found;

  ParseError(int line_, int col_, std::string expected_, std::string found_)
      : Error("expected " + expected_ + ", found " + found_ + " at " + std::to_string(line_) +
              ":" + std::to_string(col_)),
        line(line_),
        col(col_),
        expected(std::move(expected_)),
        found(std::move(found_)) {}
};

struct StageError : Error {
  using Error::Error;
};

struct DuplicateName : Error {
  std::string name;
  explicit DuplicateName(std::string name_)
      : Error("duplicate name '" + name_ + "'"), name(std::move(name_)) {}
};

struct ValidationIssue {
  std::string object;
  std::string reason;
  bool operator==(const ValidationIssue&) const = default;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<ValidationIssue> issues)
      : Error(summarize(issues)), issues_(std::move(issues)) {}

  const std::vector<ValidationIssue>& issues() const noexcept { return issues_; }

 private:
  static std::string summarize(const std::vector<ValidationIssue>& issues) {
    std::ostringstream os;
    os << issues.size() << " validation error(s)";
    for (const auto& i : issues) os << "\n  " << i.object << ": " << i.reason;
    return os.str();
  }

  std::vector<ValidationIssue> issues_;
};

struct FormatError : Error {
  using Error::Error;
};

struct TreeIssue {
  int node;  // -1 when the finding concerns the tree as a whole
  std::string reason;
  bool operator==(const TreeIssue&) const = default;
};

class TreeError : public Error {
 public:
  explicit TreeError(std::vector<TreeIssue> issues)
      : Error(summarize(issues)), issues_(std::move(issues)) {}

  const std::vector<TreeIssue>& issues() const noexcept { return issues_; }

 private:
  static std::string summarize(const std::vector<TreeIssue>& issues) {
    std::ostringstream os;
    os << issues.size() << " tree error(s)";
    for (const auto& i : issues) {
      os << "\n  ";
      if (i.node >= 0) os << "node " << i.node << ": ";
      os << i.reason;
    }
    return os.str();
  }

  std::vector<TreeIssue> issues_;
};

struct DepthError : Error {
  using Error::Error;
};

struct ExpansionError : Error {
  using Error::Error;
};

struct MissingParam : ExpansionError {
  std::string name;
  int node;
  MissingParam(std::string name_, int node_, const std::string& where)
      : ExpansionError("parameter '" + name_ + "' has no value at " + where),
        name(std::move(name_)),
        node(node_) {}
};

struct RecourseError : ExpansionError {
  using ExpansionError::ExpansionError;
};

struct IterationLimit : Error {
  using Error::Error;
};

struct DimensionError : Error {
  using Error::Error;
};

struct OracleError : Error {
  using Error::Error;
};

struct SizeError : Error {
  using Error::Error;
};

}  // namespace msm
