#pragma once

// Right-hand-side expression language.
//
// Expressions are infix formulas in the time `t`, the state `x` and free
// parameters (any other identifier). The grammar is documented in
// docs/grammar.md; briefly:
//
//   expr    := term { ('+' | '-') term }
//   term    := unary { ('*' | '/') unary }
//   unary   := ('-' | '+') unary | power
//   power   := primary [ '^' integer ]
//   primary := number | identifier | call | '(' expr ')'
//   call    := name '(' expr { ',' expr } [ ';' expr { ',' expr } ] ')'
//
// Arguments after ';' are shape parameters of the transition primitives and
// must not depend on the state.

#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace tipcast {

enum class NodeKind { Number, Time, State, Param, Neg, Add, Sub, Mul, Div, Pow, Call };

enum class Func {
  Sin,
  Cos,
  Tan,
  Atan,
  Sqrt,
  Exp,
  Log,
  SplineBump,
  SplineStep,
  ImpulseSeries,
  PeriodicSeries,
  Shepherd,
};

struct FuncInfo {
  Func func;
  std::string_view name;
  int positional;
  int min_params;
  int max_params;
};

/// Looks up a callable by name (`atan` is accepted as an alias of
/// `arctan`). Returns nullptr for unknown names.
const FuncInfo* find_function(std::string_view name);
const FuncInfo& function_info(Func func);

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
  NodeKind kind = NodeKind::Number;
  double number = 0.0;        // Number
  std::string name;           // Param
  int exponent = 0;           // Pow
  Func func = Func::Sin;      // Call
  std::vector<NodePtr> args;  // operands, or positional call arguments
  std::vector<NodePtr> shape; // call parameters after ';'
};

/// Immutable parsed expression.
class FieldExpr {
 public:
  explicit FieldExpr(NodePtr root);

  /// Parses `text`; throws ParseError with the byte offset of the problem.
  static FieldExpr parse(std::string_view text);

  const Node& root() const { return *root_; }
  const NodePtr& root_ptr() const { return root_; }

  /// Names of the free parameters.
  std::set<std::string> parameters() const;
  bool depends_on_time() const;
  bool depends_on_state() const;
  /// Height of the tree; leaves have depth 0.
  int depth() const;

  /// Canonical text; parse(to_string()) reproduces the same tree.
  std::string to_string() const;

 private:
  NodePtr root_;
};

inline FieldExpr parse(std::string_view text) { return FieldExpr::parse(text); }

std::string to_string(const Node& node);

}  // namespace tipcast
