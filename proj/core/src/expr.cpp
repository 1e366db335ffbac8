#include "tipcast/expr.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <functional>
#include <numbers>

#include "tipcast/error.hpp"

namespace tipcast {

namespace {

constexpr std::array<FuncInfo, 12> kFunctions{{
    {Func::Sin, "sin", 1, 0, 0},
    {Func::Cos, "cos", 1, 0, 0},
    {Func::Tan, "tan", 1, 0, 0},
    {Func::Atan, "arctan", 1, 0, 0},
    {Func::Sqrt, "sqrt", 1, 0, 0},
    {Func::Exp, "exp", 1, 0, 0},
    {Func::Log, "log", 1, 0, 0},
    {Func::SplineBump, "splinebump", 1, 2, 2},
    {Func::SplineStep, "splinestep", 1, 2, 2},
    {Func::ImpulseSeries, "impulseseries", 1, 5, 6},
    {Func::PeriodicSeries, "periodicseries", 1, 4, 4},
    {Func::Shepherd, "shepherd", 2, 3, 3},
}};

NodePtr make_number(double v) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::Number;
  n->number = v;
  return n;
}

NodePtr make_leaf(NodeKind kind, std::string name = {}) {
  auto n = std::make_shared<Node>();
  n->kind = kind;
  n->name = std::move(name);
  return n;
}

NodePtr make_unary(NodeKind kind, NodePtr a) {
  auto n = std::make_shared<Node>();
  n->kind = kind;
  n->args = {std::move(a)};
  return n;
}

NodePtr make_binary(NodeKind kind, NodePtr a, NodePtr b) {
  auto n = std::make_shared<Node>();
  n->kind = kind;
  n->args = {std::move(a), std::move(b)};
  return n;
}

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  NodePtr parse() {
    skip_ws();
    if (pos_ == text_.size()) throw ParseError("empty expression", pos_);
    NodePtr e = expr();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected character '" + std::string(1, text_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, pos_); }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }

  NodePtr expr() {
    NodePtr lhs = term();
    for (;;) {
      if (accept('+')) {
        lhs = make_binary(NodeKind::Add, lhs, term());
      } else if (accept('-')) {
        lhs = make_binary(NodeKind::Sub, lhs, term());
      } else {
        return lhs;
      }
    }
  }

  NodePtr term() {
    NodePtr lhs = unary();
    for (;;) {
      if (accept('*')) {
        lhs = make_binary(NodeKind::Mul, lhs, unary());
      } else if (accept('/')) {
        lhs = make_binary(NodeKind::Div, lhs, unary());
      } else {
        return lhs;
      }
    }
  }

  NodePtr unary() {
    if (accept('-')) return make_unary(NodeKind::Neg, unary());
    if (accept('+')) return unary();
    return power();
  }

  NodePtr power() {
    NodePtr base = primary();
    if (!accept('^')) return base;
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::Pow;
    n->exponent = integer_exponent();
    n->args = {std::move(base)};
    return n;
  }

  int integer_exponent() {
    skip_ws();
    const bool paren = accept('(');
    int sign = 1;
    if (accept('-')) {
      sign = -1;
    } else {
      accept('+');
    }
    skip_ws();
    const std::size_t start = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (start == pos_) fail("exponent must be an integer literal");
    if (pos_ < text_.size() && (text_[pos_] == '.' || text_[pos_] == 'e' || text_[pos_] == 'E')) {
      fail("exponent must be an integer literal");
    }
    int value = 0;
    const auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, value);
    if (ec != std::errc{} || value > 64) {
      pos_ = start;
      fail("exponent out of range");
    }
    if (paren) expect(')');
    return sign * value;
  }

  NodePtr primary() {
    skip_ws();
    if (pos_ == text_.size()) fail("unexpected end of expression");
    const char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (accept('(')) {
      NodePtr e = expr();
      expect(')');
      return e;
    }
    if (is_ident_start(c)) return identifier();
    fail(std::string("unexpected character '") + c + "'");
  }

  NodePtr number() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.')) {
      ++pos_;
    }
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < text_.size() && (text_[p] == '+' || text_[p] == '-')) ++p;
      if (p < text_.size() && std::isdigit(static_cast<unsigned char>(text_[p]))) {
        pos_ = p;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      }
    }
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, value);
    if (ec != std::errc{} || ptr != text_.data() + pos_) {
      pos_ = start;
      fail("malformed number");
    }
    return make_number(value);
  }

  NodePtr identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && is_ident_char(text_[pos_])) ++pos_;
    const std::string_view name = text_.substr(start, pos_ - start);
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == '(') {
      const FuncInfo* info = find_function(name);
      if (info == nullptr) {
        pos_ = start;
        fail("unknown function '" + std::string(name) + "'");
      }
      ++pos_;
      return call(*info, start);
    }
    if (name == "t") return make_leaf(NodeKind::Time);
    if (name == "x") return make_leaf(NodeKind::State);
    if (name == "pi") return make_number(std::numbers::pi);
    if (find_function(name) != nullptr) {
      pos_ = start;
      fail("function '" + std::string(name) + "' used without arguments");
    }
    return make_leaf(NodeKind::Param, std::string(name));
  }

  NodePtr call(const FuncInfo& info, std::size_t name_offset) {
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::Call;
    n->func = info.func;
    n->args.push_back(expr());
    while (accept(',')) n->args.push_back(expr());
    if (accept(';')) {
      n->shape.push_back(expr());
      while (accept(',')) n->shape.push_back(expr());
    }
    expect(')');
    const auto positional = static_cast<int>(n->args.size());
    const auto shape = static_cast<int>(n->shape.size());
    if (positional != info.positional || shape < info.min_params || shape > info.max_params) {
      throw ParseError("arity mismatch in call to '" + std::string(info.name) + "': expected " +
                           std::to_string(info.positional) + " argument(s) and " +
                           std::to_string(info.min_params) +
                           (info.max_params != info.min_params
                                ? "-" + std::to_string(info.max_params)
                                : std::string()) +
                           " parameter(s), got " + std::to_string(positional) + " and " +
                           std::to_string(shape),
                       name_offset);
    }
    return n;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

// Printing precedence: higher binds tighter.
int precedence(const Node& n) {
  switch (n.kind) {
    case NodeKind::Add:
    case NodeKind::Sub: return 1;
    case NodeKind::Mul:
    case NodeKind::Div: return 2;
    case NodeKind::Neg: return 3;
    case NodeKind::Pow: return 4;
    default: return 5;
  }
}

std::string format_number(double v) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

void print(const Node& n, std::string& out);

void print_child(const Node& child, bool parens, std::string& out) {
  if (parens) out += '(';
  print(child, out);
  if (parens) out += ')';
}

void print(const Node& n, std::string& out) {
  switch (n.kind) {
    case NodeKind::Number: out += format_number(n.number); return;
    case NodeKind::Time: out += 't'; return;
    case NodeKind::State: out += 'x'; return;
    case NodeKind::Param: out += n.name; return;
    case NodeKind::Neg:
      out += '-';
      print_child(*n.args[0], precedence(*n.args[0]) < 3, out);
      return;
    case NodeKind::Pow:
      print_child(*n.args[0], precedence(*n.args[0]) < 5, out);
      out += '^';
      if (n.exponent < 0) {
        out += '(' + std::to_string(n.exponent) + ')';
      } else {
        out += std::to_string(n.exponent);
      }
      return;
    case NodeKind::Add:
    case NodeKind::Sub:
    case NodeKind::Mul:
    case NodeKind::Div: {
      const int p = precedence(n);
      print_child(*n.args[0], precedence(*n.args[0]) < p, out);
      switch (n.kind) {
        case NodeKind::Add: out += " + "; break;
        case NodeKind::Sub: out += " - "; break;
        case NodeKind::Mul: out += '*'; break;
        default: out += '/'; break;
      }
      // Left-associative operators need parentheses on an equal-precedence
      // right operand; unary minus on the right is always parenthesised.
      const Node& rhs = *n.args[1];
      print_child(rhs, precedence(rhs) <= p || rhs.kind == NodeKind::Neg, out);
      return;
    }
    case NodeKind::Call: {
      out += function_info(n.func).name;
      out += '(';
      for (std::size_t i = 0; i < n.args.size(); ++i) {
        if (i > 0) out += ", ";
        print(*n.args[i], out);
      }
      if (!n.shape.empty()) {
        out += "; ";
        for (std::size_t i = 0; i < n.shape.size(); ++i) {
          if (i > 0) out += ", ";
          print(*n.shape[i], out);
        }
      }
      out += ')';
      return;
    }
  }
}

void visit(const Node& n, const std::function<void(const Node&)>& f) {
  f(n);
  for (const auto& a : n.args) visit(*a, f);
  for (const auto& a : n.shape) visit(*a, f);
}

int depth_of(const Node& n) {
  int d = -1;
  for (const auto& a : n.args) d = std::max(d, depth_of(*a));
  for (const auto& a : n.shape) d = std::max(d, depth_of(*a));
  return d + 1;
}

}  // namespace

const FuncInfo* find_function(std::string_view name) {
  if (name == "atan") name = "arctan";
  for (const auto& f : kFunctions) {
    if (f.name == name) return &f;
  }
  return nullptr;
}

const FuncInfo& function_info(Func func) {
  for (const auto& f : kFunctions) {
    if (f.func == func) return f;
  }
  return kFunctions.front();
}

FieldExpr::FieldExpr(NodePtr root) : root_(std::move(root)) {}

FieldExpr FieldExpr::parse(std::string_view text) { return FieldExpr(Parser(text).parse()); }

std::set<std::string> FieldExpr::parameters() const {
  std::set<std::string> names;
  visit(*root_, [&](const Node& n) {
    if (n.kind == NodeKind::Param) names.insert(n.name);
  });
  return names;
}

bool FieldExpr::depends_on_time() const {
  bool found = false;
  visit(*root_, [&](const Node& n) { found = found || n.kind == NodeKind::Time; });
  return found;
}

bool FieldExpr::depends_on_state() const {
  bool found = false;
  visit(*root_, [&](const Node& n) { found = found || n.kind == NodeKind::State; });
  return found;
}

int FieldExpr::depth() const { return depth_of(*root_); }

std::string FieldExpr::to_string() const { return tipcast::to_string(*root_); }

std::string to_string(const Node& node) {
  std::string out;
  print(node, out);
  return out;
}

}  // namespace tipcast
