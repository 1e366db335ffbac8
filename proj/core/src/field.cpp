#include "tipcast/field.hpp"

#include <array>
#include <cmath>
#include <sstream>
#include <variant>
#include <vector>

#include "tipcast/error.hpp"
#include "tipcast/transitions.hpp"

namespace tipcast {

namespace detail {

enum class Op : unsigned char {
  Const,
  Time,
  State,
  Neg,
  Add,
  Sub,
  Mul,
  Div,
  Pow,
  Sin,
  Cos,
  Tan,
  Atan,
  Sqrt,
  Exp,
  Log,
  Bump,
  Step,
  Series,
  Periodic,
  Shepherd,
};

struct Instr {
  Op op;
  int arg = 0;  // exponent for Pow, primitive index for calls
  double value = 0.0;
};

using Primitive = std::variant<transitions::SplineBump, transitions::SplineStep,
                               transitions::ImpulseSeries, transitions::ShepherdFactor>;

struct Program {
  std::vector<Instr> code;
  std::vector<Primitive> primitives;
  int stack_depth = 0;
};

}  // namespace detail

namespace {

using detail::Instr;
using detail::Op;
using detail::Program;

constexpr int kInlineStack = 48;

[[noreturn]] void domain_error(const char* what, double t, double x) {
  std::ostringstream os;
  os.precision(17);
  os << "domain error: " << what << " at (t=" << t << ", x=" << x << ")";
  throw FieldError(os.str());
}

bool depends_on_tx(const Node& n) {
  if (n.kind == NodeKind::Time || n.kind == NodeKind::State) return true;
  for (const auto& a : n.args) {
    if (depends_on_tx(*a)) return true;
  }
  return false;
}

bool depends_on_state(const Node& n) {
  if (n.kind == NodeKind::State) return true;
  for (const auto& a : n.args) {
    if (depends_on_state(*a)) return true;
  }
  for (const auto& a : n.shape) {
    if (depends_on_state(*a)) return true;
  }
  return false;
}

class Compiler {
 public:
  explicit Compiler(const ParameterMap& bindings) : bindings_(bindings) {}

  Program compile(const Node& root) {
    emit(root);
    return std::move(program_);
  }

 private:
  void push(Instr instr, int stack_delta) {
    program_.code.push_back(instr);
    depth_ += stack_delta;
    program_.stack_depth = std::max(program_.stack_depth, depth_);
  }

  double constant(const Node& n) {
    // A node free of t and x: evaluate once with a throwaway program.
    Compiler sub(bindings_);
    return evaluate_constant(sub.compile_dynamic(n));
  }

  Program compile_dynamic(const Node& n) {
    emit_dynamic(n);
    return std::move(program_);
  }

  static double evaluate_constant(const Program& p);

  void emit(const Node& n) {
    if (n.kind != NodeKind::Number && !depends_on_tx(n)) {
      push({Op::Const, 0, constant(n)}, 1);
      return;
    }
    emit_dynamic(n);
  }

  void emit_dynamic(const Node& n) {
    switch (n.kind) {
      case NodeKind::Number: push({Op::Const, 0, n.number}, 1); return;
      case NodeKind::Time: push({Op::Time}, 1); return;
      case NodeKind::State: push({Op::State}, 1); return;
      case NodeKind::Param: {
        const auto it = bindings_.find(n.name);
        if (it == bindings_.end()) throw FieldError("unbound parameter '" + n.name + "'");
        push({Op::Const, 0, it->second}, 1);
        return;
      }
      case NodeKind::Neg:
        emit(*n.args[0]);
        push({Op::Neg}, 0);
        return;
      case NodeKind::Pow:
        emit(*n.args[0]);
        push({Op::Pow, n.exponent}, 0);
        return;
      case NodeKind::Add:
      case NodeKind::Sub:
      case NodeKind::Mul:
      case NodeKind::Div: {
        emit(*n.args[0]);
        emit(*n.args[1]);
        const Op op = n.kind == NodeKind::Add   ? Op::Add
                      : n.kind == NodeKind::Sub ? Op::Sub
                      : n.kind == NodeKind::Mul ? Op::Mul
                                                : Op::Div;
        push({op}, -1);
        return;
      }
      case NodeKind::Call: emit_call(n); return;
    }
  }

  void emit_call(const Node& n) {
    std::vector<double> shape;
    for (const auto& s : n.shape) {
      if (depends_on_state(*s)) {
        throw FieldError(std::string("shape parameters of '") +
                         std::string(function_info(n.func).name) + "' must not depend on x");
      }
      if (depends_on_tx(*s)) {
        throw FieldError(std::string("shape parameters of '") +
                         std::string(function_info(n.func).name) + "' must be constant");
      }
      shape.push_back(constant(*s));
    }
    for (const auto& a : n.args) emit(*a);
    const int pops = static_cast<int>(n.args.size()) - 1;
    const int index = static_cast<int>(program_.primitives.size());
    switch (n.func) {
      case Func::Sin: push({Op::Sin}, 0); return;
      case Func::Cos: push({Op::Cos}, 0); return;
      case Func::Tan: push({Op::Tan}, 0); return;
      case Func::Atan: push({Op::Atan}, 0); return;
      case Func::Sqrt: push({Op::Sqrt}, 0); return;
      case Func::Exp: push({Op::Exp}, 0); return;
      case Func::Log: push({Op::Log}, 0); return;
      case Func::SplineBump:
        program_.primitives.emplace_back(transitions::SplineBump(shape[0], shape[1]));
        push({Op::Bump, index}, -pops);
        return;
      case Func::SplineStep:
        program_.primitives.emplace_back(transitions::SplineStep(shape[0], shape[1]));
        push({Op::Step, index}, -pops);
        return;
      case Func::ImpulseSeries:
      case Func::PeriodicSeries: {
        transitions::ImpulseSeries::Params p;
        p.rho = shape[0];
        p.L1 = shape[1];
        p.L2 = shape[2];
        p.d_plus = shape[3];
        if (n.func == Func::ImpulseSeries) {
          p.d = shape[4];
          if (shape.size() > 5) p.decay_scale = shape[5];
        }
        program_.primitives.emplace_back(transitions::ImpulseSeries(p));
        push({n.func == Func::ImpulseSeries ? Op::Series : Op::Periodic, index}, -pops);
        return;
      }
      case Func::Shepherd:
        program_.primitives.emplace_back(transitions::ShepherdFactor(shape[0], shape[1], shape[2]));
        push({Op::Shepherd, index}, -pops);
        return;
    }
  }

  const ParameterMap& bindings_;
  Program program_;
  int depth_ = 0;
};

template <typename T>
T unary_primitive(const detail::Primitive& prim, Op op, const T& u) {
  if constexpr (std::is_same_v<T, double>) {
    switch (op) {
      case Op::Bump: return std::get<transitions::SplineBump>(prim)(u);
      case Op::Step: return std::get<transitions::SplineStep>(prim)(u);
      case Op::Series: return std::get<transitions::ImpulseSeries>(prim)(u);
      default: return std::get<transitions::ImpulseSeries>(prim).periodic(u);
    }
  } else {
    Jet b;
    switch (op) {
      case Op::Bump: b = std::get<transitions::SplineBump>(prim).jet(u.v); break;
      case Op::Step: b = std::get<transitions::SplineStep>(prim).jet(u.v); break;
      case Op::Series: b = std::get<transitions::ImpulseSeries>(prim).jet(u.v); break;
      default: b = std::get<transitions::ImpulseSeries>(prim).periodic_jet(u.v); break;
    }
    return compose(u, b.v, b.d, b.dd);
  }
}

inline double value_of(double v) { return v; }
inline double value_of(const Jet& v) { return v.v; }

template <typename T>
T run(const Program& p, double t, double x, T* stack) {
  int sp = -1;
  for (const Instr& in : p.code) {
    switch (in.op) {
      case Op::Const: stack[++sp] = T{in.value}; break;
      case Op::Time: stack[++sp] = T{t}; break;
      case Op::State:
        if constexpr (std::is_same_v<T, double>) {
          stack[++sp] = x;
        } else {
          stack[++sp] = Jet::variable(x);
        }
        break;
      case Op::Neg: stack[sp] = -stack[sp]; break;
      case Op::Add:
        stack[sp - 1] = stack[sp - 1] + stack[sp];
        --sp;
        break;
      case Op::Sub:
        stack[sp - 1] = stack[sp - 1] - stack[sp];
        --sp;
        break;
      case Op::Mul:
        stack[sp - 1] = stack[sp - 1] * stack[sp];
        --sp;
        break;
      case Op::Div:
        if (value_of(stack[sp]) == 0.0) domain_error("division by zero", t, x);
        stack[sp - 1] = stack[sp - 1] / stack[sp];
        --sp;
        break;
      case Op::Pow:
        if (in.arg < 0 && value_of(stack[sp]) == 0.0) domain_error("negative power of zero", t, x);
        stack[sp] = ipow(stack[sp], in.arg);
        break;
      case Op::Sin: {
        using std::sin;
        stack[sp] = sin(stack[sp]);
        break;
      }
      case Op::Cos: {
        using std::cos;
        stack[sp] = cos(stack[sp]);
        break;
      }
      case Op::Tan: {
        using std::tan;
        stack[sp] = tan(stack[sp]);
        break;
      }
      case Op::Atan: {
        using std::atan;
        stack[sp] = atan(stack[sp]);
        break;
      }
      case Op::Sqrt: {
        using std::sqrt;
        const double v = value_of(stack[sp]);
        if (v < 0.0 || (!std::is_same_v<T, double> && v == 0.0)) {
          domain_error("sqrt outside its domain", t, x);
        }
        stack[sp] = sqrt(stack[sp]);
        break;
      }
      case Op::Exp: {
        using std::exp;
        stack[sp] = exp(stack[sp]);
        break;
      }
      case Op::Log: {
        using std::log;
        if (value_of(stack[sp]) <= 0.0) domain_error("log of a nonpositive number", t, x);
        stack[sp] = log(stack[sp]);
        break;
      }
      case Op::Bump:
      case Op::Step:
      case Op::Series:
      case Op::Periodic:
        stack[sp] = unary_primitive<T>(p.primitives[static_cast<std::size_t>(in.arg)], in.op,
                                       stack[sp]);
        break;
      case Op::Shepherd: {
        const auto& s =
            std::get<transitions::ShepherdFactor>(p.primitives[static_cast<std::size_t>(in.arg)]);
        if constexpr (std::is_same_v<T, double>) {
          stack[sp - 1] = s.jet(Jet{stack[sp - 1]}, Jet{stack[sp]}).v;
        } else {
          stack[sp - 1] = s.jet(stack[sp - 1], stack[sp]);
        }
        --sp;
        break;
      }
    }
  }
  return stack[0];
}

template <typename T>
T execute(const Program& p, double t, double x) {
  if (p.stack_depth <= kInlineStack) {
    std::array<T, kInlineStack> stack;
    return run<T>(p, t, x, stack.data());
  }
  std::vector<T> stack(static_cast<std::size_t>(p.stack_depth));
  return run<T>(p, t, x, stack.data());
}

double Compiler::evaluate_constant(const Program& p) { return execute<double>(p, 0.0, 0.0); }

}  // namespace

ScalarField::ScalarField(FieldExpr expr, ParameterMap bindings)
    : expr_(std::move(expr)), bindings_(std::move(bindings)) {
  program_ = std::make_shared<const Program>(Compiler(bindings_).compile(expr_.root()));
}

double ScalarField::eval(double t, double x) const { return execute<double>(*program_, t, x); }

Jet ScalarField::eval_jet(double t, double x) const { return execute<Jet>(*program_, t, x); }

std::string ScalarField::canonical() const {
  std::ostringstream os;
  os.precision(17);
  os << expr_.to_string();
  for (const auto& name : expr_.parameters()) {
    os << ';' << name << '=' << bindings_.at(name);
  }
  return os.str();
}

ScalarField ScalarField::with_coercivity_hint(Bracket bracket) const {
  ScalarField copy = *this;
  copy.hint_ = bracket;
  return copy;
}

}  // namespace tipcast
