// Reference interpreter: one semantics for every surface language.
// Integers live in Z_100; lists hold at most 8 elements.
#pragma once

#include <algorithm>
#include <numeric>

#include "babel/toylang/ast.hpp"

namespace babel::toylang {

constexpr std::int64_t kModulus = 100;
constexpr std::size_t kMaxListLen = 8;

class EvalError : public Error {
 public:
  explicit EvalError(const std::string& w) : Error("eval error: " + w) {}
};

class DivergesError : public Error {
 public:
  DivergesError() : Error("step cap exceeded") {}
};

struct InterpConfig {
  int step_cap = 10000;
};

namespace detail {

inline std::int64_t wrap(std::int64_t v) {
  return ((v % kModulus) + kModulus) % kModulus;
}

inline Value eval(const ExprPtr& e, int& steps, const InterpConfig& cfg) {
  if (--steps < 0) throw DivergesError();
  switch (e->kind) {
    case Expr::Kind::IntLit:
      return Value::of_int(wrap(e->value));
    case Expr::Kind::ListLit: {
      if (e->children.size() > kMaxListLen) throw EvalError("list too long");
      std::vector<std::int64_t> xs;
      xs.reserve(e->children.size());
      for (const auto& c : e->children) {
        Value v = eval(c, steps, cfg);
        if (v.is_list) throw EvalError("nested list");
        xs.push_back(v.i);
      }
      return Value::of_list(std::move(xs));
    }
    case Expr::Kind::Call:
      break;
  }
  const OpInfo& info = op_info(e->op);
  if (e->children.size() != info.args.size())
    throw EvalError("bad arity for " + std::string(info.name));
  std::vector<Value> args;
  args.reserve(e->children.size());
  for (std::size_t k = 0; k < e->children.size(); ++k) {
    Value v = eval(e->children[k], steps, cfg);
    if ((info.args[k] == Ty::List) != v.is_list)
      throw EvalError("type mismatch in " + std::string(info.name));
    args.push_back(std::move(v));
  }
  auto need_nonempty = [&](const Value& v) {
    if (v.list.empty())
      throw EvalError(std::string(info.name) + " of empty list");
  };
  switch (e->op) {
    case Op::Add: return Value::of_int(wrap(args[0].i + args[1].i));
    case Op::Sub: return Value::of_int(wrap(args[0].i - args[1].i));
    case Op::Mul: return Value::of_int(wrap(args[0].i * args[1].i));
    case Op::Neg: return Value::of_int(wrap(-args[0].i));
    case Op::Len: return Value::of_int((std::int64_t)args[0].list.size());
    case Op::Sum: {
      std::int64_t s = std::accumulate(args[0].list.begin(),
                                       args[0].list.end(), std::int64_t(0));
      return Value::of_int(wrap(s));
    }
    case Op::Max:
      need_nonempty(args[0]);
      return Value::of_int(
          *std::max_element(args[0].list.begin(), args[0].list.end()));
    case Op::Min:
      need_nonempty(args[0]);
      return Value::of_int(
          *std::min_element(args[0].list.begin(), args[0].list.end()));
    case Op::Head:
      need_nonempty(args[0]);
      return Value::of_int(args[0].list.front());
    case Op::Last:
      need_nonempty(args[0]);
      return Value::of_int(args[0].list.back());
    case Op::Range: {
      std::int64_t n = std::min<std::int64_t>(args[0].i, kMaxListLen);
      std::vector<std::int64_t> xs;
      for (std::int64_t k = 0; k < n; ++k) xs.push_back(k);
      return Value::of_list(std::move(xs));
    }
    case Op::IfPos:
      return Value::of_int(args[0].i > 0 ? args[1].i : args[2].i);
  }
  throw EvalError("unhandled op");
}

}  // namespace detail

inline Value interpret(const ExprPtr& program,
                       const InterpConfig& cfg = InterpConfig{}) {
  int steps = cfg.step_cap;
  return detail::eval(program, steps, cfg);
}

}  // namespace babel::toylang
