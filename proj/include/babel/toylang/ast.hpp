// Expression trees and runtime values.
#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "babel/common.hpp"
#include "babel/toylang/language.hpp"

namespace babel::toylang {

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
  enum class Kind { IntLit, ListLit, Call };
  Kind kind;
  std::int64_t value = 0;          // IntLit
  Op op = Op::Add;                 // Call
  std::vector<ExprPtr> children;   // ListLit elements / Call args

  static ExprPtr int_lit(std::int64_t v) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::IntLit;
    e->value = v;
    return e;
  }
  static ExprPtr list_lit(std::vector<ExprPtr> elems) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::ListLit;
    e->children = std::move(elems);
    return e;
  }
  static ExprPtr call(Op op, std::vector<ExprPtr> args) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::Call;
    e->op = op;
    e->children = std::move(args);
    return e;
  }
};

inline bool equal(const ExprPtr& a, const ExprPtr& b) {
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case Expr::Kind::IntLit:
      return a->value == b->value;
    case Expr::Kind::Call:
      if (a->op != b->op) return false;
      [[fallthrough]];
    case Expr::Kind::ListLit:
      if (a->children.size() != b->children.size()) return false;
      for (std::size_t i = 0; i < a->children.size(); ++i)
        if (!equal(a->children[i], b->children[i])) return false;
      return true;
  }
  return false;
}

inline Ty type_of(const ExprPtr& e) {
  switch (e->kind) {
    case Expr::Kind::IntLit: return Ty::Int;
    case Expr::Kind::ListLit: return Ty::List;
    case Expr::Kind::Call: return op_info(e->op).ret;
  }
  throw Error("type_of: bad expr");
}

// Collect every op used anywhere in the tree.
inline void collect_ops(const ExprPtr& e, std::set<Op>& out) {
  if (e->kind == Expr::Kind::Call) out.insert(e->op);
  for (const auto& c : e->children) collect_ops(c, out);
}

struct Value {
  bool is_list = false;
  std::int64_t i = 0;
  std::vector<std::int64_t> list;

  static Value of_int(std::int64_t v) { return Value{false, v, {}}; }
  static Value of_list(std::vector<std::int64_t> l) {
    return Value{true, 0, std::move(l)};
  }

  bool operator==(const Value& o) const {
    if (is_list != o.is_list) return false;
    return is_list ? list == o.list : i == o.i;
  }
};

}  // namespace babel::toylang
