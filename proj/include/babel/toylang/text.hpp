// Surface rendering and parsing. Round-trip safe: parse(render(e)) == e.
#pragma once

#include <string>
#include <vector>

#include "babel/toylang/ast.hpp"
#include "babel/toylang/interp.hpp"
#include "babel/vocab.hpp"

namespace babel::toylang {

using Tokens = std::vector<std::string>;

class ParseError : public Error {
 public:
  explicit ParseError(const std::string& w) : Error("parse error: " + w) {}
};

inline void render_int(std::int64_t v, Tokens& out) {
  if (v < 0 || v >= kModulus) throw Error("render_int: out of range");
  if (v >= 10) out.push_back(std::string(1, char('0' + v / 10)));
  out.push_back(std::string(1, char('0' + v % 10)));
}

inline void render_expr(const ExprPtr& e, const LanguageSpec& lang,
                        Tokens& out) {
  switch (e->kind) {
    case Expr::Kind::IntLit:
      render_int(detail::wrap(e->value), out);
      return;
    case Expr::Kind::ListLit:
      out.push_back("[");
      for (std::size_t i = 0; i < e->children.size(); ++i) {
        if (i) out.push_back(",");
        render_expr(e->children[i], lang, out);
      }
      out.push_back("]");
      return;
    case Expr::Kind::Call:
      out.push_back(lang.keyword(e->op));
      out.push_back("(");
      for (std::size_t i = 0; i < e->children.size(); ++i) {
        if (i) out.push_back(",");
        render_expr(e->children[i], lang, out);
      }
      out.push_back(")");
      return;
  }
}

inline Tokens render_expr(const ExprPtr& e, const LanguageSpec& lang) {
  Tokens out;
  render_expr(e, lang, out);
  return out;
}

inline void render_value(const Value& v, Tokens& out) {
  if (!v.is_list) {
    render_int(v.i, out);
    return;
  }
  out.push_back("[");
  for (std::size_t i = 0; i < v.list.size(); ++i) {
    if (i) out.push_back(",");
    render_int(v.list[i], out);
  }
  out.push_back("]");
}

inline Tokens render_value(const Value& v) {
  Tokens out;
  render_value(v, out);
  return out;
}

// One corpus document: "<expr> -> <value> ;"
inline Tokens render_document(const ExprPtr& e, const Value& v,
                              const LanguageSpec& lang) {
  Tokens out = render_expr(e, lang);
  out.push_back("->");
  render_value(v, out);
  out.push_back(";");
  return out;
}

namespace detail {

struct Cursor {
  const Tokens& toks;
  std::size_t pos = 0;

  bool done() const { return pos >= toks.size(); }
  const std::string& peek() const {
    if (done()) throw ParseError("unexpected end of input");
    return toks[pos];
  }
  const std::string& next() {
    const std::string& t = peek();
    ++pos;
    return t;
  }
  void expect(const std::string& t) {
    if (next() != t) throw ParseError("expected '" + t + "'");
  }
};

inline bool is_digit_tok(const std::string& t) {
  return t.size() == 1 && t[0] >= '0' && t[0] <= '9';
}

// Maximal run of digit tokens, at most two (values 0..99).
inline std::int64_t parse_int(Cursor& c) {
  if (!is_digit_tok(c.peek())) throw ParseError("expected digit");
  std::int64_t v = c.next()[0] - '0';
  if (!c.done() && is_digit_tok(c.peek())) {
    v = v * 10 + (c.next()[0] - '0');
    if (!c.done() && is_digit_tok(c.peek()))
      throw ParseError("number has too many digits");
  }
  return v;
}

inline ExprPtr parse_expr(Cursor& c, const std::map<std::string, Op>& kws);

inline ExprPtr parse_list(Cursor& c, const std::map<std::string, Op>& kws) {
  c.expect("[");
  std::vector<ExprPtr> elems;
  if (c.peek() != "]") {
    elems.push_back(parse_expr(c, kws));
    while (c.peek() == ",") {
      c.next();
      elems.push_back(parse_expr(c, kws));
    }
  }
  c.expect("]");
  return Expr::list_lit(std::move(elems));
}

inline ExprPtr parse_expr(Cursor& c, const std::map<std::string, Op>& kws) {
  const std::string& t = c.peek();
  if (is_digit_tok(t)) return Expr::int_lit(parse_int(c));
  if (t == "[") return parse_list(c, kws);
  auto it = kws.find(t);
  if (it == kws.end()) throw ParseError("unknown token '" + t + "'");
  c.next();
  Op op = it->second;
  c.expect("(");
  std::vector<ExprPtr> args;
  std::size_t arity = op_info(op).args.size();
  for (std::size_t i = 0; i < arity; ++i) {
    if (i) c.expect(",");
    args.push_back(parse_expr(c, kws));
  }
  c.expect(")");
  return Expr::call(op, std::move(args));
}

inline Value parse_value(Cursor& c) {
  if (c.peek() == "[") {
    c.next();
    std::vector<std::int64_t> xs;
    if (c.peek() != "]") {
      xs.push_back(parse_int(c));
      while (c.peek() == ",") {
        c.next();
        xs.push_back(parse_int(c));
      }
    }
    c.expect("]");
    return Value::of_list(std::move(xs));
  }
  return Value::of_int(parse_int(c));
}

}  // namespace detail

inline ExprPtr parse_expr(const Tokens& toks, const LanguageSpec& lang) {
  detail::Cursor c{toks};
  auto kws = lang.reverse_map();
  ExprPtr e = detail::parse_expr(c, kws);
  if (!c.done()) throw ParseError("trailing tokens");
  return e;
}

inline Value parse_value(const Tokens& toks) {
  detail::Cursor c{toks};
  Value v = detail::parse_value(c);
  if (!c.done()) throw ParseError("trailing tokens");
  return v;
}

struct Document {
  ExprPtr expr;
  Value value;
};

inline Document parse_document(const Tokens& toks, const LanguageSpec& lang) {
  detail::Cursor c{toks};
  auto kws = lang.reverse_map();
  Document d;
  d.expr = detail::parse_expr(c, kws);
  c.expect("->");
  d.value = detail::parse_value(c);
  c.expect(";");
  if (!c.done()) throw ParseError("trailing tokens");
  return d;
}

inline std::vector<TokenId> to_ids(const Tokens& toks, const Vocabulary& v) {
  std::vector<TokenId> ids;
  ids.reserve(toks.size());
  for (const auto& t : toks) ids.push_back(v.id(t));
  return ids;
}

inline Tokens to_strings(const std::vector<TokenId>& ids, const Vocabulary& v) {
  Tokens toks;
  toks.reserve(ids.size());
  for (TokenId i : ids) toks.push_back(v.token(i));
  return toks;
}

}  // namespace babel::toylang
