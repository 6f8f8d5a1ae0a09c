#include "nmdec/canonical/postorder.hpp"

#include <charconv>
#include <variant>

#include "nmdec/canonical/names.hpp"

namespace nmdec::canonical {

using namespace nmdec::lang;

PostorderError::PostorderError(size_t position, const std::string& what)
    : std::runtime_error("post-order error at token " + std::to_string(position) + ": " + what),
      position_(position) {}

namespace {

void emit_number(int32_t v, TokenSeq& out) {
  if (!out.empty() && is_number(out.back())) out.push_back(kNumberSeparator);
  out.push_back(std::to_string(v));
}

void emit_expr(const Expr& e, TokenSeq& out) {
  std::visit(Overloaded{[&](const Var& v) { out.push_back(v.name); },
                        [&](const Num& n) { emit_number(n.value, out); },
                        [&](const Binary& b) {
                          emit_expr(*b.lhs, out);
                          emit_expr(*b.rhs, out);
                          out.emplace_back(to_string(b.op));
                        },
                        [&](const Unary& u) {
                          out.push_back(u.var);
                          std::string op = u.op == UnaryOp::kInc ? "++" : "--";
                          out.push_back(u.fixity == Fixity::kPrefix ? "pre" + op : op);
                        }},
             e.node);
}

void emit_condition(const Condition& c, TokenSeq& out) {
  emit_expr(c.lhs, out);
  emit_expr(c.rhs, out);
  out.emplace_back(to_string(c.rel));
}

void emit_block(const std::vector<Statement>& body, TokenSeq& out);

void emit_braced(const std::vector<Statement>& body, TokenSeq& out) {
  out.emplace_back("{");
  emit_block(body, out);
  out.emplace_back("}");
}

void emit_block(const std::vector<Statement>& body, TokenSeq& out) {
  for (const auto& s : body) {
    std::visit(Overloaded{[&](const Assignment& a) {
                            emit_expr(a.value, out);
                            out.push_back(a.target);
                            out.emplace_back("=");
                            out.emplace_back(";");
                          },
                          [&](const Branch& b) {
                            emit_condition(b.cond, out);
                            emit_braced(b.then_body, out);
                            if (b.else_body.empty()) {
                              out.emplace_back("if");
                            } else {
                              emit_braced(b.else_body, out);
                              out.emplace_back("ifelse");
                            }
                          },
                          [&](const Loop& l) {
                            emit_condition(l.cond, out);
                            emit_braced(l.body, out);
                            out.emplace_back("while");
                          }},
               s.node);
  }
}

struct Open {};
using Block = std::vector<Statement>;
using Item = std::variant<Expr, Condition, Block, Statement, Open>;

class Reader {
 public:
  explicit Reader(const TokenSeq& t) : t_(t) {}

  Program run() {
    for (pos_ = 0; pos_ < t_.size(); ++pos_) step(t_[pos_]);
    Program p;
    for (auto& item : stack_) {
      auto* s = std::get_if<Statement>(&item);
      if (!s) fail("unconsumed operand at end of input");
      p.statements.push_back(std::move(*s));
    }
    if (p.statements.empty()) fail("empty program");
    return p;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw PostorderError(pos_, what); }

  template <typename T>
  T pop(const char* what) {
    if (stack_.empty()) fail(std::string("stack underflow, expected ") + what);
    auto* v = std::get_if<T>(&stack_.back());
    if (!v) fail(std::string("expected ") + what);
    T out = std::move(*v);
    stack_.pop_back();
    return out;
  }

  static std::optional<Relation> relation(const std::string& t) {
    if (t == ">") return Relation::kGt;
    if (t == ">=") return Relation::kGe;
    if (t == "<") return Relation::kLt;
    if (t == "<=") return Relation::kLe;
    if (t == "==") return Relation::kEq;
    if (t == "!=") return Relation::kNe;
    return std::nullopt;
  }

  static std::optional<BinaryOp> binary(const std::string& t) {
    if (t == "+") return BinaryOp::kAdd;
    if (t == "-") return BinaryOp::kSub;
    if (t == "*") return BinaryOp::kMul;
    if (t == "/") return BinaryOp::kDiv;
    if (t == "%") return BinaryOp::kMod;
    return std::nullopt;
  }

  // Decimal literal, tolerating leading zeros from digit fusion.
  std::optional<int32_t> literal(const std::string& t) const {
    std::string_view v = t;
    bool neg = !v.empty() && v[0] == '-';
    if (neg) v.remove_prefix(1);
    if (v.empty()) return std::nullopt;
    for (char c : v) {
      if (c < '0' || c > '9') return std::nullopt;
    }
    int64_t x = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || x > int64_t{INT32_MAX} + 1) fail("literal out of range");
    if (neg) x = -x;
    if (x > INT32_MAX) fail("literal out of range");
    return static_cast<int32_t>(x);
  }

  void step(const std::string& t) {
    if (t == kNumberSeparator) return;
    if (auto v = literal(t)) {
      stack_.emplace_back(make_num(*v));
    } else if (auto op = binary(t)) {
      Expr r = pop<Expr>("right operand");
      Expr l = pop<Expr>("left operand");
      stack_.emplace_back(make_binary(*op, std::move(l), std::move(r)));
    } else if (t == "++" || t == "--" || t == "pre++" || t == "pre--") {
      Expr e = pop<Expr>("variable");
      auto* v = std::get_if<Var>(&e.node);
      if (!v) fail("increment/decrement of a non-variable");
      UnaryOp op = t.find("++") != std::string::npos ? UnaryOp::kInc : UnaryOp::kDec;
      Fixity fx = t.rfind("pre", 0) == 0 ? Fixity::kPrefix : Fixity::kPostfix;
      stack_.emplace_back(make_unary(op, fx, v->name));
    } else if (auto rel = relation(t)) {
      Expr r = pop<Expr>("right side of condition");
      Expr l = pop<Expr>("left side of condition");
      stack_.emplace_back(Condition{std::move(l), *rel, std::move(r)});
    } else if (t == "=") {
      Expr target = pop<Expr>("assignment target");
      auto* v = std::get_if<Var>(&target.node);
      if (!v) fail("assignment to a non-variable");
      Expr value = pop<Expr>("assigned value");
      if (pos_ + 1 >= t_.size() || t_[pos_ + 1] != ";") fail("expected ';' after '='");
      ++pos_;
      stack_.emplace_back(make_assign(v->name, std::move(value)));
    } else if (t == "{") {
      stack_.emplace_back(Open{});
    } else if (t == "}") {
      Block body;
      while (!stack_.empty() && std::holds_alternative<Statement>(stack_.back())) {
        body.insert(body.begin(), std::move(std::get<Statement>(stack_.back())));
        stack_.pop_back();
      }
      if (stack_.empty() || !std::holds_alternative<Open>(stack_.back())) fail("unbalanced '}'");
      stack_.pop_back();
      if (body.empty()) fail("empty block");
      stack_.emplace_back(std::move(body));
    } else if (t == "if") {
      Block then_body = pop<Block>("then block");
      Condition c = pop<Condition>("condition");
      stack_.emplace_back(make_if(std::move(c), std::move(then_body)));
    } else if (t == "ifelse") {
      Block else_body = pop<Block>("else block");
      Block then_body = pop<Block>("then block");
      Condition c = pop<Condition>("condition");
      stack_.emplace_back(make_if(std::move(c), std::move(then_body), std::move(else_body)));
    } else if (t == "while") {
      Block body = pop<Block>("loop body");
      Condition c = pop<Condition>("condition");
      stack_.emplace_back(make_while(std::move(c), std::move(body)));
    } else if (is_identifier(t) && !is_reserved_token(t)) {
      stack_.emplace_back(make_var(t));
    } else {
      fail("unexpected token '" + t + "'");
    }
  }

  const TokenSeq& t_;
  size_t pos_ = 0;
  std::vector<Item> stack_;
};

}  // namespace

TokenSeq to_postorder(const Program& p) {
  TokenSeq out;
  emit_block(p.statements, out);
  return out;
}

Program from_postorder(const TokenSeq& tokens) { return Reader(tokens).run(); }

}  // namespace nmdec::canonical
