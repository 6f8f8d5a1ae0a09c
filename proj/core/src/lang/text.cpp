#include "nmdec/lang/text.hpp"

#include <cctype>

namespace nmdec::lang {

ParseError::ParseError(size_t position, const std::string& what)
    : std::runtime_error("parse error at token " + std::to_string(position) + ": " + what),
      position_(position) {}

namespace {

void emit_expr(const Expr& e, bool nested, TokenSeq& out) {
  std::visit(Overloaded{[&](const Var& v) { out.push_back(v.name); },
                        [&](const Num& n) { out.push_back(std::to_string(n.value)); },
                        [&](const Binary& b) {
                          if (nested) out.emplace_back("(");
                          emit_expr(*b.lhs, true, out);
                          out.emplace_back(to_string(b.op));
                          emit_expr(*b.rhs, true, out);
                          if (nested) out.emplace_back(")");
                        },
                        [&](const Unary& u) {
                          const char* op = u.op == UnaryOp::kInc ? "++" : "--";
                          if (u.fixity == Fixity::kPrefix) {
                            out.emplace_back(op);
                            out.push_back(u.var);
                          } else {
                            out.push_back(u.var);
                            out.emplace_back(op);
                          }
                        }},
             e.node);
}

void emit_condition(const Condition& c, TokenSeq& out) {
  out.emplace_back("(");
  emit_expr(c.lhs, false, out);
  out.emplace_back(to_string(c.rel));
  emit_expr(c.rhs, false, out);
  out.emplace_back(")");
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
                            out.push_back(a.target);
                            out.emplace_back("=");
                            emit_expr(a.value, false, out);
                            out.emplace_back(";");
                          },
                          [&](const Branch& b) {
                            out.emplace_back("if");
                            emit_condition(b.cond, out);
                            emit_braced(b.then_body, out);
                            if (!b.else_body.empty()) {
                              out.emplace_back("else");
                              emit_braced(b.else_body, out);
                            }
                          },
                          [&](const Loop& l) {
                            out.emplace_back("while");
                            emit_condition(l.cond, out);
                            emit_braced(l.body, out);
                          }},
               s.node);
  }
}

bool is_keyword(const std::string& t) { return t == "if" || t == "else" || t == "while"; }

class Parser {
 public:
  explicit Parser(const TokenSeq& tokens) : t_(tokens) {}

  Program program() {
    Program p;
    while (pos_ < t_.size()) p.statements.push_back(statement());
    if (p.statements.empty()) fail("empty program");
    return p;
  }

 private:
  const std::string& peek() const {
    static const std::string kEnd;
    return pos_ < t_.size() ? t_[pos_] : kEnd;
  }
  bool at(const char* s) const { return pos_ < t_.size() && t_[pos_] == s; }
  [[noreturn]] void fail(const std::string& what) const { throw ParseError(pos_, what); }
  void expect(const char* s) {
    if (!at(s)) fail(std::string("expected '") + s + "'" + (pos_ < t_.size() ? " got '" + t_[pos_] + "'" : " at end"));
    ++pos_;
  }
  std::string identifier() {
    if (pos_ >= t_.size() || !is_identifier(t_[pos_]) || is_keyword(t_[pos_])) fail("expected identifier");
    return t_[pos_++];
  }

  Statement statement() {
    if (at("if")) {
      ++pos_;
      Condition c = condition();
      auto then_body = block();
      std::vector<Statement> else_body;
      if (at("else")) {
        ++pos_;
        else_body = block();
      }
      return make_if(std::move(c), std::move(then_body), std::move(else_body));
    }
    if (at("while")) {
      ++pos_;
      Condition c = condition();
      return make_while(std::move(c), block());
    }
    std::string target = identifier();
    expect("=");
    Expr value = expr();
    expect(";");
    return make_assign(std::move(target), std::move(value));
  }

  std::vector<Statement> block() {
    expect("{");
    std::vector<Statement> body;
    while (!at("}")) {
      if (pos_ >= t_.size()) fail("unterminated block");
      body.push_back(statement());
    }
    if (body.empty()) fail("empty block");
    ++pos_;
    return body;
  }

  Condition condition() {
    expect("(");
    Expr lhs = expr();
    Relation rel;
    const std::string& r = peek();
    if (r == ">") rel = Relation::kGt;
    else if (r == ">=") rel = Relation::kGe;
    else if (r == "<") rel = Relation::kLt;
    else if (r == "<=") rel = Relation::kLe;
    else if (r == "==") rel = Relation::kEq;
    else if (r == "!=") rel = Relation::kNe;
    else fail("expected relational operator");
    ++pos_;
    Expr rhs = expr();
    expect(")");
    return Condition{std::move(lhs), rel, std::move(rhs)};
  }

  Expr expr() {
    Expr lhs = term();
    while (at("+") || at("-")) {
      BinaryOp op = at("+") ? BinaryOp::kAdd : BinaryOp::kSub;
      ++pos_;
      lhs = make_binary(op, std::move(lhs), term());
    }
    return lhs;
  }

  Expr term() {
    Expr lhs = primary();
    while (at("*") || at("/") || at("%")) {
      BinaryOp op = at("*") ? BinaryOp::kMul : at("/") ? BinaryOp::kDiv : BinaryOp::kMod;
      ++pos_;
      lhs = make_binary(op, std::move(lhs), primary());
    }
    return lhs;
  }

  Expr primary() {
    if (at("(")) {
      ++pos_;
      Expr e = expr();
      expect(")");
      return e;
    }
    if (at("++") || at("--")) {
      UnaryOp op = at("++") ? UnaryOp::kInc : UnaryOp::kDec;
      ++pos_;
      return make_unary(op, Fixity::kPrefix, identifier());
    }
    if (pos_ < t_.size() && is_number(t_[pos_])) {
      auto v = parse_int32(t_[pos_]);
      if (!v) fail("integer literal out of range");
      ++pos_;
      return make_num(*v);
    }
    std::string name = identifier();
    if (at("++") || at("--")) {
      UnaryOp op = at("++") ? UnaryOp::kInc : UnaryOp::kDec;
      ++pos_;
      return make_unary(op, Fixity::kPostfix, std::move(name));
    }
    return make_var(std::move(name));
  }

  const TokenSeq& t_;
  size_t pos_ = 0;
};

TokenSeq lex(const std::string& text) {
  TokenSeq out;
  size_t i = 0;
  auto isword = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; };
  while (i < text.size()) {
    char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (isword(c)) {
      size_t j = i;
      while (j < text.size() && isword(text[j])) ++j;
      out.push_back(text.substr(i, j - i));
      i = j;
      continue;
    }
    bool after_operand = !out.empty() && (isword(out.back().back()) || out.back() == ")" ||
                                          out.back() == "++" || out.back() == "--");
    if (c == '-' && !after_operand && i + 1 < text.size() &&
        std::isdigit(static_cast<unsigned char>(text[i + 1]))) {
      size_t j = i + 1;
      while (j < text.size() && isword(text[j])) ++j;
      out.push_back(text.substr(i, j - i));
      i = j;
      continue;
    }
    static const char* kTwo[] = {"++", "--", ">=", "<=", "==", "!="};
    bool matched = false;
    for (const char* op : kTwo) {
      if (text.compare(i, 2, op) == 0) {
        out.emplace_back(op);
        i += 2;
        matched = true;
        break;
      }
    }
    if (!matched) {
      out.emplace_back(1, c);
      ++i;
    }
  }
  return out;
}

}  // namespace

TokenSeq emit_tokens(const Program& p) {
  TokenSeq out;
  emit_block(p.statements, out);
  return out;
}

TokenSeq emit_tokens(const Expr& e) {
  TokenSeq out;
  emit_expr(e, false, out);
  return out;
}

std::string to_source(const Program& p) { return join(emit_tokens(p)); }

Program parse_tokens(const TokenSeq& tokens) { return Parser(tokens).program(); }

Program parse_source(const std::string& text) { return parse_tokens(lex(text)); }

}  // namespace nmdec::lang
