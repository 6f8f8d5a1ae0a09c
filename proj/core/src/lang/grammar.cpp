#include "nmdec/lang/grammar.hpp"

#include <algorithm>
#include <stdexcept>

namespace nmdec::lang {

void GrammarConfig::validate() const {
  if (level < kMinLevel || level > kMaxLevel) throw std::invalid_argument("level must be in [1,8]");
  if (max_statements < 1) throw std::invalid_argument("max_statements must be >= 1");
  if (max_expr_depth < 1) throw std::invalid_argument("max_expr_depth must be >= 1");
  if (max_number < 1) throw std::invalid_argument("max_number must be >= 1");
  if (num_variables < 2) throw std::invalid_argument("num_variables must be >= 2");
  if (max_nesting < 1) throw std::invalid_argument("max_nesting must be >= 1");
}

std::vector<Identifier> variable_pool(const GrammarConfig& cfg) {
  std::vector<Identifier> pool;
  for (int i = 0; i < cfg.num_variables; ++i) pool.push_back("X" + std::to_string(i));
  return pool;
}

// Per-statement bookkeeping: variables already mentioned (a ++/-- operand
// must appear nowhere else in its statement) and variables an enclosing
// loop needs to stay unmodified.
struct Sampler::Scope {
  std::set<Identifier> mentioned;
  std::set<Identifier> stepped;
  std::set<Identifier> frozen;
  bool allow_unary = true;
};

Sampler::Sampler(GrammarConfig cfg, uint64_t seed) : cfg_(cfg), rng_(seed) {
  cfg_.validate();
  pool_ = variable_pool(cfg_);
}

// Condition sides are one level shallower than assignment values.
int Sampler::condition_start_depth() const { return std::min(2, cfg_.max_expr_depth); }

bool Sampler::coin(double p) { return std::uniform_real_distribution<double>(0, 1)(rng_) < p; }

int Sampler::pick_count(int max) { return std::uniform_int_distribution<int>(1, std::max(1, max))(rng_); }

int32_t Sampler::pick_number() { return std::uniform_int_distribution<int32_t>(1, cfg_.max_number)(rng_); }

Identifier Sampler::pick_var(Scope& scope) {
  for (int attempt = 0; attempt < 64; ++attempt) {
    const auto& v = pool_[std::uniform_int_distribution<size_t>(0, pool_.size() - 1)(rng_)];
    if (!scope.stepped.count(v)) return v;
  }
  for (const auto& v : pool_) {
    if (!scope.stepped.count(v)) return v;
  }
  return pool_.front();
}

Program Sampler::sample() {
  Scope scope;
  Program p;
  p.statements = sample_block(pick_count(cfg_.max_statements), 0, scope);
  return p;
}

std::vector<Statement> Sampler::sample_block(int count, int nesting, Scope& scope) {
  std::vector<Statement> out;
  for (int i = 0; i < count; ++i) out.push_back(sample_statement(nesting, scope));
  return out;
}

Statement Sampler::sample_statement(int nesting, Scope& scope) {
  bool can_nest = nesting == 0 || (cfg_.level >= 8 && nesting < cfg_.max_nesting);
  if (can_nest && cfg_.level >= 6) {
    double r = std::uniform_real_distribution<double>(0, 1)(rng_);
    if (cfg_.level == 6) {
      if (r < 0.4) return sample_branch(nesting, scope);
    } else {
      if (r < 0.25) return sample_branch(nesting, scope);
      if (r < 0.5) return sample_loop(nesting, scope);
    }
  }
  return sample_assignment(scope);
}

Statement Sampler::sample_assignment(Scope& scope) {
  scope.mentioned.clear();
  scope.stepped.clear();
  Identifier target;
  for (int attempt = 0; attempt < 64; ++attempt) {
    target = pool_[std::uniform_int_distribution<size_t>(0, pool_.size() - 1)(rng_)];
    if (!scope.frozen.count(target)) break;
  }
  scope.mentioned.insert(target);
  Expr value = sample_expr(1, scope, cfg_.level == 3 || cfg_.level >= 5);
  return make_assign(std::move(target), std::move(value));
}

Condition Sampler::sample_condition(Scope& scope) {
  scope.mentioned.clear();
  scope.stepped.clear();
  static constexpr Relation kRels[] = {Relation::kGt, Relation::kGe, Relation::kLt,
                                       Relation::kLe, Relation::kEq, Relation::kNe};
  Relation rel = kRels[std::uniform_int_distribution<int>(0, 5)(rng_)];
  Expr lhs = coin(0.7) ? make_var(pick_var(scope)) : sample_expr(condition_start_depth(), scope, true);
  if (const auto* v = std::get_if<Var>(&lhs.node)) scope.mentioned.insert(v->name);
  Expr rhs = coin(0.6) ? make_num(pick_number()) : sample_expr(condition_start_depth(), scope, true);
  if (coin(0.15)) {
    std::swap(lhs, rhs);
    rel = mirror(rel);
  }
  return Condition{std::move(lhs), rel, std::move(rhs)};
}

Statement Sampler::sample_branch(int nesting, Scope& scope) {
  Condition cond = sample_condition(scope);
  int body_max = std::min(cfg_.max_statements, 3);
  auto then_body = sample_block(pick_count(body_max), nesting + 1, scope);
  std::vector<Statement> else_body;
  if (coin(0.4)) else_body = sample_block(pick_count(body_max), nesting + 1, scope);
  return make_if(std::move(cond), std::move(then_body), std::move(else_body));
}

Statement Sampler::sample_loop(int nesting, Scope& scope) {
  // Counter: a variable the enclosing loops do not depend on.
  Identifier counter;
  for (int attempt = 0; attempt < 64; ++attempt) {
    counter = pool_[std::uniform_int_distribution<size_t>(0, pool_.size() - 1)(rng_)];
    if (!scope.frozen.count(counter)) break;
  }
  if (scope.frozen.count(counter)) return sample_assignment(scope);

  static constexpr Relation kRels[] = {Relation::kGt, Relation::kGe, Relation::kLt,
                                       Relation::kLe, Relation::kEq};
  Relation rel = kRels[std::uniform_int_distribution<int>(0, 4)(rng_)];

  scope.mentioned = {counter};
  scope.stepped = {counter};
  bool saved_unary = scope.allow_unary;
  scope.allow_unary = false;
  Expr bound = coin(0.6) ? make_num(pick_number()) : sample_expr(condition_start_depth(), scope, false);
  scope.allow_unary = saved_unary;
  std::set<Identifier> bound_reads;
  collect_reads(bound, bound_reads);
  if (bound_reads.count(counter)) bound = make_num(pick_number());
  bound_reads.clear();
  collect_reads(bound, bound_reads);

  std::set<Identifier> saved_frozen = scope.frozen;
  scope.frozen.insert(counter);
  scope.frozen.insert(bound_reads.begin(), bound_reads.end());
  int body_max = std::min(cfg_.max_statements, 3);
  auto body = sample_block(pick_count(body_max) - 1, nesting + 1, scope);
  scope.frozen = std::move(saved_frozen);

  BinaryOp step_op = (rel == Relation::kGt || rel == Relation::kGe) ? BinaryOp::kSub : BinaryOp::kAdd;
  int32_t step = std::uniform_int_distribution<int32_t>(1, std::min(cfg_.max_number, 10))(rng_);
  body.push_back(make_assign(counter, make_binary(step_op, make_var(counter), make_num(step))));

  Condition cond{make_var(counter), rel, std::move(bound)};
  if (coin(0.15)) {
    std::swap(cond.lhs, cond.rhs);
    cond.rel = mirror(cond.rel);
  }
  return make_while(std::move(cond), std::move(body));
}

Expr Sampler::sample_leaf(Scope& scope, bool allow_unary) {
  bool unary_ok = allow_unary && scope.allow_unary;
  int kinds = cfg_.level == 1 ? 1 : (unary_ok ? 3 : 2);
  int k = std::uniform_int_distribution<int>(0, kinds - 1)(rng_);
  if (cfg_.level >= 4 && unary_ok && k == 2 && !coin(0.5)) k = std::uniform_int_distribution<int>(0, 1)(rng_);
  if (k == 0) return make_num(pick_number());
  if (k == 2) {
    std::vector<Identifier> free;
    for (const auto& v : pool_) {
      if (!scope.mentioned.count(v) && !scope.frozen.count(v)) free.push_back(v);
    }
    if (!free.empty()) {
      Identifier v = free[std::uniform_int_distribution<size_t>(0, free.size() - 1)(rng_)];
      scope.mentioned.insert(v);
      scope.stepped.insert(v);
      UnaryOp op = coin(0.5) ? UnaryOp::kInc : UnaryOp::kDec;
      Fixity fx = coin(0.5) ? Fixity::kPrefix : Fixity::kPostfix;
      return make_unary(op, fx, std::move(v));
    }
  }
  Identifier v = pick_var(scope);
  scope.mentioned.insert(v);
  return make_var(std::move(v));
}

Expr Sampler::sample_expr(int depth, Scope& scope, bool allow_unary) {
  bool binary_ok = cfg_.level >= 4 && depth < cfg_.max_expr_depth;
  double p_binary = depth == 1 ? 0.75 : 0.35;
  if (binary_ok && coin(p_binary)) {
    static constexpr BinaryOp kOps[] = {BinaryOp::kAdd, BinaryOp::kSub, BinaryOp::kMul,
                                        BinaryOp::kDiv, BinaryOp::kMod};
    BinaryOp op = kOps[std::uniform_int_distribution<int>(0, 4)(rng_)];
    bool unary = allow_unary && cfg_.level >= 5;
    Expr lhs = sample_expr(depth + 1, scope, unary);
    Expr rhs = sample_expr(depth + 1, scope, unary);
    if (std::holds_alternative<Num>(lhs.node) && std::holds_alternative<Num>(rhs.node) && coin(0.7)) {
      Identifier v = pick_var(scope);
      scope.mentioned.insert(v);
      lhs = make_var(std::move(v));
    }
    return make_binary(op, std::move(lhs), std::move(rhs));
  }
  return sample_leaf(scope, allow_unary && (cfg_.level == 3 || cfg_.level >= 5));
}

namespace {

struct Features {
  bool var_expr = false, unary = false, binary = false, branch = false, loop = false, nested = false;
};

void scan_expr(const Expr& e, Features& f) {
  std::visit(Overloaded{[&](const Var&) { f.var_expr = true; },
                        [](const Num&) {},
                        [&](const Binary& b) {
                          f.binary = true;
                          scan_expr(*b.lhs, f);
                          scan_expr(*b.rhs, f);
                        },
                        [&](const Unary&) { f.unary = true; }},
             e.node);
}

void scan_block(const std::vector<Statement>& body, int nesting, Features& f) {
  for (const auto& s : body) {
    std::visit(Overloaded{[&](const Assignment& a) { scan_expr(a.value, f); },
                          [&](const Branch& b) {
                            f.branch = true;
                            if (nesting > 0) f.nested = true;
                            scan_expr(b.cond.lhs, f);
                            scan_expr(b.cond.rhs, f);
                            scan_block(b.then_body, nesting + 1, f);
                            scan_block(b.else_body, nesting + 1, f);
                          },
                          [&](const Loop& l) {
                            f.loop = true;
                            if (nesting > 0) f.nested = true;
                            scan_expr(l.cond.lhs, f);
                            scan_expr(l.cond.rhs, f);
                            scan_block(l.body, nesting + 1, f);
                          }},
               s.node);
  }
}

}  // namespace

int classify_level(const Program& p) {
  Features f;
  scan_block(p.statements, 0, f);
  if (f.nested) return 8;
  if (f.loop) return 7;
  if (f.branch) return 6;
  if (f.binary && f.unary) return 5;
  if (f.binary) return 4;
  if (f.unary) return 3;
  if (f.var_expr) return 2;
  return 1;
}

}  // namespace nmdec::lang
