#include "yulverify/term.hpp"

#include <cctype>
#include <functional>
#include <sstream>

namespace yulverify::logic {

std::string smt_sort(Sort s) {
  switch (s) {
    case Sort::Int: return "Int";
    case Sort::Bool: return "Bool";
    case Sort::Array: return "(Array Int Int)";
    case Sort::Array2: return "(Array Int (Array Int Int))";
  }
  return "Int";
}

namespace {

TermPtr make(Op op, Sort sort, std::vector<TermPtr> args) {
  auto t = std::make_shared<Term>();
  t->op = op;
  t->sort = sort;
  t->args = std::move(args);
  return t;
}

bool is_int_lit(const TermPtr& t) { return t->op == Op::IntLit; }

}  // namespace

TermPtr int_lit(const Word& v) {
  auto t = std::make_shared<Term>();
  t->op = Op::IntLit;
  t->sort = Sort::Int;
  t->value = v;
  return t;
}

TermPtr bool_lit(bool b) {
  static const TermPtr t_true = [] {
    auto t = std::make_shared<Term>();
    t->op = Op::BoolLit;
    t->sort = Sort::Bool;
    t->bval = true;
    return TermPtr(t);
  }();
  static const TermPtr t_false = [] {
    auto t = std::make_shared<Term>();
    t->op = Op::BoolLit;
    t->sort = Sort::Bool;
    t->bval = false;
    return TermPtr(t);
  }();
  return b ? t_true : t_false;
}

TermPtr var(const std::string& name, Sort s) {
  auto t = std::make_shared<Term>();
  t->op = Op::Var;
  t->sort = s;
  t->name = name;
  return t;
}

bool is_true(const TermPtr& t) { return t->op == Op::BoolLit && t->bval; }
bool is_false(const TermPtr& t) { return t->op == Op::BoolLit && !t->bval; }

TermPtr add(TermPtr a, TermPtr b) {
  if (is_int_lit(a) && is_int_lit(b)) return int_lit(a->value + b->value);
  if (is_int_lit(b) && sgn(b->value) == 0) return a;
  if (is_int_lit(a) && sgn(a->value) == 0) return b;
  return make(Op::Add, Sort::Int, {std::move(a), std::move(b)});
}

TermPtr sub(TermPtr a, TermPtr b) {
  if (is_int_lit(a) && is_int_lit(b)) return int_lit(a->value - b->value);
  if (is_int_lit(b) && sgn(b->value) == 0) return a;
  return make(Op::Sub, Sort::Int, {std::move(a), std::move(b)});
}

TermPtr mul(TermPtr a, TermPtr b) {
  if (is_int_lit(a) && is_int_lit(b)) return int_lit(a->value * b->value);
  if (is_int_lit(a) && a->value == 1) return b;
  if (is_int_lit(b) && b->value == 1) return a;
  if ((is_int_lit(a) && sgn(a->value) == 0) || (is_int_lit(b) && sgn(b->value) == 0)) return int_lit(0);
  return make(Op::Mul, Sort::Int, {std::move(a), std::move(b)});
}

TermPtr div(TermPtr a, TermPtr b) {
  if (is_int_lit(a) && is_int_lit(b) && sgn(b->value) != 0) {
    // SMT-LIB div is Euclidean.
    Word r, absb = abs(b->value);
    mpz_fdiv_r(r.get_mpz_t(), a->value.get_mpz_t(), absb.get_mpz_t());
    Word q = (a->value - r) / b->value;
    return int_lit(q);
  }
  if (is_int_lit(b) && b->value == 1) return a;
  return make(Op::Div, Sort::Int, {std::move(a), std::move(b)});
}

TermPtr mod(TermPtr a, TermPtr b) {
  if (is_int_lit(a) && is_int_lit(b) && sgn(b->value) != 0) {
    Word r;
    Word absb = abs(b->value);
    mpz_fdiv_r(r.get_mpz_t(), a->value.get_mpz_t(), absb.get_mpz_t());
    return int_lit(r);
  }
  return make(Op::Mod, Sort::Int, {std::move(a), std::move(b)});
}

TermPtr neg(TermPtr a) {
  if (is_int_lit(a)) return int_lit(-a->value);
  return make(Op::Neg, Sort::Int, {std::move(a)});
}

namespace {

TermPtr cmp(Op op, TermPtr a, TermPtr b) {
  if (is_int_lit(a) && is_int_lit(b)) {
    int c = cmp(a->value, b->value);
    switch (op) {
      case Op::Lt: return bool_lit(c < 0);
      case Op::Le: return bool_lit(c <= 0);
      case Op::Gt: return bool_lit(c > 0);
      case Op::Ge: return bool_lit(c >= 0);
      default: break;
    }
  }
  return make(op, Sort::Bool, {std::move(a), std::move(b)});
}

}  // namespace

TermPtr lt(TermPtr a, TermPtr b) { return cmp(Op::Lt, std::move(a), std::move(b)); }
TermPtr le(TermPtr a, TermPtr b) { return cmp(Op::Le, std::move(a), std::move(b)); }
TermPtr gt(TermPtr a, TermPtr b) { return cmp(Op::Gt, std::move(a), std::move(b)); }
TermPtr ge(TermPtr a, TermPtr b) { return cmp(Op::Ge, std::move(a), std::move(b)); }

TermPtr eq(TermPtr a, TermPtr b) {
  if (a == b) return bool_lit(true);
  if (is_int_lit(a) && is_int_lit(b)) return bool_lit(a->value == b->value);
  if (a->op == Op::BoolLit && b->op == Op::BoolLit) return bool_lit(a->bval == b->bval);
  if (a->op == Op::Var && b->op == Op::Var && a->name == b->name) return bool_lit(true);
  return make(Op::Eq, Sort::Bool, {std::move(a), std::move(b)});
}

TermPtr lnot(TermPtr a) {
  if (a->op == Op::BoolLit) return bool_lit(!a->bval);
  if (a->op == Op::Not) return a->args[0];
  return make(Op::Not, Sort::Bool, {std::move(a)});
}

TermPtr land(TermPtr a, TermPtr b) {
  if (is_true(a)) return b;
  if (is_true(b)) return a;
  if (is_false(a) || is_false(b)) return bool_lit(false);
  if (a == b) return a;
  return make(Op::And, Sort::Bool, {std::move(a), std::move(b)});
}

TermPtr land(const std::vector<TermPtr>& xs) {
  TermPtr out = bool_lit(true);
  for (const auto& x : xs) out = land(out, x);
  return out;
}

TermPtr lor(TermPtr a, TermPtr b) {
  if (is_false(a)) return b;
  if (is_false(b)) return a;
  if (is_true(a) || is_true(b)) return bool_lit(true);
  if (a == b) return a;
  return make(Op::Or, Sort::Bool, {std::move(a), std::move(b)});
}

TermPtr implies(TermPtr a, TermPtr b) {
  if (is_true(a)) return b;
  if (is_false(a) || is_true(b)) return bool_lit(true);
  if (is_false(b)) return lnot(a);
  if (a == b) return bool_lit(true);
  return make(Op::Implies, Sort::Bool, {std::move(a), std::move(b)});
}

TermPtr ite(TermPtr c, TermPtr a, TermPtr b) {
  if (is_true(c)) return a;
  if (is_false(c)) return b;
  if (a == b) return a;
  if (a->sort == Sort::Bool) {
    if (is_true(a) && is_false(b)) return c;
    if (is_false(a) && is_true(b)) return lnot(c);
  }
  Sort s = a->sort;
  return make(Op::Ite, s, {std::move(c), std::move(a), std::move(b)});
}

TermPtr select(TermPtr arr, TermPtr idx) {
  // Read-over-write on syntactically decided indices.
  const Term* cur = arr.get();
  while (cur->op == Op::Store && is_int_lit(idx) && is_int_lit(cur->args[1])) {
    if (cur->args[1]->value == idx->value) return cur->args[2];
    cur = cur->args[0].get();
  }
  if (cur->op == Op::Store && cur->args[1] == idx) return cur->args[2];
  Sort s = arr->sort == Sort::Array2 ? Sort::Array : Sort::Int;
  return make(Op::Select, s, {std::move(arr), std::move(idx)});
}

TermPtr store(TermPtr arr, TermPtr idx, TermPtr val) {
  Sort s = arr->sort;
  return make(Op::Store, s, {std::move(arr), std::move(idx), std::move(val)});
}

TermPtr apply(const std::string& fn, std::vector<TermPtr> args, Sort result) {
  auto t = make(Op::Apply, result, std::move(args));
  std::const_pointer_cast<Term>(t)->name = fn;
  return t;
}

TermPtr forall(std::vector<std::pair<std::string, Sort>> bound, TermPtr body) {
  if (body->op == Op::BoolLit || bound.empty()) return body;
  auto t = std::make_shared<Term>();
  t->op = Op::Forall;
  t->sort = Sort::Bool;
  t->bound = std::move(bound);
  t->args = {std::move(body)};
  return t;
}

TermPtr exists(std::vector<std::pair<std::string, Sort>> bound, TermPtr body) {
  if (body->op == Op::BoolLit || bound.empty()) return body;
  auto t = std::make_shared<Term>();
  t->op = Op::Exists;
  t->sort = Sort::Bool;
  t->bound = std::move(bound);
  t->args = {std::move(body)};
  return t;
}

TermPtr in_range(TermPtr v, unsigned bits) { return land(le(int_lit(0), v), lt(v, int_lit(pow2(bits)))); }

TermPtr truthy(TermPtr v) {
  if (v->op == Op::Ite && v->sort == Sort::Int && is_int_lit(v->args[1]) && is_int_lit(v->args[2]) &&
      v->args[1]->value == 1 && sgn(v->args[2]->value) == 0)
    return v->args[0];
  if (is_int_lit(v)) return bool_lit(sgn(v->value) != 0);
  return lnot(eq(v, int_lit(0)));
}

TermPtr as_int(TermPtr b) { return ite(std::move(b), int_lit(1), int_lit(0)); }

TermPtr substitute(const TermPtr& t, const std::map<std::string, TermPtr>& subst) {
  if (subst.empty()) return t;
  std::unordered_map<const Term*, TermPtr> memo;
  std::function<TermPtr(const TermPtr&, const std::map<std::string, TermPtr>&)> go =
      [&](const TermPtr& x, const std::map<std::string, TermPtr>& s) -> TermPtr {
    switch (x->op) {
      case Op::IntLit:
      case Op::BoolLit: return x;
      case Op::Var: {
        auto it = s.find(x->name);
        return it == s.end() ? x : it->second;
      }
      default: break;
    }
    bool top = &s == &subst;
    if (top) {
      if (auto it = memo.find(x.get()); it != memo.end()) return it->second;
    }
    TermPtr out;
    if (x->op == Op::Forall || x->op == Op::Exists) {
      std::map<std::string, TermPtr> inner = s;
      for (const auto& [n, _] : x->bound) inner.erase(n);
      std::map<std::string, Sort> incoming;
      std::map<std::string, FunSig> funs;
      for (const auto& [_, r] : inner) collect_symbols(r, incoming, funs);
      auto bound = x->bound;
      for (auto& [n, sort] : bound) {
        if (!incoming.count(n)) continue;
        std::string fresh;
        for (int k = 0; fresh.empty() || incoming.count(fresh) || s.count(fresh); ++k) fresh = n + "!" + std::to_string(k);
        inner[n] = var(fresh, sort);
        n = fresh;
      }
      TermPtr body = inner.empty() ? x->args[0] : go(x->args[0], inner);
      out = x->op == Op::Forall ? forall(bound, body) : exists(bound, body);
    } else {
      std::vector<TermPtr> args;
      args.reserve(x->args.size());
      bool changed = false;
      for (const auto& a : x->args) {
        args.push_back(go(a, s));
        changed |= args.back() != a;
      }
      if (!changed) {
        out = x;
      } else {
        switch (x->op) {
          case Op::Add: out = add(args[0], args[1]); break;
          case Op::Sub: out = sub(args[0], args[1]); break;
          case Op::Mul: out = mul(args[0], args[1]); break;
          case Op::Div: out = div(args[0], args[1]); break;
          case Op::Mod: out = mod(args[0], args[1]); break;
          case Op::Neg: out = neg(args[0]); break;
          case Op::Lt: out = lt(args[0], args[1]); break;
          case Op::Le: out = le(args[0], args[1]); break;
          case Op::Gt: out = gt(args[0], args[1]); break;
          case Op::Ge: out = ge(args[0], args[1]); break;
          case Op::Eq: out = eq(args[0], args[1]); break;
          case Op::Not: out = lnot(args[0]); break;
          case Op::And: out = land(args[0], args[1]); break;
          case Op::Or: out = lor(args[0], args[1]); break;
          case Op::Implies: out = implies(args[0], args[1]); break;
          case Op::Ite: out = ite(args[0], args[1], args[2]); break;
          case Op::Select: out = select(args[0], args[1]); break;
          case Op::Store: out = store(args[0], args[1], args[2]); break;
          case Op::Apply: out = apply(x->name, args, x->sort); break;
          default: out = x; break;
        }
      }
    }
    if (top) memo[x.get()] = out;
    return out;
  };
  return go(t, subst);
}

void collect_symbols(const TermPtr& t, std::map<std::string, Sort>& consts, std::map<std::string, FunSig>& funs) {
  std::unordered_map<const Term*, bool> seen;
  std::function<void(const TermPtr&, const std::set<std::string>&)> go = [&](const TermPtr& x,
                                                                            const std::set<std::string>& bound) {
    if (bound.empty()) {
      if (seen.count(x.get())) return;
      seen[x.get()] = true;
    }
    if (x->op == Op::Var) {
      if (bound.count(x->name)) return;
      auto [it, fresh] = consts.emplace(x->name, x->sort);
      if (!fresh && it->second != x->sort)
        throw Error(ErrorKind::UnsupportedSort, "symbol used with two sorts: " + x->name);
      return;
    }
    if (x->op == Op::Apply) {
      FunSig sig;
      for (const auto& a : x->args) sig.args.push_back(a->sort);
      sig.result = x->sort;
      auto [it, fresh] = funs.emplace(x->name, sig);
      if (!fresh && !(it->second == sig))
        throw Error(ErrorKind::UnsupportedSort, "function used with two signatures: " + x->name);
    }
    if (x->op == Op::Forall || x->op == Op::Exists) {
      std::set<std::string> inner = bound;
      for (const auto& [n, _] : x->bound) inner.insert(n);
      go(x->args[0], inner);
      return;
    }
    for (const auto& a : x->args) go(a, bound);
  };
  go(t, {});
}

bool has_quantifier(const TermPtr& t) {
  std::unordered_map<const Term*, bool> memo;
  std::function<bool(const TermPtr&)> go = [&](const TermPtr& x) -> bool {
    if (x->op == Op::Forall || x->op == Op::Exists) return true;
    if (auto it = memo.find(x.get()); it != memo.end()) return it->second;
    bool r = false;
    for (const auto& a : x->args) r = r || go(a);
    memo[x.get()] = r;
    return r;
  };
  return go(t);
}

bool has_nonlinear(const TermPtr& t) {
  std::unordered_map<const Term*, bool> memo;
  std::function<bool(const TermPtr&)> go = [&](const TermPtr& x) -> bool {
    if (auto it = memo.find(x.get()); it != memo.end()) return it->second;
    bool r = false;
    if ((x->op == Op::Mul || x->op == Op::Div || x->op == Op::Mod) && !is_int_lit(x->args[0]) &&
        !is_int_lit(x->args[1]))
      r = true;
    for (const auto& a : x->args) r = r || go(a);
    memo[x.get()] = r;
    return r;
  };
  return go(t);
}

size_t dag_size(const TermPtr& t) {
  std::unordered_map<const Term*, bool> seen;
  std::function<void(const TermPtr&)> go = [&](const TermPtr& x) {
    if (seen.count(x.get())) return;
    seen[x.get()] = true;
    for (const auto& a : x->args) go(a);
  };
  go(t);
  return seen.size();
}

std::string smt_symbol(const std::string& name) {
  bool simple = !name.empty() && !std::isdigit(static_cast<unsigned char>(name[0]));
  for (char c : name) {
    if (std::isalnum(static_cast<unsigned char>(c))) continue;
    if (std::string_view("~!@$%^&*_-+=<>.?/").find(c) == std::string_view::npos) simple = false;
  }
  return simple ? name : "|" + name + "|";
}

namespace {

std::string op_name(Op op) {
  switch (op) {
    case Op::Add: return "+";
    case Op::Sub: return "-";
    case Op::Mul: return "*";
    case Op::Div: return "div";
    case Op::Mod: return "mod";
    case Op::Neg: return "-";
    case Op::Lt: return "<";
    case Op::Le: return "<=";
    case Op::Gt: return ">";
    case Op::Ge: return ">=";
    case Op::Eq: return "=";
    case Op::Not: return "not";
    case Op::And: return "and";
    case Op::Or: return "or";
    case Op::Implies: return "=>";
    case Op::Ite: return "ite";
    case Op::Select: return "select";
    case Op::Store: return "store";
    default: return "?";
  }
}

void render(std::ostream& out, const TermPtr& t, const SharedNames* names, bool root) {
  if (names && !root) {
    auto it = names->find(t.get());
    if (it != names->end()) {
      out << it->second;
      return;
    }
  }
  switch (t->op) {
    case Op::IntLit:
      if (sgn(t->value) < 0) out << "(- " << Word(-t->value).get_str() << ")";
      else out << t->value.get_str();
      return;
    case Op::BoolLit: out << (t->bval ? "true" : "false"); return;
    case Op::Var: out << smt_symbol(t->name); return;
    case Op::Apply:
      if (t->args.empty()) {
        out << smt_symbol(t->name);
        return;
      }
      out << "(" << smt_symbol(t->name);
      for (const auto& a : t->args) {
        out << " ";
        render(out, a, names, false);
      }
      out << ")";
      return;
    case Op::Forall:
    case Op::Exists:
      out << (t->op == Op::Forall ? "(forall (" : "(exists (");
      for (size_t i = 0; i < t->bound.size(); ++i)
        out << (i ? " " : "") << "(" << smt_symbol(t->bound[i].first) << " " << smt_sort(t->bound[i].second) << ")";
      out << ") ";
      render(out, t->args[0], names, false);
      out << ")";
      return;
    default:
      out << "(" << op_name(t->op);
      for (const auto& a : t->args) {
        out << " ";
        render(out, a, names, false);
      }
      out << ")";
  }
}

}  // namespace

std::string to_smt(const TermPtr& t) {
  std::ostringstream out;
  render(out, t, nullptr, true);
  return out.str();
}

std::string to_smt(const TermPtr& t, const SharedNames& names) {
  std::ostringstream out;
  render(out, t, &names, true);
  return out.str();
}

}  // namespace yulverify::logic
