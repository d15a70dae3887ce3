#include "yulverify/solver.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <thread>
#include <unordered_set>

#include "json.hpp"

extern char** environ;

namespace yulverify::solver {

using namespace logic;

std::string_view to_string(Backend b) {
  switch (b) {
    case Backend::Z3: return "z3";
    case Backend::Z3Alt: return "z3-alt";
    case Backend::Cvc5: return "cvc5";
    case Backend::Cvc4: return "cvc4";
  }
  return "?";
}

std::optional<Backend> parse_backend(std::string_view name) {
  for (Backend b : {Backend::Z3, Backend::Z3Alt, Backend::Cvc5, Backend::Cvc4})
    if (to_string(b) == name) return b;
  return std::nullopt;
}

std::string_view to_string(Status s) {
  switch (s) {
    case Status::Verified: return "verified";
    case Status::Refuted: return "refuted";
    case Status::Unknown: return "unknown";
    case Status::Timeout: return "timeout";
    case Status::SolverError: return "solver-error";
  }
  return "?";
}

namespace {

std::optional<std::string> find_on_path(const std::string& exe) {
  const char* path = std::getenv("PATH");
  if (!path) return std::nullopt;
  std::stringstream ss(path);
  std::string dir;
  while (std::getline(ss, dir, ':')) {
    if (dir.empty()) continue;
    auto cand = std::filesystem::path(dir) / exe;
    if (::access(cand.c_str(), X_OK) == 0) return cand.string();
  }
  return std::nullopt;
}

}  // namespace

std::optional<SolverConfig> make_config(Backend b, double timeout) {
  if (timeout <= 0) throw Error(ErrorKind::SolverError, "timeout must be positive");
  std::string exe = b == Backend::Cvc5 ? "cvc5" : b == Backend::Cvc4 ? "cvc4" : "z3";
  auto path = find_on_path(exe);
  if (!path) return std::nullopt;
  SolverConfig cfg;
  cfg.backend = b;
  cfg.executable = *path;
  cfg.timeout = timeout;
  return cfg;
}

std::vector<SolverConfig> available_configs(double timeout) {
  std::vector<SolverConfig> out;
  for (Backend b : {Backend::Z3, Backend::Z3Alt, Backend::Cvc5, Backend::Cvc4})
    if (auto c = make_config(b, timeout)) out.push_back(*c);
  return out;
}

// ---------------------------------------------------------------------------
// S-expressions

std::string SExpr::str() const {
  if (atom) return text;
  std::string s = "(";
  for (size_t i = 0; i < items.size(); ++i) s += (i ? " " : "") + items[i].str();
  return s + ")";
}

std::vector<SExpr> parse_sexprs(std::string_view text) {
  std::vector<SExpr> stack(1, SExpr{false, "", {}});
  size_t i = 0;
  auto fail = [&](const std::string& why) {
    throw Error(ErrorKind::SolverError, "malformed s-expression: " + why + " at offset " + std::to_string(i));
  };
  while (i < text.size()) {
    char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (c == ';') {
      while (i < text.size() && text[i] != '\n') ++i;
    } else if (c == '(') {
      stack.push_back(SExpr{false, "", {}});
      ++i;
    } else if (c == ')') {
      if (stack.size() == 1) fail("unbalanced ')'");
      SExpr done = std::move(stack.back());
      stack.pop_back();
      stack.back().items.push_back(std::move(done));
      ++i;
    } else if (c == '|') {
      size_t end = text.find('|', i + 1);
      if (end == std::string_view::npos) fail("unterminated |symbol|");
      stack.back().items.push_back(SExpr{true, std::string(text.substr(i + 1, end - i - 1)), {}});
      i = end + 1;
    } else if (c == '"') {
      std::string s = "\"";
      ++i;
      for (;;) {
        if (i >= text.size()) fail("unterminated string");
        if (text[i] == '"') {
          if (i + 1 < text.size() && text[i + 1] == '"') {
            s += "\"\"";
            i += 2;
            continue;
          }
          ++i;
          break;
        }
        s += text[i++];
      }
      stack.back().items.push_back(SExpr{true, s + "\"", {}});
    } else {
      size_t start = i;
      while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i])) && text[i] != '(' &&
             text[i] != ')' && text[i] != ';')
        ++i;
      stack.back().items.push_back(SExpr{true, std::string(text.substr(start, i - start)), {}});
    }
  }
  if (stack.size() != 1) fail("unbalanced '('");
  return std::move(stack[0].items);
}

// ---------------------------------------------------------------------------
// Values and evaluation

Value Value::of_int(const Word& w) {
  Value v;
  v.kind = Int;
  v.num = w;
  return v;
}

Value Value::of_bool(bool b) {
  Value v;
  v.kind = Bool;
  v.flag = b;
  return v;
}

std::string Value::str() const {
  switch (kind) {
    case Int: return num.get_str();
    case Bool: return flag ? "true" : "false";
    case Array: {
      if (fn) return "(lambda ...)";
      std::string s = "{";
      for (const auto& [k, v] : entries) s += k.get_str() + ": " + v.str() + ", ";
      return s + "else: " + (fallback ? fallback->str() : "?") + "}";
    }
  }
  return "?";
}

namespace {

using Env = std::map<std::string, Value>;

bool is_numeral(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

class Evaluator {
 public:
  explicit Evaluator(const Model& m) : model_(m) {}

  std::optional<Value> eval(const SExpr& e, const Env& env) {
    if (e.atom) return atom(e.text, env);
    if (e.items.empty()) return std::nullopt;
    const SExpr& head = e.items[0];
    // ((as const (Array Int Int)) v)
    if (!head.atom) {
      if (head.items.size() == 3 && head.items[0].is("as") && head.items[1].is("const") && e.items.size() == 2) {
        auto v = eval(e.items[1], env);
        if (!v) return std::nullopt;
        Value arr;
        arr.kind = Value::Array;
        arr.fallback = std::make_shared<Value>(*v);
        return arr;
      }
      return std::nullopt;
    }
    const std::string& op = head.text;
    const size_t n = e.items.size() - 1;
    auto arg = [&](size_t i) { return eval(e.items[i + 1], env); };

    if (op == "_" && n == 2 && e.items[1].is("as-array")) {
      auto it = model_.funs.find(e.items[2].text);
      if (it == model_.funs.end()) return std::nullopt;
      return array_of(std::make_shared<FunDef>(it->second));
    }
    if (op == "lambda" && n == 2) {
      auto def = std::make_shared<FunDef>();
      for (const auto& p : e.items[1].items) {
        if (p.atom || p.items.empty()) return std::nullopt;
        def->params.push_back(p.items[0].text);
      }
      def->body = e.items[2];
      return array_of(def);
    }
    if ((op == "forall" || op == "exists") && n == 2) return quantifier(op == "forall", e, env);
    if (op == "let" && n == 2) {
      Env inner = env;
      for (const auto& b : e.items[1].items) {
        if (b.atom || b.items.size() != 2) return std::nullopt;
        auto v = eval(b.items[1], env);
        if (!v) return std::nullopt;
        inner[b.items[0].text] = *v;
      }
      return eval(e.items[2], inner);
    }
    if (op == "ite" && n == 3) {
      auto c = arg(0);
      if (!c || c->kind != Value::Bool) return std::nullopt;
      return arg(c->flag ? 1 : 2);
    }
    if (op == "and" || op == "or") {
      bool is_and = op == "and";
      bool unknown = false;
      for (size_t i = 0; i < n; ++i) {
        auto v = arg(i);
        if (!v || v->kind != Value::Bool) {
          unknown = true;
          continue;
        }
        if (v->flag != is_and) return Value::of_bool(!is_and);
      }
      if (unknown) return std::nullopt;
      return Value::of_bool(is_and);
    }
    if (op == "=>" && n == 2) {
      auto a = arg(0);
      if (a && a->kind == Value::Bool && !a->flag) return Value::of_bool(true);
      auto b = arg(1);
      if (b && b->kind == Value::Bool && b->flag) return Value::of_bool(true);
      if (!a || !b) return std::nullopt;
      return Value::of_bool(!a->flag || b->flag);
    }
    if (op == "not" && n == 1) {
      auto a = arg(0);
      if (!a || a->kind != Value::Bool) return std::nullopt;
      return Value::of_bool(!a->flag);
    }

    std::vector<Value> vs;
    for (size_t i = 0; i < n; ++i) {
      auto v = arg(i);
      if (!v) return std::nullopt;
      vs.push_back(std::move(*v));
    }
    auto ints = [&]() {
      return std::all_of(vs.begin(), vs.end(), [](const Value& v) { return v.kind == Value::Int; });
    };

    if (op == "=" || op == "distinct") {
      if (n < 2) return std::nullopt;
      bool all = true;
      for (size_t i = 1; i < n; ++i) {
        auto same = equal(vs[0], vs[i]);
        if (!same) return std::nullopt;
        all = all && *same;
      }
      if (op == "=") return Value::of_bool(all);
      if (n != 2) return std::nullopt;
      return Value::of_bool(!all);
    }
    if (op == "select" && n == 2) return select_value(vs[0], vs[1]);
    if (op == "store" && n == 3) {
      if (vs[0].kind != Value::Array || vs[1].kind != Value::Int) return std::nullopt;
      auto base = finite(vs[0]);
      if (!base) return std::nullopt;
      Value out = *base;
      auto it = std::find_if(out.entries.begin(), out.entries.end(), [&](const auto& p) { return p.first == vs[1].num; });
      if (it != out.entries.end()) it->second = vs[2];
      else out.entries.emplace_back(vs[1].num, vs[2]);
      return out;
    }
    if (!ints()) {
      if (auto it = model_.funs.find(op); it != model_.funs.end()) return call(it->second, vs);
      return std::nullopt;
    }
    if (op == "+") {
      Word s = 0;
      for (const auto& v : vs) s += v.num;
      return Value::of_int(s);
    }
    if (op == "*") {
      Word s = 1;
      for (const auto& v : vs) s *= v.num;
      return Value::of_int(s);
    }
    if (op == "-") {
      if (n == 1) return Value::of_int(-vs[0].num);
      Word s = vs[0].num;
      for (size_t i = 1; i < n; ++i) s -= vs[i].num;
      return Value::of_int(s);
    }
    if (op == "abs" && n == 1) return Value::of_int(abs(vs[0].num));
    if ((op == "div" || op == "mod") && n == 2) {
      if (sgn(vs[1].num) == 0) return std::nullopt;
      Word r, absb = abs(vs[1].num);
      mpz_fdiv_r(r.get_mpz_t(), vs[0].num.get_mpz_t(), absb.get_mpz_t());
      if (op == "mod") return Value::of_int(r);
      return Value::of_int(Word((vs[0].num - r) / vs[1].num));
    }
    if ((op == "<" || op == "<=" || op == ">" || op == ">=") && n >= 2) {
      bool ok = true;
      for (size_t i = 0; i + 1 < n; ++i) {
        int c = cmp(vs[i].num, vs[i + 1].num);
        ok = ok && (op == "<" ? c < 0 : op == "<=" ? c <= 0 : op == ">" ? c > 0 : c >= 0);
      }
      return Value::of_bool(ok);
    }
    if (auto it = model_.funs.find(op); it != model_.funs.end()) return call(it->second, vs);
    return std::nullopt;
  }

 private:
  const Model& model_;

  static void numerals(const SExpr& e, std::set<Word>& out) {
    if (e.atom) {
      if (is_numeral(e.text)) out.insert(Word(e.text));
      return;
    }
    for (const auto& c : e.items) numerals(c, out);
  }

  void support(const Value& v, std::set<Word>& out) {
    if (v.kind == Value::Int) out.insert(v.num);
    if (v.kind != Value::Array) return;
    if (auto f = finite(v)) {
      for (const auto& [k, x] : f->entries) {
        out.insert(k);
        support(x, out);
      }
      if (f->fallback) support(*f->fallback, out);
    }
  }

  // Integer quantifiers range over the model's finite support: array keys,
  // constants of the model and the body, their neighbours, and one fresh point.
  std::optional<Value> quantifier(bool universal, const SExpr& e, const Env& env) {
    std::vector<std::string> vars;
    for (const auto& b : e.items[1].items) {
      if (b.atom || b.items.size() != 2 || !b.items[1].is("Int")) return std::nullopt;
      vars.push_back(b.items[0].text);
    }
    std::set<Word> base;
    numerals(e.items[2], base);
    for (const auto& [_, v] : model_.consts) support(v, base);
    for (const auto& [_, def] : model_.funs) numerals(def.body, base);
    for (const auto& [_, v] : env) support(v, base);
    std::set<Word> points;
    for (const auto& w : base) {
      points.insert(w - 1);
      points.insert(w);
      points.insert(w + 1);
    }
    points.insert(base.empty() ? Word(0) : Word(*base.rbegin() + 7919));
    size_t combos = 1;
    for (size_t i = 0; i < vars.size(); ++i) {
      combos *= points.size();
      if (combos > 20000) return std::nullopt;
    }
    std::vector<Word> pts(points.begin(), points.end());
    std::vector<size_t> at(vars.size(), 0);
    bool unknown = false;
    for (;;) {
      Env inner = env;
      for (size_t i = 0; i < vars.size(); ++i) inner[vars[i]] = Value::of_int(pts[at[i]]);
      auto v = eval(e.items[2], inner);
      if (!v || v->kind != Value::Bool) unknown = true;
      else if (v->flag != universal) return Value::of_bool(!universal);
      size_t i = 0;
      while (i < at.size() && ++at[i] == pts.size()) at[i++] = 0;
      if (i == at.size()) break;
    }
    if (unknown) return std::nullopt;
    return Value::of_bool(universal);
  }

  static Value array_of(std::shared_ptr<const FunDef> def) {
    Value arr;
    arr.kind = Value::Array;
    arr.fn = std::move(def);
    return arr;
  }

  std::optional<Value> atom(const std::string& t, const Env& env) {
    if (auto it = env.find(t); it != env.end()) return it->second;
    if (is_numeral(t)) return Value::of_int(Word(t));
    if (t == "true") return Value::of_bool(true);
    if (t == "false") return Value::of_bool(false);
    if (auto it = model_.consts.find(t); it != model_.consts.end()) return it->second;
    if (auto it = model_.funs.find(t); it != model_.funs.end() && it->second.params.empty())
      return eval(it->second.body, {});
    return std::nullopt;
  }

  std::optional<Value> call(const FunDef& def, const std::vector<Value>& args) {
    if (def.params.size() != args.size()) return std::nullopt;
    Env env;
    for (size_t i = 0; i < args.size(); ++i) env[def.params[i]] = args[i];
    return eval(def.body, env);
  }

  std::optional<Value> select_value(const Value& arr, const Value& idx) {
    if (arr.kind != Value::Array || idx.kind != Value::Int) return std::nullopt;
    if (arr.fn) return call(*arr.fn, {idx});
    for (auto it = arr.entries.rbegin(); it != arr.entries.rend(); ++it)
      if (it->first == idx.num) return it->second;
    if (arr.fallback) return *arr.fallback;
    return std::nullopt;
  }

  // Explicit-point form of a function-backed array: an ite chain over `x = k`.
  std::optional<Value> finite(const Value& arr) {
    if (!arr.fn) return arr;
    if (arr.fn->params.size() != 1) return std::nullopt;
    const std::string& x = arr.fn->params[0];
    Value out;
    out.kind = Value::Array;
    const SExpr* cur = &arr.fn->body;
    while (!cur->atom && cur->items.size() == 4 && cur->items[0].is("ite")) {
      const SExpr* c = &cur->items[1];
      if (!c->atom && c->items.size() == 2 && c->items[0].is("and")) c = &c->items[1];
      if (c->atom || c->items.size() != 3 || !c->items[0].is("=")) return std::nullopt;
      const SExpr* k = c->items[1].is(x) ? &c->items[2] : c->items[2].is(x) ? &c->items[1] : nullptr;
      if (!k) return std::nullopt;
      auto kv = eval(*k, {});
      auto vv = eval(cur->items[2], {});
      if (!kv || !vv || kv->kind != Value::Int) return std::nullopt;
      // Earlier ite arms take precedence; later entries override, so insert at the front.
      out.entries.insert(out.entries.begin(), {kv->num, *vv});
      cur = &cur->items[3];
    }
    auto d = eval(*cur, {});
    if (!d) return std::nullopt;
    out.fallback = std::make_shared<Value>(*d);
    return out;
  }

  std::optional<bool> equal(const Value& a, const Value& b) {
    if (a.kind != b.kind) return std::nullopt;
    if (a.kind == Value::Int) return a.num == b.num;
    if (a.kind == Value::Bool) return a.flag == b.flag;
    auto fa = finite(a), fb = finite(b);
    if (!fa || !fb || !fa->fallback || !fb->fallback) return std::nullopt;
    std::vector<Word> keys;
    for (const auto& [k, _] : fa->entries) keys.push_back(k);
    for (const auto& [k, _] : fb->entries) keys.push_back(k);
    for (const auto& k : keys) {
      auto va = select_value(*fa, Value::of_int(k));
      auto vb = select_value(*fb, Value::of_int(k));
      if (!va || !vb) return std::nullopt;
      auto same = equal(*va, *vb);
      if (!same) return std::nullopt;
      if (!*same) return false;
    }
    return equal(*fa->fallback, *fb->fallback);
  }
};

Value default_value(Sort s) {
  switch (s) {
    case Sort::Int: return Value::of_int(0);
    case Sort::Bool: return Value::of_bool(false);
    case Sort::Array:
    case Sort::Array2: {
      Value arr;
      arr.kind = Value::Array;
      arr.fallback = std::make_shared<Value>(default_value(s == Sort::Array ? Sort::Int : Sort::Array));
      return arr;
    }
  }
  return Value::of_int(0);
}

}  // namespace

Model parse_model(const std::vector<SExpr>& sexprs) {
  Model m;
  std::vector<std::pair<std::string, SExpr>> bindings;
  std::function<void(const SExpr&)> scan = [&](const SExpr& e) {
    if (e.atom || e.items.empty()) return;
    if (e.items[0].is("error")) return;
    if (e.items[0].is("define-fun") && e.items.size() == 5) {
      FunDef def;
      for (const auto& p : e.items[2].items)
        if (!p.atom && !p.items.empty()) def.params.push_back(p.items[0].text);
      def.body = e.items[4];
      m.funs[e.items[1].text] = std::move(def);
      return;
    }
    // ((x 5) (y 6)) from get-value
    if (e.items.size() == 2 && e.items[0].atom && !e.items[0].is("model") && !e.items[0].is("define-fun")) {
      bindings.emplace_back(e.items[0].text, e.items[1]);
      return;
    }
    for (const auto& c : e.items) scan(c);
  };
  for (const auto& e : sexprs) scan(e);
  Evaluator ev(m);
  for (const auto& [name, def] : m.funs) {
    if (!def.params.empty()) continue;
    if (auto v = ev.eval(def.body, {})) m.consts[name] = *v;
  }
  for (const auto& [name, e] : bindings)
    if (auto v = ev.eval(e, {})) m.consts[name] = *v;
  return m;
}

std::optional<Value> evaluate(const TermPtr& t, const Model& m) {
  auto parsed = parse_sexprs(to_smt(t));
  if (parsed.size() != 1) return std::nullopt;
  return Evaluator(m).eval(parsed[0], {});
}

std::optional<bool> validate_model(const vcgen::Obligation& ob, const Model& m) {
  std::map<std::string, Sort> consts;
  std::map<std::string, FunSig> funs;
  for (const auto& [_, h] : ob.hypotheses) collect_symbols(h, consts, funs);
  collect_symbols(ob.goal, consts, funs);
  Model full = m;
  for (const auto& [name, s] : consts)
    if (!full.consts.count(name) && !full.funs.count(name)) full.consts[name] = default_value(s);
  for (const auto& [_, h] : ob.hypotheses) {
    auto v = evaluate(h, full);
    if (!v) {
      if (has_quantifier(h)) continue;
      return std::nullopt;
    }
    if (v->kind != Value::Bool || !v->flag) return false;
  }
  auto g = evaluate(ob.goal, full);
  if (!g || g->kind != Value::Bool) return std::nullopt;
  return !g->flag;
}

// ---------------------------------------------------------------------------
// Emission

namespace {

std::string one_line(std::string s) {
  for (char& c : s)
    if (c == '\n' || c == '\r') c = ' ';
  return s;
}

struct Sharing {
  std::vector<TermPtr> order;  // definition order
  SharedNames names;
};

Sharing find_shared(const std::vector<TermPtr>& roots) {
  std::set<std::string> bound_names;
  std::unordered_map<const Term*, int> parents;
  std::unordered_set<const Term*> seen;
  std::function<void(const TermPtr&)> count = [&](const TermPtr& t) {
    if (!seen.insert(t.get()).second) return;
    for (const auto& b : t->bound) bound_names.insert(b.first);
    for (const auto& a : t->args) {
      ++parents[a.get()];
      count(a);
    }
  };
  for (const auto& r : roots) count(r);

  std::unordered_map<const Term*, bool> open;
  std::function<bool(const TermPtr&)> mentions_bound = [&](const TermPtr& t) {
    if (auto it = open.find(t.get()); it != open.end()) return it->second;
    bool r = t->op == Op::Var && bound_names.count(t->name);
    for (const auto& a : t->args) r = mentions_bound(a) || r;
    open[t.get()] = r;
    return r;
  };

  Sharing sh;
  std::unordered_set<const Term*> done;
  std::function<void(const TermPtr&)> visit = [&](const TermPtr& t) {
    if (!done.insert(t.get()).second) return;
    for (const auto& a : t->args) visit(a);
    bool leaf = t->op == Op::IntLit || t->op == Op::BoolLit || t->op == Op::Var ||
                (t->op == Op::Apply && t->args.empty());
    if (!leaf && parents[t.get()] >= 2 && !mentions_bound(t)) {
      sh.names[t.get()] = "%s" + std::to_string(sh.order.size());
      sh.order.push_back(t);
    }
  };
  for (const auto& r : roots) visit(r);
  return sh;
}

}  // namespace

std::string emit_smtlib(const vcgen::Obligation& ob, const EmitOptions& opts) {
  std::vector<TermPtr> roots;
  for (const auto& [_, h] : ob.hypotheses) roots.push_back(h);
  roots.push_back(lnot(ob.goal));

  std::map<std::string, Sort> consts;
  std::map<std::string, FunSig> funs;
  bool quantified = false;
  for (const auto& r : roots) {
    if (r->sort != Sort::Bool) throw Error(ErrorKind::UnsupportedSort, "assertion is not boolean in " + ob.id);
    collect_symbols(r, consts, funs);
    quantified = quantified || has_quantifier(r);
  }
  for (const auto& [name, _] : funs)
    if (consts.count(name)) throw Error(ErrorKind::UnsupportedSort, "symbol used with two sorts: " + name);
  if (opts.logic == Logic::QuantifierFree && quantified)
    throw Error(ErrorKind::UnsupportedSort, "quantified obligation under a quantifier-free logic: " + ob.id);
  bool first_order = opts.logic == Logic::FirstOrder || (opts.logic == Logic::Auto && quantified);

  std::ostringstream out;
  out << "; " << ob.id << " [" << vcgen::to_string(ob.kind) << ", " << vcgen::to_string(ob.property_type) << "] at "
      << ob.origin.str() << "\n";
  if (!ob.label.empty()) out << "; " << one_line(ob.label) << "\n";
  out << "(set-option :produce-models true)\n";
  out << "(set-logic " << (first_order ? "AUFNIA" : "QF_AUFNIA") << ")\n";
  for (const auto& [name, s] : consts) out << "(declare-fun " << smt_symbol(name) << " () " << smt_sort(s) << ")\n";
  for (const auto& [name, sig] : funs) {
    out << "(declare-fun " << smt_symbol(name) << " (";
    for (size_t i = 0; i < sig.args.size(); ++i) out << (i ? " " : "") << smt_sort(sig.args[i]);
    out << ") " << smt_sort(sig.result) << ")\n";
  }
  SharedNames none;
  Sharing sh;
  if (opts.share) sh = find_shared(roots);
  for (const auto& t : sh.order)
    out << "(define-fun " << sh.names.at(t.get()) << " () " << smt_sort(t->sort) << " " << to_smt(t, sh.names)
        << ")\n";
  for (size_t i = 0; i < ob.hypotheses.size(); ++i)
    out << "; " << ob.hypotheses[i].first << "\n(assert " << to_smt(roots[i], opts.share ? sh.names : none) << ")\n";
  out << "; negated goal\n(assert " << to_smt(roots.back(), opts.share ? sh.names : none) << ")\n";
  out << "(check-sat)\n(get-model)\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// Processes

namespace {

std::vector<std::string> backend_args(const SolverConfig& cfg, const std::string& file) {
  switch (cfg.backend) {
    case Backend::Z3: return {cfg.executable, "-smt2", file};
    case Backend::Z3Alt: return {cfg.executable, "-smt2", "smt.arith.solver=2", "smt.random_seed=7", file};
    case Backend::Cvc5:
    case Backend::Cvc4: return {cfg.executable, "--lang=smt2", file};
  }
  return {};
}

struct ProcResult {
  bool timed_out = false;
  int exit_status = -1;
  std::string output;
};

ProcResult run_process(const std::vector<std::string>& args, double timeout) {
  int fds[2];
  if (::pipe2(fds, O_CLOEXEC) != 0) throw Error(ErrorKind::SolverError, "pipe failed");
  posix_spawn_file_actions_t fa;
  posix_spawn_file_actions_init(&fa);
  posix_spawn_file_actions_adddup2(&fa, fds[1], 1);
  posix_spawn_file_actions_adddup2(&fa, fds[1], 2);
  std::vector<char*> argv;
  for (const auto& a : args) argv.push_back(const_cast<char*>(a.c_str()));
  argv.push_back(nullptr);
  pid_t pid = 0;
  int rc = ::posix_spawn(&pid, args[0].c_str(), &fa, nullptr, argv.data(), environ);
  posix_spawn_file_actions_destroy(&fa);
  ::close(fds[1]);
  if (rc != 0) {
    ::close(fds[0]);
    throw Error(ErrorKind::SolverError, "cannot start " + args[0] + ": " + std::strerror(rc));
  }

  ProcResult res;
  auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(timeout);
  char buf[4096];
  for (;;) {
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) {
      res.timed_out = true;
      break;
    }
    pollfd p{fds[0], POLLIN, 0};
    int pr = ::poll(&p, 1, static_cast<int>(left.count()));
    if (pr < 0 && errno == EINTR) continue;
    if (pr == 0) continue;
    ssize_t n = ::read(fds[0], buf, sizeof buf);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) break;
    res.output.append(buf, static_cast<size_t>(n));
  }
  ::close(fds[0]);
  if (res.timed_out) ::kill(pid, SIGKILL);
  int status = 0;
  while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  res.exit_status = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return res;
}

}  // namespace

Verdict run_script(const std::string& script, const SolverConfig& cfg) {
  Verdict v;
  v.backend = cfg.name();
  auto start = std::chrono::steady_clock::now();
  char path[] = "/tmp/yulverify-XXXXXX.smt2";
  int fd = ::mkstemps(path, 5);
  if (fd < 0) throw Error(ErrorKind::IoError, "cannot create a temporary script file");
  {
    size_t off = 0;
    while (off < script.size()) {
      ssize_t n = ::write(fd, script.data() + off, script.size() - off);
      if (n <= 0) {
        ::close(fd);
        ::unlink(path);
        throw Error(ErrorKind::IoError, std::string("cannot write ") + path);
      }
      off += static_cast<size_t>(n);
    }
    ::close(fd);
  }
  ProcResult pr;
  try {
    pr = run_process(backend_args(cfg, path), cfg.timeout);
  } catch (...) {
    ::unlink(path);
    throw;
  }
  ::unlink(path);
  v.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (pr.timed_out) {
    v.status = Status::Timeout;
    v.message = "deadline of " + std::to_string(cfg.timeout) + "s exceeded";
    return v;
  }

  std::vector<SExpr> parsed;
  try {
    parsed = parse_sexprs(pr.output);
  } catch (const Error&) {
    v.status = Status::SolverError;
    v.message = one_line(pr.output);
    return v;
  }
  size_t at = 0;
  while (at < parsed.size() && !parsed[at].atom) ++at;
  std::string answer = at < parsed.size() ? parsed[at].text : "";
  if (answer == "unsat") {
    v.status = Status::Verified;
  } else if (answer == "sat") {
    v.status = Status::Refuted;
    v.model = parse_model(std::vector<SExpr>(parsed.begin() + static_cast<long>(at) + 1, parsed.end()));
  } else if (answer == "unknown") {
    v.status = Status::Unknown;
  } else if (answer == "timeout") {
    v.status = Status::Timeout;
  } else {
    v.status = Status::SolverError;
    v.message = "exit " + std::to_string(pr.exit_status) + ": " + one_line(pr.output);
  }
  return v;
}

Verdict discharge(const vcgen::Obligation& ob, const SolverConfig& cfg) {
  EmitOptions opts;
  opts.logic = cfg.logic;
  return run_script(emit_smtlib(ob, opts), cfg);
}

std::vector<Verdict> discharge_all(const std::vector<vcgen::Obligation>& obs, const SolverConfig& cfg,
                                   unsigned jobs) {
  std::vector<Verdict> out(obs.size());
  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (size_t i = next++; i < obs.size(); i = next++) {
      try {
        out[i] = discharge(obs[i], cfg);
      } catch (const Error& e) {
        out[i].status = Status::SolverError;
        out[i].backend = cfg.name();
        out[i].message = e.what();
      }
    }
  };
  size_t width = std::max<size_t>(1, std::min<size_t>(jobs, obs.size()));
  std::vector<std::thread> pool;
  for (size_t i = 0; i < width; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return out;
}

// ---------------------------------------------------------------------------
// Deferred export

std::string DeferredManifest::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& e : entries)
    arr.push_back({{"id", e.id},
                   {"file", e.file},
                   {"theorem", e.theorem},
                   {"function", e.function},
                   {"kind", e.kind},
                   {"property_type", e.property_type},
                   {"origin", e.origin.str()},
                   {"label", e.label}});
  return nlohmann::json{{"obligations", arr}}.dump(2) + "\n";
}

namespace {

bool is_axiom(const std::string& hyp) {
  return hyp.rfind("range.", 0) != 0 && hyp.rfind("requires.", 0) != 0;
}

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

}  // namespace

std::string render_deferred(const vcgen::Obligation& ob, const std::string& theorem) {
  std::map<std::string, Sort> consts;
  std::map<std::string, FunSig> funs;
  for (const auto& [_, h] : ob.hypotheses) collect_symbols(h, consts, funs);
  collect_symbols(ob.goal, consts, funs);
  const std::string body = ob.function + "'def";
  consts[body] = Sort::Bool;

  std::set<std::string> sorts{"Bool", "Int"};
  for (const auto& [_, s] : consts) sorts.insert(smt_sort(s));
  for (const auto& [_, sig] : funs) {
    sorts.insert(smt_sort(sig.result));
    for (Sort s : sig.args) sorts.insert(smt_sort(s));
  }

  std::ostringstream out;
  out << "; " << one_line(ob.label) << "\n";
  out << "(theorem " << smt_symbol(theorem) << "\n";
  out << "  (id " << quoted(ob.id) << ")\n";
  out << "  (origin " << quoted(ob.origin.str()) << ")\n";
  out << "  (sorts";
  for (const auto& s : sorts) out << " " << s;
  out << ")\n  (constants";
  for (const auto& [name, s] : consts) out << "\n    (" << smt_symbol(name) << " " << smt_sort(s) << ")";
  out << ")\n  (functions";
  for (const auto& [name, sig] : funs) {
    out << "\n    (" << smt_symbol(name) << " (";
    for (size_t i = 0; i < sig.args.size(); ++i) out << (i ? " " : "") << smt_sort(sig.args[i]);
    out << ") " << smt_sort(sig.result) << ")";
  }
  out << ")\n";
  out << "  (axiom " << smt_symbol(body) << " (= " << smt_symbol(body) << " " << to_smt(ob.goal) << "))\n";
  for (const auto& [name, h] : ob.hypotheses)
    if (is_axiom(name)) out << "  (axiom " << smt_symbol(name) << " " << to_smt(h) << ")\n";
  out << "  (hypotheses";
  for (const auto& [name, h] : ob.hypotheses)
    if (!is_axiom(name)) out << "\n    (" << smt_symbol(name) << " " << to_smt(h) << ")";
  out << ")\n  (goal " << smt_symbol(body) << "))\n";
  return out.str();
}

DeferredManifest deferred_manifest(const std::vector<vcgen::Obligation>& obs) {
  for (const auto& ob : obs)
    if (!ob.deferred)
      throw Error(ErrorKind::PreconditionViolation, "obligation " + ob.id + " is not deferred", ob.origin);
  std::map<std::string, int> total, seen;
  for (const auto& ob : obs) ++total[ob.function];
  DeferredManifest m;
  for (const auto& ob : obs) {
    int k = ++seen[ob.function];
    std::string theorem = ob.function + "'vc" + (total[ob.function] > 1 ? std::to_string(k) : "");
    m.entries.push_back({ob.id, ob.id + ".sexp", theorem, ob.function, std::string(vcgen::to_string(ob.kind)),
                         std::string(vcgen::to_string(ob.property_type)), ob.origin, ob.label});
  }
  return m;
}

DeferredManifest export_deferred(const std::vector<vcgen::Obligation>& obs, const std::filesystem::path& dir) {
  DeferredManifest m = deferred_manifest(obs);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::IoError, "cannot create " + dir.string() + ": " + ec.message());
  for (size_t i = 0; i < obs.size(); ++i) {
    const auto& e = m.entries[i];
    std::ofstream f(dir / e.file);
    f << render_deferred(obs[i], e.theorem);
    if (!f) throw Error(ErrorKind::IoError, "cannot write " + (dir / e.file).string());
  }
  std::ofstream mf(dir / "manifest.json");
  mf << m.to_json();
  if (!mf) throw Error(ErrorKind::IoError, "cannot write " + (dir / "manifest.json").string());
  return m;
}

}  // namespace yulverify::solver
