#include "yulverify/vcgen.hpp"

#include <algorithm>
#include <functional>

namespace yulverify::vcgen {

using namespace logic;
using vir::VExprPtr;
using vir::VirFunction;

std::string_view to_string(ObKind k) {
  switch (k) {
    case ObKind::Post: return "post";
    case ObKind::Assert: return "assert";
    case ObKind::InvInit: return "inv-init";
    case ObKind::InvPreserve: return "inv-preserve";
    case ObKind::Meta: return "meta";
    case ObKind::Overflow: return "overflow";
    case ObKind::EcfConsistency: return "ecf";
  }
  return "?";
}

std::string_view to_string(PropType t) {
  static const char* names[] = {"T1", "T2", "T3", "T4", "T5", "T6"};
  return names[static_cast<int>(t)];
}

TermPtr Obligation::formula() const {
  std::vector<TermPtr> hs;
  for (const auto& [_, h] : hypotheses) hs.push_back(h);
  return implies(land(hs), goal);
}

std::string local_name(const std::string& name) { return "l." + (name == vir::kRetCell ? std::string("result") : name); }
std::string entry_name(const std::string& param) { return "entry." + param; }
std::string old_name(const std::string& cell) { return "old." + cell; }

std::string env_name(spec::EnvVar v) {
  switch (v) {
    case spec::EnvVar::Caller: return "env.caller";
    case spec::EnvVar::CallValue: return "env.callvalue";
    case spec::EnvVar::Timestamp: return "env.timestamp";
    case spec::EnvVar::Address: return "env.address";
  }
  return "env.?";
}

namespace {

bool has_contract(const yul::YulUnit& unit, const yul::YulFunction& f) {
  for (const auto& s : f.specs)
    if (s.kind == spec::Directive::Pre || s.kind == spec::Directive::Post) return true;
  return unit.is_public(f) && !unit.meta_specs.empty();
}

Sort cell_sort(const VcContext& ctx, const std::string& cell) {
  if (cell == "mem") return Sort::Array;
  for (const auto& c : ctx.cells)
    if (c.name == cell) return c.sort;
  return cell.rfind("len_", 0) == 0 ? Sort::Int : Sort::Array;
}

std::vector<std::string> all_cells(const VcContext& ctx) {
  std::vector<std::string> out;
  for (const auto& c : ctx.cells) out.push_back(c.name);
  out.push_back("mem");
  return out;
}

Word slot_literal(const VExprPtr& e, const std::string& op, Span span) {
  auto* lit = std::get_if<vir::VLit>(&e->node);
  if (!lit) throw Error(ErrorKind::UnsupportedConstruct, op + " needs a literal slot", span);
  return lit->value;
}

// Direct effects of one function body.
struct Summary {
  std::set<std::string> writes;
  std::set<std::string> callees;
  bool reverts = false;
  bool external = false;
};

void summarize(const VExprPtr& e, Summary& s) {
  if (!e) return;
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, vir::VCall>) {
          for (const auto& a : n.args) summarize(a, s);
          if (n.kind == vir::CallKind::Internal) s.callees.insert(n.callee);
          else if (n.kind == vir::CallKind::External) s.external = true;
          else if (n.opcode) {
            auto slot = [&] { return hex_slot(slot_literal(n.args[0], n.callee, e->span)); };
            switch (*n.opcode) {
              case evm::Opcode::Sstore: s.writes.insert("storage"); break;
              case evm::Opcode::Mstore: s.writes.insert("mem"); break;
              case evm::Opcode::MappingStore: case evm::Opcode::MappingStore2: s.writes.insert("map_" + slot()); break;
              case evm::Opcode::ArrayStore: s.writes.insert("arr_" + slot()); break;
              case evm::Opcode::ArrayPush:
                s.writes.insert("arr_" + slot());
                s.writes.insert("len_" + slot());
                break;
              case evm::Opcode::Revert: s.reverts = true; break;
              default: break;
            }
          }
        } else if constexpr (std::is_same_v<T, vir::VSeq>) {
          for (const auto& i : n.items) summarize(i, s);
        } else if constexpr (std::is_same_v<T, vir::VLet>) {
          summarize(n.init, s);
        } else if constexpr (std::is_same_v<T, vir::VAssign>) {
          summarize(n.value, s);
        } else if constexpr (std::is_same_v<T, vir::VIf>) {
          summarize(n.cond, s);
          summarize(n.then, s);
        } else if constexpr (std::is_same_v<T, vir::VMatch>) {
          summarize(n.scrutinee, s);
          for (const auto& [_, a] : n.cases) summarize(a, s);
          summarize(n.default_arm, s);
        } else if constexpr (std::is_same_v<T, vir::VWhile>) {
          summarize(n.cond, s);
          summarize(n.body, s);
        } else if constexpr (std::is_same_v<T, vir::VTry>) {
          summarize(n.body, s);
          summarize(n.handler, s);
        }
      },
      e->node);
}

// Locals assigned anywhere inside an expression (loop havoc set).
void assigned_locals(const VExprPtr& e, std::set<std::string>& out) {
  if (!e) return;
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, vir::VSeq>) {
          for (const auto& i : n.items) assigned_locals(i, out);
        } else if constexpr (std::is_same_v<T, vir::VLet>) {
          out.insert(n.name);
          if (!n.snapshot.empty()) out.insert(n.snapshot);
        } else if constexpr (std::is_same_v<T, vir::VAssign>) {
          out.insert(n.name);
          if (!n.snapshot.empty()) out.insert(n.snapshot);
        } else if constexpr (std::is_same_v<T, vir::VIf>) {
          assigned_locals(n.then, out);
        } else if constexpr (std::is_same_v<T, vir::VMatch>) {
          for (const auto& [_, a] : n.cases) assigned_locals(a, out);
          assigned_locals(n.default_arm, out);
        } else if constexpr (std::is_same_v<T, vir::VWhile>) {
          assigned_locals(n.body, out);
        } else if constexpr (std::is_same_v<T, vir::VTry>) {
          assigned_locals(n.body, out);
          assigned_locals(n.handler, out);
        }
      },
      e->node);
}

struct Analysis {
  std::map<std::string, std::set<std::string>> writes;
  std::map<std::string, bool> reverts;
};

Analysis analyse(const VcContext& ctx) {
  std::map<std::string, Summary> direct;
  for (const auto& [name, f] : ctx.plain) summarize(f.body, direct[name]);
  Analysis a;
  for (const auto& [name, s] : direct) {
    a.writes[name] = s.writes;
    if (s.external)
      for (const auto& c : ctx.cells) a.writes[name].insert(c.name);
    a.reverts[name] = s.reverts;
  }
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& [name, s] : direct) {
      for (const auto& c : s.callees) {
        for (const auto& w : a.writes[c]) changed |= a.writes[name].insert(w).second;
        if (a.reverts[c] && !a.reverts[name]) {
          a.reverts[name] = true;
          changed = true;
        }
      }
    }
  }
  return a;
}

bool is_boolean_shaped(const TermPtr& t) {
  if (t->op == Op::IntLit) return t->value == 0 || t->value == 1;
  return t->op == Op::Ite && t->args[1]->op == Op::IntLit && t->args[2]->op == Op::IntLit &&
         t->args[1]->value == 1 && t->args[2]->value == 0;
}

// Truncating division and remainder with EVM's zero-divisor convention.
TermPtr evm_div(const TermPtr& a, const TermPtr& b) {
  TermPtr q = ite(ge(a, int_lit(0)), div(a, b), neg(div(neg(a), b)));
  return ite(eq(b, int_lit(0)), int_lit(0), q);
}

TermPtr evm_mod(const TermPtr& a, const TermPtr& b) {
  TermPtr absb = ite(ge(b, int_lit(0)), b, neg(b));
  TermPtr r = ite(ge(a, int_lit(0)), mod(a, absb), neg(mod(neg(a), absb)));
  return ite(eq(b, int_lit(0)), int_lit(0), r);
}

}  // namespace

// ---------------------------------------------------------------- context

VcContext build_context(const yul::YulUnit& unit, const std::map<std::string, vir::EcfAnswer>& ecf,
                        std::optional<unsigned> wrap_bits) {
  VcContext ctx;
  ctx.unit = &unit;
  ctx.wrap_bits = wrap_bits;
  ctx.cells = vir::unit_cells(unit);
  for (const auto& f : unit.functions) ctx.plain[f.name] = vir::translate_function(f, unit);
  for (const auto& f : unit.functions) {
    VirFunction v = vir::expand_meta(unit.meta_specs, ctx.plain[f.name]);
    if (f.has_check(spec::Pattern::Overflow)) v = vir::expand_overflow_checks(v, unit.widths, ctx.word_bits());
    ctx.functions[f.name] = v;
  }
  for (auto& [name, v] : ctx.functions) v = vir::insert_ecf_axioms(v, ecf, ctx.cells, reachable_external_sites(ctx, name));
  return ctx;
}

std::vector<vir::ExternalSite> reachable_external_sites(const VcContext& ctx, const std::string& fn) {
  std::vector<vir::ExternalSite> out;
  std::set<std::string> seen;
  std::function<void(const std::string&)> go = [&](const std::string& name) {
    if (!seen.insert(name).second) return;
    auto it = ctx.plain.find(name);
    if (it == ctx.plain.end()) return;
    for (const auto& s : it->second.external_sites) out.push_back(s);
    Summary s;
    summarize(it->second.body, s);
    for (const auto& c : s.callees) {
      const auto* yf = ctx.unit ? ctx.unit->find(c) : nullptr;
      if (yf && !has_contract(*ctx.unit, *yf)) go(c);
    }
  };
  go(fn);
  return out;
}

std::set<std::string> write_set(const VcContext& ctx, const std::string& fn) {
  Analysis a = analyse(ctx);
  return a.writes[fn];
}

bool may_revert(const VcContext& ctx, const std::string& fn) {
  Analysis a = analyse(ctx);
  return a.reverts[fn];
}

// ---------------------------------------------------------------- forms

namespace {

class FormLowerer {
 public:
  explicit FormLowerer(const FormEnv& env) : env_(env) {}

  TermPtr form(const spec::FormPtr& f, bool entry) {
    return std::visit(
        [&](const auto& n) -> TermPtr {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, spec::ExprForm>) {
            return boolean(n.expr, entry);
          } else if constexpr (std::is_same_v<T, spec::StatusForm>) {
            return bool_lit(n.status == env_.status);
          } else if constexpr (std::is_same_v<T, spec::Not>) {
            return lnot(form(n.operand, entry));
          } else if constexpr (std::is_same_v<T, spec::And>) {
            return land(form(n.lhs, entry), form(n.rhs, entry));
          } else if constexpr (std::is_same_v<T, spec::Or>) {
            return lor(form(n.lhs, entry), form(n.rhs, entry));
          } else if constexpr (std::is_same_v<T, spec::Implies>) {
            bool status_rhs = std::holds_alternative<spec::StatusForm>(n.rhs->node);
            return implies(form(n.lhs, entry || status_rhs), form(n.rhs, entry));
          } else {
            std::vector<std::pair<std::string, Sort>> bound;
            std::vector<TermPtr> guards;
            for (const auto& b : n.binders) {
              bound.emplace_back(b.name, Sort::Int);
              auto v = var(b.name, Sort::Int);
              if (b.sort == "address") guards.push_back(in_range(v, 160));
              else if (b.sort.rfind("uint", 0) == 0) {
                unsigned bits = b.sort.size() > 4 ? static_cast<unsigned>(std::stoul(b.sort.substr(4))) : 256;
                guards.push_back(in_range(v, bits));
              } else if (b.sort == "nat") {
                guards.push_back(ge(v, int_lit(0)));
              }
            }
            TermPtr body = form(n.body, entry);
            TermPtr g = land(guards);
            if (n.kind == spec::QuantKind::Forall) return forall(bound, implies(g, body));
            return exists(bound, land(g, body));
          }
        },
        f->node);
  }

  TermPtr boolean(const spec::ExprPtr& e, bool entry) {
    if (auto* b = std::get_if<spec::Binary>(&e->node); b && spec::is_comparison(b->op)) {
      TermPtr l = integer(b->lhs, entry);
      TermPtr r = integer(b->rhs, entry);
      switch (b->op) {
        case spec::BinOp::Eq: return eq(l, r);
        case spec::BinOp::Ne: return lnot(eq(l, r));
        case spec::BinOp::Lt: return lt(l, r);
        case spec::BinOp::Le: return le(l, r);
        case spec::BinOp::Gt: return gt(l, r);
        case spec::BinOp::Ge: return ge(l, r);
        default: break;
      }
    }
    if (auto* a = std::get_if<spec::Apply>(&e->node); a && is_predicate(a->fn)) {
      std::vector<TermPtr> args;
      for (const auto& x : a->args) args.push_back(integer(x, entry));
      return apply(a->fn, args, Sort::Bool);
    }
    if (auto* id = std::get_if<spec::Ident>(&e->node);
        id && id->binding == spec::Binding::Symbol && is_predicate(id->name))
      return apply(id->name, {}, Sort::Bool);
    return truthy(integer(e, entry));
  }

  TermPtr integer(const spec::ExprPtr& e, bool entry) {
    return std::visit(
        [&](const auto& n) -> TermPtr {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, spec::Num>) {
            return int_lit(n.value);
          } else if constexpr (std::is_same_v<T, spec::Ident>) {
            return ident(n, entry, e->span);
          } else if constexpr (std::is_same_v<T, spec::Neg>) {
            return neg(integer(n.operand, entry));
          } else if constexpr (std::is_same_v<T, spec::Binary>) {
            if (spec::is_comparison(n.op)) return as_int(boolean(e, entry));
            TermPtr l = integer(n.lhs, entry);
            TermPtr r = integer(n.rhs, entry);
            switch (n.op) {
              case spec::BinOp::Add: return add(l, r);
              case spec::BinOp::Sub: return sub(l, r);
              case spec::BinOp::Mul: return mul(l, r);
              case spec::BinOp::Div: return div(l, r);
              case spec::BinOp::Mod: return mod(l, r);
              default: return l;
            }
          } else if constexpr (std::is_same_v<T, spec::Apply>) {
            std::vector<TermPtr> args;
            for (const auto& x : n.args) args.push_back(integer(x, entry));
            if (is_predicate(n.fn)) return as_int(apply(n.fn, args, Sort::Bool));
            return apply(n.fn, args, Sort::Int);
          } else if constexpr (std::is_same_v<T, spec::Accessor>) {
            return accessor(n, entry, e->span);
          } else if constexpr (std::is_same_v<T, spec::EnvRef>) {
            return var(env_name(n.var), Sort::Int);
          } else {
            throw Error(ErrorKind::UnsupportedConstruct, "cannot lower `" + spec::print(e) + "`", e->span);
          }
        },
        e->node);
  }

 private:
  bool is_predicate(const std::string& fn) const { return env_.predicates && env_.predicates->count(fn); }

  TermPtr ident(const spec::Ident& id, bool entry, Span span) {
    switch (id.binding) {
      case spec::Binding::Local:
        if (!env_.ret_source.empty() && id.name == env_.ret_source) return var(env_.local(vir::kRetCell), Sort::Int);
        return var(env_.local(id.name), Sort::Int);
      case spec::Binding::Param:
        if (id.old || entry || env_.entry) return var(entry_name(id.name), Sort::Int);
        return var(env_.local(id.name), Sort::Int);
      case spec::Binding::Result: return var(env_.local(vir::kRetCell), Sort::Int);
      case spec::Binding::Binder: return var(id.name, Sort::Int);
      case spec::Binding::Symbol: return apply(id.name, {}, Sort::Int);
      case spec::Binding::Env: {
        static const std::map<std::string, spec::EnvVar> names = {{"msg.sender", spec::EnvVar::Caller},
                                                                   {"msg.value", spec::EnvVar::CallValue},
                                                                   {"block.timestamp", spec::EnvVar::Timestamp},
                                                                   {"this", spec::EnvVar::Address}};
        if (auto it = names.find(id.name); it != names.end()) return var(env_name(it->second), Sort::Int);
        break;
      }
      case spec::Binding::State:
        throw Error(ErrorKind::NoLayout, "state variable `" + id.name + "` has no storage layout", span);
      default: break;
    }
    throw Error(ErrorKind::UnboundIdentifier, "unbound identifier `" + id.name + "`", span);
  }

  TermPtr accessor(const spec::Accessor& a, bool entry, Span) {
    bool at_entry = a.old || entry || env_.entry;
    auto cell = [&](const std::string& name, Sort s) { return var(at_entry ? old_name(name) : name, s); };
    std::vector<TermPtr> args;
    for (const auto& x : a.args) args.push_back(integer(x, entry));
    std::string slot = hex_slot(a.slot);
    if (a.kind == spec::AccessorKind::Meta) return cell("len_" + slot, Sort::Int);
    switch (a.state) {
      case spec::StateKind::Scalar: return select(cell("storage", Sort::Array), int_lit(a.slot));
      case spec::StateKind::DynArray: {
        TermPtr arr = cell("arr_" + slot, Sort::Array);
        return args.empty() ? arr : select(arr, args[0]);
      }
      case spec::StateKind::Mapping: {
        int depth = 1;
        if (env_.layout)
          for (const auto& l : *env_.layout)
            if (l.id == a.slot && l.kind == spec::StateKind::Mapping) depth = l.depth;
        if (args.size() > 1) depth = static_cast<int>(args.size());
        TermPtr m = cell("map_" + slot, depth >= 2 ? Sort::Array2 : Sort::Array);
        for (const auto& k : args) m = select(m, k);
        return m;
      }
    }
    return int_lit(0);
  }

 private:
  const FormEnv& env_;
};

}  // namespace

TermPtr lower_form(const spec::FormPtr& f, const FormEnv& env) {
  return FormLowerer(env).form(f, false);
}

TermPtr lower_expr(const spec::ExprPtr& e, const FormEnv& env) {
  return FormLowerer(env).integer(e, false);
}

// ---------------------------------------------------------------- weakest preconditions

namespace {

struct CheckDesc {
  ObKind kind = ObKind::Assert;
  PropType type = PropType::T1;
  bool deferred = false;
  Span span;
  std::string label;
};

PropType user_type(const spec::FormPtr& f) {
  return spec::mentions_env(f, spec::EnvVar::Caller) && spec::mentions_status(f) ? PropType::T2 : PropType::T1;
}

class WpGen {
 public:
  using K = std::function<TermPtr(const TermPtr&)>;

  WpGen(const VcContext& ctx, const Analysis& an, const VirFunction* top, int focus, int first_dynamic)
      : ctx_(ctx), an_(an), top_(top), focus_(focus), next_(first_dynamic) {
    frames_.push_back({"", top});
  }

  std::vector<CheckDesc> descs;

  TermPtr stmt(const VExprPtr& e, const TermPtr& q, const ExcPost& x) {
    return std::visit([&](const auto& n) -> TermPtr { return stmt_node(n, e, q, x); }, e->node);
  }

  std::string local(const std::string& name) const { return local_name(frames_.back().prefix + name); }

  FormEnv form_env(spec::Status status, bool entry) const {
    FormEnv env;
    env.ret_source = frames_.back().fn ? frames_.back().fn->ret_source : "";
    env.status = status;
    env.entry = entry;
    std::string prefix = frames_.back().prefix;
    env.local = [prefix](const std::string& n) { return local_name(prefix + n); };
    env.predicates = ctx_.unit ? &ctx_.unit->predicates : nullptr;
    env.layout = ctx_.unit ? &ctx_.unit->state_vars : nullptr;
    return env;
  }

 private:
  struct Frame {
    std::string prefix;
    const VirFunction* fn;
  };

  TermPtr fresh(const std::string& base, Sort s) { return var(base + "!" + std::to_string(++fresh_), s); }

  TermPtr check(const CheckDesc& d, const TermPtr& a, const TermPtr& q) {
    int idx = next_++;
    descs.push_back(d);
    if (idx == focus_) return a;
    return implies(a, q);
  }

  TermPtr assign(const std::string& name, const TermPtr& v, const TermPtr& q) {
    const std::string lname = local(name);
    if (v->op == Op::IntLit || v->op == Op::Var) return substitute(q, {{lname, v}});
    TermPtr x = fresh(lname, Sort::Int);
    return implies(eq(x, v), substitute(q, {{lname, x}}));
  }

  // Binds a stateful read to a fresh constant so later effects cannot capture it.
  TermPtr bind(const std::string& base, const TermPtr& v, const K& k) {
    TermPtr t = fresh(base, v->sort);
    return implies(eq(t, v), k(t));
  }

  TermPtr update_cells(const std::map<std::string, TermPtr>& updates, const TermPtr& q) {
    std::map<std::string, TermPtr> sub;
    std::vector<TermPtr> defs;
    for (const auto& [cell, v] : updates) {
      TermPtr c = fresh(cell, cell_sort(ctx_, cell));
      defs.push_back(eq(c, v));
      sub[cell] = c;
    }
    return implies(land(defs), substitute(q, sub));
  }

  TermPtr cell(const std::string& name) const { return var(name, cell_sort(ctx_, name)); }

  // -------------------------------------------------------------- expressions

  TermPtr eval(const VExprPtr& e, const K& k, const ExcPost& x) {
    if (auto* l = std::get_if<vir::VLit>(&e->node)) return k(int_lit(l->value));
    if (auto* v = std::get_if<vir::VVar>(&e->node)) return k(var(local(v->name), Sort::Int));
    if (auto* c = std::get_if<vir::VCall>(&e->node)) {
      return eval_args(*c, e->span, [&](const std::vector<TermPtr>& vals) { return call(*c, e->span, vals, k, x); }, x);
    }
    throw Error(ErrorKind::UnsupportedStmt, "statement in expression position", e->span);
  }

  // Arguments are evaluated right to left.
  TermPtr eval_args(const vir::VCall& c, Span, const std::function<TermPtr(const std::vector<TermPtr>&)>& done,
                    const ExcPost& x) {
    std::function<TermPtr(size_t, const std::vector<TermPtr>&)> go = [&](size_t remaining,
                                                                         const std::vector<TermPtr>& vals) -> TermPtr {
      if (remaining == 0) return done(vals);
      size_t i = remaining - 1;
      return eval(c.args[i], [&go, vals, i](const TermPtr& v) {
        auto next = vals;
        next[i] = v;
        return go(i, next);
      }, x);
    };
    return go(c.args.size(), std::vector<TermPtr>(c.args.size()));
  }

  // Raw arithmetic result before wrapping, for overflow snapshots.
  TermPtr eval_raw(const VExprPtr& e, const std::function<TermPtr(const TermPtr&, const TermPtr&)>& k,
                   const ExcPost& x) {
    auto* c = std::get_if<vir::VCall>(&e->node);
    if (c && c->opcode &&
        (*c->opcode == evm::Opcode::Add || *c->opcode == evm::Opcode::Sub || *c->opcode == evm::Opcode::Mul)) {
      return eval_args(*c, e->span, [&](const std::vector<TermPtr>& a) {
        TermPtr raw = *c->opcode == evm::Opcode::Add ? add(a[0], a[1])
                      : *c->opcode == evm::Opcode::Sub ? sub(a[0], a[1]) : mul(a[0], a[1]);
        return k(raw, wrap(raw));
      }, x);
    }
    return eval(e, [&](const TermPtr& v) { return k(v, v); }, x);
  }

  TermPtr wrap(const TermPtr& v) const {
    if (!ctx_.wrap_bits) return v;
    return mod(v, int_lit(pow2(*ctx_.wrap_bits)));
  }

  TermPtr call(const vir::VCall& c, Span span, const std::vector<TermPtr>& a, const K& k, const ExcPost& x) {
    switch (c.kind) {
      case vir::CallKind::Opcode: return opcode(c, span, a, k, x);
      case vir::CallKind::Internal: return internal(c, span, a, k, x);
      case vir::CallKind::External: return external(c, span, a, k, x);
    }
    return k(int_lit(0));
  }

  TermPtr opcode(const vir::VCall& c, Span span, const std::vector<TermPtr>& a, const K& k, const ExcPost& x) {
    using evm::Opcode;
    auto slot = [&](const std::string& prefix) { return prefix + hex_slot(slot_literal(c.args[0], c.callee, span)); };
    const unsigned bits = ctx_.word_bits();
    switch (*c.opcode) {
      case Opcode::Add: return k(wrap(add(a[0], a[1])));
      case Opcode::Sub: return k(wrap(sub(a[0], a[1])));
      case Opcode::Mul: return k(wrap(mul(a[0], a[1])));
      case Opcode::Div: return k(evm_div(a[0], a[1]));
      case Opcode::Mod: return k(evm_mod(a[0], a[1]));
      case Opcode::Lt: return k(as_int(lt(a[0], a[1])));
      case Opcode::Gt: return k(as_int(gt(a[0], a[1])));
      case Opcode::Eq: return k(as_int(eq(a[0], a[1])));
      case Opcode::IsZero: return k(as_int(eq(a[0], int_lit(0))));
      case Opcode::And:
        if (is_boolean_shaped(a[0]) && is_boolean_shaped(a[1])) return k(as_int(land(truthy(a[0]), truthy(a[1]))));
        return k(apply("evm.and", {a[0], a[1]}, Sort::Int));
      case Opcode::Or:
        if (is_boolean_shaped(a[0]) && is_boolean_shaped(a[1])) return k(as_int(lor(truthy(a[0]), truthy(a[1]))));
        return k(apply("evm.or", {a[0], a[1]}, Sort::Int));
      case Opcode::Not: return k(sub(int_lit(pow2(bits) - 1), a[0]));
      case Opcode::Caller: return k(var(env_name(spec::EnvVar::Caller), Sort::Int));
      case Opcode::CallValue: return k(var(env_name(spec::EnvVar::CallValue), Sort::Int));
      case Opcode::Address: return k(var(env_name(spec::EnvVar::Address), Sort::Int));
      case Opcode::Timestamp: return k(var(env_name(spec::EnvVar::Timestamp), Sort::Int));
      case Opcode::Revert: return x.revert;
      case Opcode::Sload: return bind("t", select(cell("storage"), a[0]), k);
      case Opcode::Sstore: return update_cells({{"storage", store(cell("storage"), a[0], a[1])}}, k(int_lit(0)));
      case Opcode::Mload: {
        TermPtr idx = div(a[0], int_lit(evm::kByteSize));
        return bind("t", select(cell("mem"), idx), [&](const TermPtr& t) {
          CheckDesc d{ObKind::Assert, PropType::T4, false, span, "mload returns the addressed word"};
          return check(d, eq(select(cell("mem"), idx), t), k(t));
        });
      }
      case Opcode::Mstore: {
        TermPtr idx = div(a[0], int_lit(evm::kByteSize));
        TermPtr m = fresh("mem", Sort::Array);
        CheckDesc d{ObKind::Assert, PropType::T4, false, span, "mstore read-back"};
        TermPtr rest = substitute(k(int_lit(0)), {{"mem", m}});
        return implies(eq(m, store(cell("mem"), idx, a[1])), check(d, eq(select(m, idx), a[1]), rest));
      }
      case Opcode::MappingLoad: return bind("t", select(cell(slot("map_")), a[1]), k);
      case Opcode::MappingLoad2: return bind("t", select(select(cell(slot("map_")), a[1]), a[2]), k);
      case Opcode::MappingStore: {
        std::string m = slot("map_");
        return update_cells({{m, store(cell(m), a[1], a[2])}}, k(int_lit(0)));
      }
      case Opcode::MappingStore2: {
        std::string m = slot("map_");
        TermPtr inner = store(select(cell(m), a[1]), a[2], a[3]);
        return update_cells({{m, store(cell(m), a[1], inner)}}, k(int_lit(0)));
      }
      case Opcode::ArrayLoad: return bind("t", select(cell(slot("arr_")), a[1]), k);
      case Opcode::ArrayStore: {
        std::string arr = slot("arr_");
        return update_cells({{arr, store(cell(arr), a[1], a[2])}}, k(int_lit(0)));
      }
      case Opcode::ArrayLength: return k(cell(slot("len_")));
      case Opcode::Pop: return k(int_lit(0));
      case Opcode::ArrayPush: {
        std::string arr = slot("arr_");
        std::string len = slot("len_");
        return update_cells({{arr, store(cell(arr), cell(len), a[1])}, {len, add(cell(len), int_lit(1))}},
                            k(int_lit(0)));
      }
    }
    return k(int_lit(0));
  }

  // Substitution for a contract instantiated at a call site.
  std::map<std::string, TermPtr> call_subst(const VirFunction& g, const std::vector<TermPtr>& a) const {
    std::map<std::string, TermPtr> sub;
    for (const auto& c : all_cells(ctx_)) sub[old_name(c)] = cell(c);
    for (size_t i = 0; i < g.params.size() && i < a.size(); ++i) {
      sub[entry_name(g.params[i])] = a[i];
      sub[local_name(g.params[i])] = a[i];
    }
    return sub;
  }

  FormEnv callee_env(const VirFunction& g, spec::Status status, bool entry) const {
    FormEnv env;
    env.ret_source = g.ret_source;
    env.status = status;
    env.entry = entry;
    env.predicates = ctx_.unit ? &ctx_.unit->predicates : nullptr;
    env.layout = ctx_.unit ? &ctx_.unit->state_vars : nullptr;
    return env;
  }

  TermPtr internal(const vir::VCall& c, Span span, const std::vector<TermPtr>& a, const K& k, const ExcPost& x) {
    auto fit = ctx_.functions.find(c.callee);
    if (fit == ctx_.functions.end()) throw Error(ErrorKind::CalleeUnknown, "unknown function " + c.callee, span);
    const VirFunction& g = fit->second;
    const bool contract = !g.requires_.empty() || !g.ensures.empty();
    bool recursive = false;
    for (const auto& f : frames_)
      if (f.fn && f.fn->name == c.callee) recursive = true;
    // Without a contract, non-recursive callees are inlined; recursive ones
    // fall through with an empty contract (havoc).
    if (!contract && !recursive) return inline_call(c, a, k, x);

    // Preconditions at the call site.
    std::vector<std::pair<CheckDesc, TermPtr>> pres;
    auto base = call_subst(g, a);
    for (const auto& r : g.requires_) {
      TermPtr t = substitute(lower_form(r.item.form, callee_env(g, spec::Status::Return, true)), base);
      CheckDesc d;
      d.kind = r.origin == vir::CondOrigin::Meta ? ObKind::Meta : ObKind::Assert;
      d.type = r.origin == vir::CondOrigin::Meta ? PropType::T3 : user_type(r.item.form);
      d.deferred = r.item.deferred;
      d.span = span;
      d.label = "precondition of " + c.callee + ": " + spec::print(r.item.form);
      pres.emplace_back(d, t);
    }
    std::vector<int> pre_ids;
    for (size_t i = 0; i < pres.size(); ++i) pre_ids.push_back(next_++);
    for (const auto& p : pres) descs.push_back(p.first);

    // Havoc the callee's write set and the result, then assume its postconditions.
    std::map<std::string, TermPtr> post_sub = base;
    std::map<std::string, TermPtr> havoc;
    for (const auto& w : an_.writes.at(c.callee)) {
      TermPtr h = fresh(w, cell_sort(ctx_, w));
      havoc[w] = h;
      post_sub[w] = h;
    }
    TermPtr result = fresh("ret." + c.callee, Sort::Int);
    post_sub[local_name(vir::kRetCell)] = result;
    std::vector<TermPtr> posts;
    for (const auto& en : g.ensures)
      posts.push_back(substitute(lower_form(en.item.form, callee_env(g, spec::Status::Return, false)), post_sub));
    TermPtr rest = implies(land(posts), substitute(k(result), havoc));
    if (an_.reverts.at(c.callee)) rest = land(rest, x.revert);
    for (size_t i = pres.size(); i-- > 0;) rest = pre_ids[i] == focus_ ? pres[i].second : implies(pres[i].second, rest);
    return rest;
  }

  TermPtr inline_call(const vir::VCall& c, const std::vector<TermPtr>& a, const K& k, const ExcPost& x) {
    const VirFunction& g = ctx_.plain.at(c.callee);
    std::string prefix = c.callee + "#" + std::to_string(++inline_count_) + ".";
    TermPtr result = var(local_name(prefix + vir::kRetCell), Sort::Int);
    TermPtr q = k(result);
    frames_.push_back({prefix, &g});
    TermPtr body = stmt(g.body, q, ExcPost{nullptr, nullptr, x.revert});
    std::map<std::string, TermPtr> bind_params;
    for (size_t i = 0; i < g.params.size() && i < a.size(); ++i) bind_params[local(g.params[i])] = a[i];
    frames_.pop_back();
    return substitute(body, bind_params);
  }

  TermPtr external(const vir::VCall& c, Span span, const std::vector<TermPtr>& a, const K& k, const ExcPost&) {
    if (!frames_.front().fn)
      throw Error(ErrorKind::MissingEcfAnswer, "no ECF answer for external call `" + c.callee + "`", span);
    const VirFunction& owner = *frames_.front().fn;
    auto ans = owner.ecf.find(c.callee);
    if (ans == owner.ecf.end())
      throw Error(ErrorKind::MissingEcfAnswer, "no ECF answer for external call `" + c.callee + "`", span);
    // Meta must hold whenever control leaves the contract.
    std::vector<std::pair<CheckDesc, TermPtr>> metas;
    for (const auto& m : owner.external_meta) {
      CheckDesc d{ObKind::Meta, PropType::T3, m.deferred, span, "meta before call to " + c.callee + ": " + spec::print(m.form)};
      metas.emplace_back(d, lower_form(m.form, form_env(spec::Status::Return, false)));
    }
    std::vector<int> meta_ids;
    for (size_t i = 0; i < metas.size(); ++i) meta_ids.push_back(next_++);
    for (const auto& m : metas) descs.push_back(m.first);

    TermPtr nonce = fresh("nonce", Sort::Int);
    std::vector<TermPtr> args{nonce};
    args.insert(args.end(), a.begin(), a.end());
    std::map<std::string, TermPtr> sub;
    std::vector<TermPtr> defs;
    std::vector<TermPtr> same;
    for (const auto& cl : ctx_.cells) {
      TermPtr after = fresh(cl.name, cl.sort);
      std::vector<TermPtr> cargs = args;
      cargs.push_back(cell(cl.name));
      defs.push_back(eq(after, apply(vir::ecf_cell_fn(c.callee, cl.name), cargs, cl.sort)));
      same.push_back(eq(after, cell(cl.name)));
      sub[cl.name] = after;
    }
    TermPtr ret = fresh("ret." + c.callee, Sort::Int);
    defs.push_back(eq(ret, apply(vir::ecf_ret_fn(c.callee), args, Sort::Int)));
    TermPtr rest = substitute(k(ret), sub);
    if (ans->second == vir::EcfAnswer::Pure) {
      CheckDesc d{ObKind::EcfConsistency, PropType::T5, false, span, "callback-free call to " + c.callee};
      // Consistency is stated over the pre-call cell names, then renamed.
      rest = check(d, land(same), rest);
    }
    rest = implies(land(defs), rest);
    for (size_t i = metas.size(); i-- > 0;) rest = meta_ids[i] == focus_ ? metas[i].second : implies(metas[i].second, rest);
    return rest;
  }

  // -------------------------------------------------------------- statements

  TermPtr stmt_node(const vir::VUnit&, const VExprPtr&, const TermPtr& q, const ExcPost&) { return q; }
  TermPtr stmt_node(const vir::VLit&, const VExprPtr&, const TermPtr& q, const ExcPost&) { return q; }
  TermPtr stmt_node(const vir::VVar&, const VExprPtr&, const TermPtr& q, const ExcPost&) { return q; }
  TermPtr stmt_node(const vir::VPush&, const VExprPtr&, const TermPtr& q, const ExcPost&) { return q; }

  TermPtr stmt_node(const vir::VCall&, const VExprPtr& e, const TermPtr& q, const ExcPost& x) {
    return eval(e, [&](const TermPtr&) { return q; }, x);
  }

  TermPtr stmt_node(const vir::VSeq& n, const VExprPtr&, const TermPtr& q, const ExcPost& x) {
    TermPtr cur = q;
    for (size_t i = n.items.size(); i-- > 0;) cur = stmt(n.items[i], cur, x);
    return cur;
  }

  TermPtr assign_with_snapshot(const std::string& name, const std::string& snapshot, const VExprPtr& value,
                               const TermPtr& q, const ExcPost& x) {
    if (!value) return assign(name, int_lit(0), q);
    if (snapshot.empty()) return eval(value, [&](const TermPtr& v) { return assign(name, v, q); }, x);
    return eval_raw(value, [&](const TermPtr& raw, const TermPtr& v) {
      // The ghost is written after the variable, so it is substituted first.
      return assign(snapshot, raw, assign(name, v, q));
    }, x);
  }

  TermPtr stmt_node(const vir::VLet& n, const VExprPtr&, const TermPtr& q, const ExcPost& x) {
    return assign_with_snapshot(n.name, n.snapshot, n.init, q, x);
  }

  TermPtr stmt_node(const vir::VAssign& n, const VExprPtr&, const TermPtr& q, const ExcPost& x) {
    return assign_with_snapshot(n.name, n.snapshot, n.value, q, x);
  }

  TermPtr stmt_node(const vir::VIf& n, const VExprPtr&, const TermPtr& q, const ExcPost& x) {
    return eval(n.cond, [&](const TermPtr& v) {
      TermPtr c = truthy(v);
      return land(implies(c, stmt(n.then, q, x)), implies(lnot(c), q));
    }, x);
  }

  TermPtr stmt_node(const vir::VMatch& n, const VExprPtr&, const TermPtr& q, const ExcPost& x) {
    return eval(n.scrutinee, [&](const TermPtr& v) {
      std::vector<TermPtr> parts;
      std::vector<TermPtr> misses;
      for (const auto& [lit, arm] : n.cases) {
        TermPtr hit = eq(v, int_lit(lit));
        parts.push_back(implies(hit, stmt(arm, q, x)));
        misses.push_back(lnot(hit));
      }
      parts.push_back(implies(land(misses), n.default_arm ? stmt(n.default_arm, q, x) : q));
      return land(parts);
    }, x);
  }

  TermPtr stmt_node(const vir::VRaise& n, const VExprPtr& e, const TermPtr&, const ExcPost& x) {
    const TermPtr& t = n.channel == vir::Channel::Break ? x.brk : x.leave;
    if (!t) throw Error(ErrorKind::UnsupportedStmt, "raise outside its handler", e->span);
    return t;
  }

  TermPtr stmt_node(const vir::VTry& n, const VExprPtr&, const TermPtr& q, const ExcPost& x) {
    TermPtr h = stmt(n.handler, q, x);
    ExcPost inner = x;
    (n.channel == vir::Channel::Break ? inner.brk : inner.leave) = h;
    return stmt(n.body, q, inner);
  }

  TermPtr stmt_node(const vir::VCheck& n, const VExprPtr& e, const TermPtr& q, const ExcPost&) {
    TermPtr a = lower_form(n.item.form, form_env(spec::Status::Return, false));
    if (n.kind == vir::VCheck::Assume) return implies(a, q);
    CheckDesc d;
    d.span = e->span;
    d.label = spec::print(n.item.form);
    d.deferred = n.item.deferred;
    switch (n.origin) {
      case vir::CondOrigin::Overflow:
        d.kind = ObKind::Overflow;
        d.type = PropType::T5;
        break;
      case vir::CondOrigin::Meta:
        d.kind = ObKind::Meta;
        d.type = PropType::T3;
        break;
      default:
        d.kind = n.kind == vir::VCheck::LoopPost ? ObKind::Post : ObKind::Assert;
        d.type = user_type(n.item.form);
    }
    return check(d, a, q);
  }

  TermPtr stmt_node(const vir::VWhile& n, const VExprPtr& e, const TermPtr& q, const ExcPost& x) {
    std::vector<spec::SpecItem> invs = n.invariants;
    const VirFunction* fn = frames_.back().fn;
    if (fn) {
      auto it = fn->extra_invariants.find(e->span);
      if (it != fn->extra_invariants.end()) invs.insert(invs.end(), it->second.begin(), it->second.end());
    }
    if (invs.empty())
      throw Error(ErrorKind::MissingInvariant, "loop has no invariant; add @inv or @learn", e->span);
    std::vector<TermPtr> inv_terms;
    for (const auto& i : invs) inv_terms.push_back(lower_form(i.form, form_env(spec::Status::Return, false)));
    TermPtr all = land(inv_terms);

    std::vector<int> init_ids;
    std::vector<int> pres_ids;
    for (size_t i = 0; i < invs.size(); ++i) {
      init_ids.push_back(next_++);
      descs.push_back({ObKind::InvInit, PropType::T1, false, invs[i].span, "initiation: " + spec::print(invs[i].form)});
      pres_ids.push_back(next_++);
      descs.push_back({ObKind::InvPreserve, PropType::T1, false, invs[i].span, "consecution: " + spec::print(invs[i].form)});
    }
    int preserving = -1;
    for (size_t i = 0; i < invs.size(); ++i)
      if (pres_ids[i] == focus_) preserving = static_cast<int>(i);

    TermPtr body_post = preserving >= 0 ? inv_terms[static_cast<size_t>(preserving)] : bool_lit(true);
    ExcPost bx = x;
    bx.brk = preserving >= 0 ? body_post : q;
    TermPtr inner = eval(n.cond, [&](const TermPtr& v) {
      TermPtr c = truthy(v);
      return land(implies(c, stmt(n.body, body_post, bx)), implies(lnot(c), q));
    }, x);
    inner = implies(all, inner);

    // Havoc everything the loop may modify.
    std::set<std::string> locals;
    assigned_locals(n.body, locals);
    Summary s;
    summarize(n.body, s);
    summarize(n.cond, s);
    std::set<std::string> cells = s.writes;
    for (const auto& c : s.callees) {
      auto it = an_.writes.find(c);
      if (it != an_.writes.end()) cells.insert(it->second.begin(), it->second.end());
    }
    if (s.external)
      for (const auto& c : ctx_.cells) cells.insert(c.name);
    std::map<std::string, TermPtr> havoc;
    for (const auto& l : locals) havoc[local(l)] = fresh(local(l), Sort::Int);
    for (const auto& c : cells) havoc[c] = fresh(c, cell_sort(ctx_, c));
    TermPtr result = substitute(inner, havoc);
    for (size_t i = 0; i < invs.size(); ++i)
      if (init_ids[i] == focus_) return inv_terms[i];
    return result;
  }

  const VcContext& ctx_;
  const Analysis& an_;
  const VirFunction* top_;
  int focus_;
  int next_;
  int fresh_ = 0;
  int inline_count_ = 0;
  std::vector<Frame> frames_;
};

}  // namespace

TermPtr wp(const VExprPtr& e, const TermPtr& post, const ExcPost& exc, const VcContext& ctx, const VirFunction* owner) {
  Analysis an = analyse(ctx);
  WpGen gen(ctx, an, owner, -1, 0);
  return gen.stmt(e, post, exc);
}

std::vector<Obligation> generate_vcs(const VirFunction& f, const VcContext& ctx) {
  Analysis an = analyse(ctx);
  const int n_ensures = static_cast<int>(f.ensures.size());

  FormEnv entry_env;
  entry_env.ret_source = f.ret_source;
  entry_env.entry = true;
  entry_env.predicates = ctx.unit ? &ctx.unit->predicates : nullptr;
  entry_env.layout = ctx.unit ? &ctx.unit->state_vars : nullptr;
  FormEnv exit_env = entry_env;
  exit_env.entry = false;

  auto run = [&](int focus, std::vector<CheckDesc>* descs) {
    WpGen gen(ctx, an, &f, focus, n_ensures);
    TermPtr q = bool_lit(true);
    TermPtr rev = bool_lit(true);
    if (focus >= 0 && focus < n_ensures) {
      const auto& en = f.ensures[static_cast<size_t>(focus)].item;
      FormEnv ret_env = exit_env;
      ret_env.status = spec::Status::Return;
      q = lower_form(en.form, ret_env);
      FormEnv rev_env = entry_env;
      rev_env.status = spec::Status::Revert;
      rev = lower_form(en.form, rev_env);
    }
    TermPtr body = gen.stmt(f.body, q, ExcPost{nullptr, nullptr, rev});
    if (descs) *descs = gen.descs;
    std::map<std::string, TermPtr> sub;
    for (const auto& c : all_cells(ctx)) sub[c] = var(old_name(c), cell_sort(ctx, c));
    for (const auto& p : f.params) sub[local_name(p)] = var(entry_name(p), Sort::Int);
    return substitute(body, sub);
  };

  std::vector<CheckDesc> dynamic;
  run(-1, &dynamic);

  std::vector<std::pair<std::string, TermPtr>> hyps;
  for (const auto& a : f.axioms) hyps.emplace_back(a.name, a.formula);
  if (ctx.storage_reduce) {
    for (Sort s : {Sort::Array, Sort::Array2}) {
      Sort elem = s == Sort::Array ? Sort::Int : Sort::Array;
      auto arr = var("a", s);
      auto i = var("i", Sort::Int);
      auto v = var("v", elem);
      hyps.emplace_back(s == Sort::Array ? "storage_reduce" : "storage_reduce2",
                        forall({{"a", s}, {"i", Sort::Int}, {"v", elem}}, eq(select(store(arr, i, v), i), v)));
    }
  }
  const unsigned bits = ctx.word_bits();
  hyps.emplace_back("range.caller", in_range(var(env_name(spec::EnvVar::Caller), Sort::Int), 160));
  hyps.emplace_back("range.address", in_range(var(env_name(spec::EnvVar::Address), Sort::Int), 160));
  hyps.emplace_back("range.callvalue", in_range(var(env_name(spec::EnvVar::CallValue), Sort::Int), bits));
  hyps.emplace_back("range.timestamp", in_range(var(env_name(spec::EnvVar::Timestamp), Sort::Int), bits));
  for (const auto& p : f.params) hyps.emplace_back("range." + p, in_range(var(entry_name(p), Sort::Int), bits));
  for (size_t i = 0; i < f.requires_.size(); ++i)
    hyps.emplace_back("requires." + std::to_string(i + 1), lower_form(f.requires_[i].item.form, entry_env));

  // Checks are discovered backwards; number them in source order.
  std::vector<int> order;
  for (int i = 0; i < n_ensures; ++i) order.push_back(i);
  std::vector<int> dyn(dynamic.size());
  for (size_t i = 0; i < dyn.size(); ++i) dyn[i] = static_cast<int>(i);
  std::stable_sort(dyn.begin(), dyn.end(), [&](int a, int b) {
    const auto& sa = dynamic[static_cast<size_t>(a)].span;
    const auto& sb = dynamic[static_cast<size_t>(b)].span;
    if (sa != sb) return sa < sb;
    const auto ka = dynamic[static_cast<size_t>(a)].kind;
    const auto kb = dynamic[static_cast<size_t>(b)].kind;
    if (ka != kb) return ka < kb;
    return a > b;
  });
  for (int i : dyn) order.push_back(n_ensures + i);

  std::vector<Obligation> out;
  for (size_t pos = 0; pos < order.size(); ++pos) {
    const int idx = order[pos];
    Obligation ob;
    ob.function = f.name;
    if (idx < n_ensures) {
      const auto& en = f.ensures[static_cast<size_t>(idx)];
      ob.kind = en.origin == vir::CondOrigin::Meta ? ObKind::Meta : ObKind::Post;
      ob.property_type = en.origin == vir::CondOrigin::Meta ? PropType::T3 : user_type(en.item.form);
      ob.deferred = en.item.deferred;
      ob.origin = en.item.span;
      ob.label = spec::print(en.item.form);
    } else {
      const auto& d = dynamic[static_cast<size_t>(idx - n_ensures)];
      ob.kind = d.kind;
      ob.property_type = d.type;
      ob.deferred = d.deferred;
      ob.origin = d.span;
      ob.label = d.label;
    }
    if (ctx.t6_functions.count(f.name)) ob.property_type = PropType::T6;
    ob.id = f.name + "." + std::string(to_string(ob.kind)) + "." + std::to_string(pos + 1);
    ob.hypotheses = hyps;
    ob.goal = run(idx, nullptr);
    out.push_back(std::move(ob));
  }
  return out;
}

}  // namespace yulverify::vcgen
