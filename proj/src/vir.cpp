#include "yulverify/vir.hpp"

#include <functional>
#include <sstream>

namespace yulverify::vir {

using spec::SpecItem;

std::string_view to_string(Channel c) { return c == Channel::Break ? "Σ_break" : "Σ_leave"; }

VExprPtr make(decltype(VExpr::node) node, Span span) {
  auto e = std::make_shared<VExpr>();
  e->node = std::move(node);
  e->span = span;
  return e;
}

std::string ecf_cell_fn(const std::string& callee, const std::string& cell) { return "ecf." + callee + "." + cell; }
std::string ecf_ret_fn(const std::string& callee) { return "ecf." + callee + ".ret"; }

// ---------------------------------------------------------------- translation

namespace {

class Translator {
 public:
  Translator(const yul::YulFunction& f, const yul::YulUnit& unit) : f_(f), unit_(unit) {}

  VirFunction run() {
    VirFunction out;
    out.name = f_.name;
    out.params = f_.params;
    out.has_ret = f_.ret.has_value();
    out.ret_source = f_.ret.value_or("");
    out.is_public = unit_.is_public(f_);
    out.span = f_.span;
    for (const auto& s : f_.specs) {
      if (s.kind == spec::Directive::Pre) out.requires_.push_back({s, CondOrigin::User});
      else if (s.kind == spec::Directive::Post) out.ensures.push_back({s, CondOrigin::User});
    }
    std::vector<VExprPtr> body = block_items(f_.body);
    body.push_back(make(VRaise{Channel::Leave, true}, f_.span));
    VExprPtr handler = make(VSeq{{make(VPush{kRetCell}, f_.span)}}, f_.span);
    VExprPtr tried = make(VTry{make(VSeq{std::move(body)}, f_.span), Channel::Leave, handler}, f_.span);
    std::vector<VExprPtr> prelude;
    if (out.has_ret) prelude.push_back(make(VLet{kRetCell, nullptr, ""}, f_.span));
    prelude.push_back(tried);
    out.body = make(VSeq{std::move(prelude)}, f_.span);
    out.external_sites = std::move(sites_);
    return out;
  }

 private:
  std::string var_name(const std::string& n) const { return f_.ret && n == *f_.ret ? kRetCell : n; }

  VExprPtr expr(const yul::YExprPtr& e) {
    return std::visit(
        [&](const auto& n) -> VExprPtr {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, yul::Lit>) {
            return make(VLit{n.value}, e->span);
          } else if constexpr (std::is_same_v<T, yul::VarRef>) {
            return make(VVar{var_name(n.name)}, e->span);
          } else {
            VCall c;
            c.callee = n.callee;
            for (const auto& a : n.args) c.args.push_back(expr(a));
            if (auto op = evm::lookup_opcode(n.callee, n.args.size())) {
              c.kind = CallKind::Opcode;
              c.opcode = op;
            } else if (unit_.find(n.callee)) {
              c.kind = CallKind::Internal;
            } else {
              c.kind = CallKind::External;
              c.site_id = static_cast<int>(sites_.size());
              sites_.push_back({c.site_id, n.callee, n.args.size(), e->span});
            }
            return make(std::move(c), e->span);
          }
        },
        e->node);
  }

  std::vector<VExprPtr> block_items(const yul::Block& b) {
    std::vector<VExprPtr> out;
    for (const auto& s : b.stmts) stmt(s, out);
    return out;
  }

  VExprPtr block(const yul::Block& b, Span span) { return make(VSeq{block_items(b)}, span); }

  void stmt(const yul::YStmtPtr& s, std::vector<VExprPtr>& out) {
    const bool is_loop = std::holds_alternative<yul::For>(s->node);
    for (const auto& item : s->specs) {
      if (item.kind == spec::Directive::Assume) out.push_back(make(VCheck{VCheck::Assume, item, CondOrigin::User}, item.span));
      else if (item.kind == spec::Directive::Assert)
        out.push_back(make(VCheck{VCheck::Assert, item, CondOrigin::User}, item.span));
      else if (!is_loop && item.kind != spec::Directive::Learn && item.kind != spec::Directive::Inv)
        throw Error(ErrorKind::UnsupportedStmt, "annotation not allowed on a statement: " + spec::print(item), item.span);
    }
    std::visit(
        [&](const auto& n) {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, yul::Block>) {
            if (!n.stmts.empty()) out.push_back(block(n, s->span));
          } else if constexpr (std::is_same_v<T, yul::Break>) {
            out.push_back(make(VRaise{Channel::Break, false}, s->span));
          } else if constexpr (std::is_same_v<T, yul::Leave>) {
            out.push_back(make(VRaise{Channel::Leave, false}, s->span));
          } else if constexpr (std::is_same_v<T, yul::ExprStmt>) {
            out.push_back(expr(n.expr));
          } else if constexpr (std::is_same_v<T, yul::Let>) {
            out.push_back(make(VLet{var_name(n.name), n.init ? expr(n.init) : nullptr, ""}, s->span));
          } else if constexpr (std::is_same_v<T, yul::Assign>) {
            out.push_back(make(VAssign{var_name(n.name), expr(n.value), ""}, s->span));
          } else if constexpr (std::is_same_v<T, yul::If>) {
            VExprPtr c = expr(n.cond);
            out.push_back(make(VIf{c, block(n.body, s->span)}, s->span));
          } else if constexpr (std::is_same_v<T, yul::Switch>) {
            VMatch m;
            m.scrutinee = expr(n.scrutinee);
            for (const auto& c : n.cases) m.cases.emplace_back(c.literal, block(c.body, c.span));
            if (n.default_body) m.default_arm = block(*n.default_body, s->span);
            out.push_back(make(std::move(m), s->span));
          } else if constexpr (std::is_same_v<T, yul::For>) {
            for (auto& i : block_items(n.init)) out.push_back(i);
            VWhile w;
            w.cond = expr(n.cond);
            std::vector<SpecItem> posts;
            for (const auto& item : s->specs) {
              if (item.kind == spec::Directive::Inv) w.invariants.push_back(item);
              else if (item.kind == spec::Directive::Learn) w.learn = item.watched;
              else if (item.kind == spec::Directive::Post) posts.push_back(item);
            }
            std::vector<VExprPtr> body = block_items(n.body);
            for (auto& p : block_items(n.post)) body.push_back(p);
            w.body = make(VSeq{std::move(body)}, s->span);
            out.push_back(make(VTry{make(std::move(w), s->span), Channel::Break, make(VUnit{}, s->span)}, s->span));
            for (const auto& p : posts) out.push_back(make(VCheck{VCheck::LoopPost, p, CondOrigin::User}, p.span));
          }
        },
        s->node);
  }

  const yul::YulFunction& f_;
  const yul::YulUnit& unit_;
  std::vector<ExternalSite> sites_;
};

}  // namespace

VirFunction translate_function(const yul::YulFunction& f, const yul::YulUnit& unit) {
  return Translator(f, unit).run();
}

// ---------------------------------------------------------------- expansions

VirFunction expand_meta(const std::vector<SpecItem>& unit_meta, VirFunction f) {
  if (!f.is_public || unit_meta.empty()) return f;
  for (const auto& m : unit_meta) {
    f.requires_.push_back({m, CondOrigin::Meta});
    f.ensures.push_back({m, CondOrigin::Meta});
    f.external_meta.push_back(m);
  }
  return f;
}

namespace {

bool is_arith(const VExprPtr& e) {
  auto* c = e ? std::get_if<VCall>(&e->node) : nullptr;
  if (!c || !c->opcode) return false;
  return *c->opcode == evm::Opcode::Add || *c->opcode == evm::Opcode::Sub || *c->opcode == evm::Opcode::Mul;
}

spec::ExprPtr local_ref(const std::string& name) {
  spec::Ident id;
  id.name = name;
  id.binding = spec::Binding::Local;
  return spec::make_expr(id);
}

// ¬(lo <= v < hi) -> revert
spec::FormPtr range_check(const std::string& ghost, const Word& lo, const Word& hi, Span span) {
  auto v = local_ref(ghost);
  auto lower = spec::expr_form(spec::binary(spec::BinOp::Le, spec::num(lo), v, span));
  auto upper = spec::expr_form(spec::binary(spec::BinOp::Lt, v, spec::num(hi), span));
  return spec::make_implies(spec::make_not(spec::make_and(lower, upper, span), span),
                            spec::status_form(spec::Status::Revert, span), span);
}

VExprPtr map_children(const VExprPtr& e, const std::function<VExprPtr(const VExprPtr&)>& fn) {
  if (!e) return e;
  return std::visit(
      [&](const auto& n) -> VExprPtr {
        using T = std::decay_t<decltype(n)>;
        T c = n;
        if constexpr (std::is_same_v<T, VSeq>) {
          for (auto& i : c.items) i = fn(i);
        } else if constexpr (std::is_same_v<T, VIf>) {
          c.then = fn(c.then);
        } else if constexpr (std::is_same_v<T, VMatch>) {
          for (auto& [_, arm] : c.cases) arm = fn(arm);
          if (c.default_arm) c.default_arm = fn(c.default_arm);
        } else if constexpr (std::is_same_v<T, VWhile>) {
          c.body = fn(c.body);
        } else if constexpr (std::is_same_v<T, VTry>) {
          c.body = fn(c.body);
          c.handler = fn(c.handler);
        } else {
          return e;
        }
        return make(std::move(c), e->span);
      },
      e->node);
}

}  // namespace

VirFunction expand_overflow_checks(VirFunction f, const std::map<std::string, yul::Width>& widths,
                                   unsigned default_bits) {
  struct Snap {
    std::string ghost;
    std::string var;
    Span span;
  };
  std::vector<Snap> snaps;
  std::map<std::string, int> counts;
  auto ghost_for = [&](const std::string& var, Span span) {
    std::string g = "ovf." + (var == kRetCell ? std::string("ret") : var) + "." + std::to_string(++counts[var]);
    snaps.push_back({g, var, span});
    return g;
  };
  std::function<VExprPtr(const VExprPtr&)> walk = [&](const VExprPtr& e) -> VExprPtr {
    if (auto* a = std::get_if<VAssign>(&e->node); a && is_arith(a->value)) {
      VAssign c = *a;
      c.snapshot = ghost_for(a->name, e->span);
      return make(std::move(c), e->span);
    }
    if (auto* l = std::get_if<VLet>(&e->node); l && is_arith(l->init)) {
      VLet c = *l;
      c.snapshot = ghost_for(l->name, e->span);
      return make(std::move(c), e->span);
    }
    if (auto* t = std::get_if<VTry>(&e->node); t && t->channel == Channel::Leave) {
      VTry c = *t;
      c.body = walk(t->body);
      return make(std::move(c), e->span);
    }
    return map_children(e, walk);
  };
  VExprPtr body = walk(f.body);
  std::vector<VExprPtr> ghosts;
  std::vector<VExprPtr> checks;
  for (const auto& s : snaps) {
    std::string source = s.var == kRetCell ? f.ret_source : s.var;
    yul::Width w{default_bits, false};
    if (auto it = widths.find(source); it != widths.end()) w = it->second;
    Word lo = w.is_signed ? Word(-pow2(w.bits - 1)) : Word(0);
    Word hi = w.is_signed ? pow2(w.bits - 1) : pow2(w.bits);
    SpecItem item;
    item.kind = spec::Directive::Assert;
    item.form = range_check(s.ghost, lo, hi, s.span);
    item.span = s.span;
    ghosts.push_back(make(VLet{s.ghost, nullptr, ""}, f.span));
    checks.push_back(make(VCheck{VCheck::Assert, item, CondOrigin::Overflow}, s.span));
  }
  // Place the checks at the front of the exit handler and declare the ghosts
  // ahead of the guarded body.
  auto& seq = std::get<VSeq>(body->node);
  VSeq top = seq;
  for (auto& item : top.items) {
    auto* t = std::get_if<VTry>(&item->node);
    if (!t || t->channel != Channel::Leave) continue;
    VTry c = *t;
    VSeq handler = std::get<VSeq>(c.handler->node);
    handler.items.insert(handler.items.begin(), checks.begin(), checks.end());
    c.handler = make(std::move(handler), c.handler->span);
    item = make(std::move(c), item->span);
  }
  top.items.insert(top.items.begin(), ghosts.begin(), ghosts.end());
  f.body = make(std::move(top), body->span);
  f.overflow_checked = true;
  return f;
}

std::vector<CellInfo> unit_cells(const yul::YulUnit& unit) {
  std::map<std::string, logic::Sort> cells;
  cells["storage"] = logic::Sort::Array;
  for (const auto& l : unit.state_vars) {
    if (l.kind == spec::StateKind::Mapping)
      cells[l.symbol()] = l.depth >= 2 ? logic::Sort::Array2 : logic::Sort::Array;
    else if (l.kind == spec::StateKind::DynArray) {
      cells[l.symbol()] = logic::Sort::Array;
      cells["len_" + hex_slot(l.id)] = logic::Sort::Int;
    }
  }
  // Slots addressed in code without a declared layout.
  std::function<void(const yul::YExprPtr&)> scan_expr = [&](const yul::YExprPtr& e) {
    auto* c = std::get_if<yul::CallExpr>(&e->node);
    if (!c) return;
    for (const auto& a : c->args) scan_expr(a);
    if (c->args.empty()) return;
    auto* lit = std::get_if<yul::Lit>(&c->args[0]->node);
    if (!lit) return;
    auto op = evm::lookup_opcode(c->callee, c->args.size());
    if (!op) return;
    switch (*op) {
      case evm::Opcode::MappingLoad: case evm::Opcode::MappingStore:
        cells.emplace("map_" + hex_slot(lit->value), logic::Sort::Array);
        break;
      case evm::Opcode::MappingLoad2: case evm::Opcode::MappingStore2:
        cells.emplace("map_" + hex_slot(lit->value), logic::Sort::Array2);
        break;
      case evm::Opcode::ArrayLoad: case evm::Opcode::ArrayStore: case evm::Opcode::ArrayLength:
      case evm::Opcode::ArrayPush:
        cells.emplace("arr_" + hex_slot(lit->value), logic::Sort::Array);
        cells.emplace("len_" + hex_slot(lit->value), logic::Sort::Int);
        break;
      default: break;
    }
  };
  std::function<void(const yul::Block&)> scan_block = [&](const yul::Block& b) {
    for (const auto& s : b.stmts) {
      std::visit(
          [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, yul::Block>) scan_block(n);
            else if constexpr (std::is_same_v<T, yul::ExprStmt>) scan_expr(n.expr);
            else if constexpr (std::is_same_v<T, yul::Let>) {
              if (n.init) scan_expr(n.init);
            } else if constexpr (std::is_same_v<T, yul::Assign>) scan_expr(n.value);
            else if constexpr (std::is_same_v<T, yul::If>) {
              scan_expr(n.cond);
              scan_block(n.body);
            } else if constexpr (std::is_same_v<T, yul::Switch>) {
              scan_expr(n.scrutinee);
              for (const auto& c : n.cases) scan_block(c.body);
              if (n.default_body) scan_block(*n.default_body);
            } else if constexpr (std::is_same_v<T, yul::For>) {
              scan_block(n.init);
              scan_expr(n.cond);
              scan_block(n.post);
              scan_block(n.body);
            }
          },
          s->node);
    }
  };
  for (const auto& f : unit.functions) scan_block(f.body);
  std::vector<CellInfo> out;
  for (const auto& [n, s] : cells) out.push_back({n, s});
  return out;
}

VirFunction insert_ecf_axioms(VirFunction f, const std::map<std::string, EcfAnswer>& answers,
                              const std::vector<CellInfo>& cells,
                              const std::optional<std::vector<ExternalSite>>& sites) {
  const auto& list = sites ? *sites : f.external_sites;
  for (const auto& s : list) {
    auto it = answers.find(s.callee);
    if (it == answers.end())
      throw Error(ErrorKind::MissingEcfAnswer,
                  "no ECF answer for external call `" + s.callee + "` (use --ecf " + s.callee + "=pure|impure)", s.span);
    if (f.ecf.count(s.callee)) continue;
    f.ecf[s.callee] = it->second;
    if (it->second != EcfAnswer::Pure) continue;
    for (const auto& c : cells) {
      std::vector<std::pair<std::string, logic::Sort>> bound{{"n", logic::Sort::Int}};
      std::vector<logic::TermPtr> args{logic::var("n", logic::Sort::Int)};
      for (size_t i = 0; i < s.argc; ++i) {
        std::string a = "a" + std::to_string(i);
        bound.emplace_back(a, logic::Sort::Int);
        args.push_back(logic::var(a, logic::Sort::Int));
      }
      bound.emplace_back("c", c.sort);
      auto cell = logic::var("c", c.sort);
      args.push_back(cell);
      auto app = logic::apply(ecf_cell_fn(s.callee, c.name), args, c.sort);
      f.axioms.push_back({s.callee + "ECF." + c.name, logic::forall(bound, logic::eq(app, cell))});
    }
  }
  return f;
}

// ---------------------------------------------------------------- printing

namespace {

std::string pad(int n) { return std::string(static_cast<size_t>(n) * 2, ' '); }

std::string show_var(const std::string& n) { return "!" + n; }

void render(std::ostream& out, const VExprPtr& e, int ind);

std::string inline_expr(const VExprPtr& e) {
  std::ostringstream out;
  render(out, e, 0);
  return out.str();
}

void render(std::ostream& out, const VExprPtr& e, int ind) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, VUnit>) {
          out << "()";
        } else if constexpr (std::is_same_v<T, VLit>) {
          out << n.value.get_str();
        } else if constexpr (std::is_same_v<T, VVar>) {
          out << show_var(n.name);
        } else if constexpr (std::is_same_v<T, VCall>) {
          out << "(φ := push φ [";
          for (size_t i = 0; i < n.args.size(); ++i) out << (i ? ", " : "") << inline_expr(n.args[i]);
          out << "]; φ := " << n.callee << " φ; pop φ)";
        } else if constexpr (std::is_same_v<T, VSeq>) {
          if (n.items.empty()) {
            out << pad(ind) << "()";
            return;
          }
          for (size_t i = 0; i < n.items.size(); ++i) {
            const auto& it = n.items[i];
            bool simple = std::holds_alternative<VCall>(it->node) || std::holds_alternative<VVar>(it->node) ||
                          std::holds_alternative<VLit>(it->node);
            if (simple) out << pad(ind);
            render(out, it, ind);
            if (i + 1 < n.items.size()) out << ";\n";
          }
        } else if constexpr (std::is_same_v<T, VLet>) {
          out << pad(ind) << "let " << n.name << " = ref " << (n.init ? inline_expr(n.init) : "0") << " in";
          if (!n.snapshot.empty()) out << " (* ghost " << n.snapshot << " *)";
        } else if constexpr (std::is_same_v<T, VAssign>) {
          out << pad(ind) << n.name << " := " << inline_expr(n.value);
          if (!n.snapshot.empty()) out << " (* ghost " << n.snapshot << " *)";
        } else if constexpr (std::is_same_v<T, VIf>) {
          out << pad(ind) << "if " << inline_expr(n.cond) << " <> 0 then begin\n";
          render(out, n.then, ind + 1);
          out << "\n" << pad(ind) << "end";
        } else if constexpr (std::is_same_v<T, VMatch>) {
          out << pad(ind) << "match " << inline_expr(n.scrutinee) << " with\n";
          for (const auto& [lit, arm] : n.cases) {
            out << pad(ind) << "| " << lit.get_str() << " ->\n";
            render(out, arm, ind + 1);
            out << "\n";
          }
          out << pad(ind) << "| _ ->\n";
          if (n.default_arm) render(out, n.default_arm, ind + 1);
          else out << pad(ind + 1) << "()";
          out << "\n" << pad(ind) << "end";
        } else if constexpr (std::is_same_v<T, VWhile>) {
          out << pad(ind) << "while " << inline_expr(n.cond) << " <> 0 do\n";
          for (const auto& inv : n.invariants) out << pad(ind + 1) << "invariant { " << spec::print(inv.form) << " }\n";
          render(out, n.body, ind + 1);
          out << "\n" << pad(ind) << "done";
        } else if constexpr (std::is_same_v<T, VRaise>) {
          out << pad(ind) << "raise " << to_string(n.channel);
        } else if constexpr (std::is_same_v<T, VTry>) {
          out << pad(ind) << "try\n";
          render(out, n.body, ind + 1);
          out << "\n" << pad(ind) << "with " << to_string(n.channel) << " ->\n";
          render(out, n.handler, ind + 1);
          out << "\n" << pad(ind) << "end";
        } else if constexpr (std::is_same_v<T, VCheck>) {
          const char* kw = n.kind == VCheck::Assume ? "assume" : n.kind == VCheck::LoopPost ? "check" : "assert";
          out << pad(ind) << kw << " { " << spec::print(n.item.form) << " }";
        } else if constexpr (std::is_same_v<T, VPush>) {
          out << pad(ind) << "push φ " << show_var(n.cell);
        }
      },
      e->node);
}

}  // namespace

std::string print(const VExprPtr& e, int indent) {
  std::ostringstream out;
  render(out, e, indent);
  return out.str();
}

std::string print(const VirFunction& f) {
  std::ostringstream out;
  out << "let function " << f.name << " (φ: evmState)";
  for (const auto& p : f.params) out << " (" << p << ": int)";
  out << " : evmState\n";
  for (const auto& r : f.requires_) out << "  requires { " << spec::print(r.item.form) << " }\n";
  for (const auto& en : f.ensures) out << "  ensures { " << spec::print(en.item.form) << " }\n";
  out << "=\n" << print(f.body, 1) << "\n";
  for (const auto& a : f.axioms) out << "axiom " << a.name << " : " << logic::to_smt(a.formula) << "\n";
  return out.str();
}

// ---------------------------------------------------------------- control-flow shape

namespace {

struct Graph {
  size_t nodes = 0;
  std::set<std::pair<size_t, size_t>> edges;
  std::vector<std::vector<size_t>> break_stack;
  std::vector<size_t> exits;

  size_t node(const std::set<size_t>& preds) {
    size_t n = nodes++;
    for (size_t p : preds) edges.insert({p, n});
    return n;
  }
};

using Preds = std::set<size_t>;

Preds yul_block(Graph& g, const yul::Block& b, Preds preds);

Preds yul_stmt(Graph& g, const yul::YStmtPtr& s, Preds preds) {
  return std::visit(
      [&](const auto& n) -> Preds {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, yul::Block>) {
          return yul_block(g, n, preds);
        } else if constexpr (std::is_same_v<T, yul::Break>) {
          g.break_stack.back().push_back(g.node(preds));
          return {};
        } else if constexpr (std::is_same_v<T, yul::Leave>) {
          g.exits.push_back(g.node(preds));
          return {};
        } else if constexpr (std::is_same_v<T, yul::If>) {
          size_t c = g.node(preds);
          Preds out = yul_block(g, n.body, {c});
          out.insert(c);
          return out;
        } else if constexpr (std::is_same_v<T, yul::Switch>) {
          size_t c = g.node(preds);
          Preds out;
          for (const auto& cs : n.cases) {
            Preds o = yul_block(g, cs.body, {c});
            out.insert(o.begin(), o.end());
          }
          if (n.default_body) {
            Preds o = yul_block(g, *n.default_body, {c});
            out.insert(o.begin(), o.end());
          } else {
            out.insert(c);
          }
          return out;
        } else if constexpr (std::is_same_v<T, yul::For>) {
          Preds init = yul_block(g, n.init, preds);
          size_t c = g.node(init);
          g.break_stack.emplace_back();
          Preds body = yul_block(g, n.body, {c});
          Preds post = yul_block(g, n.post, body);
          for (size_t p : post) g.edges.insert({p, c});
          Preds out{c};
          for (size_t b : g.break_stack.back()) out.insert(b);
          g.break_stack.pop_back();
          return out;
        } else {
          return {g.node(preds)};
        }
      },
      s->node);
}

Preds yul_block(Graph& g, const yul::Block& b, Preds preds) {
  for (const auto& s : b.stmts) preds = yul_stmt(g, s, preds);
  return preds;
}

Preds vir_node(Graph& g, const VExprPtr& e, Preds preds) {
  return std::visit(
      [&](const auto& n) -> Preds {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, VSeq>) {
          for (const auto& i : n.items) preds = vir_node(g, i, preds);
          return preds;
        } else if constexpr (std::is_same_v<T, VUnit> || std::is_same_v<T, VCheck> || std::is_same_v<T, VPush>) {
          return preds;
        } else if constexpr (std::is_same_v<T, VRaise>) {
          if (n.channel == Channel::Break) {
            g.break_stack.back().push_back(g.node(preds));
          } else if (n.synthetic) {
            g.exits.insert(g.exits.end(), preds.begin(), preds.end());
          } else {
            g.exits.push_back(g.node(preds));
          }
          return {};
        } else if constexpr (std::is_same_v<T, VIf>) {
          size_t c = g.node(preds);
          Preds out = vir_node(g, n.then, {c});
          out.insert(c);
          return out;
        } else if constexpr (std::is_same_v<T, VMatch>) {
          size_t c = g.node(preds);
          Preds out;
          for (const auto& [_, arm] : n.cases) {
            Preds o = vir_node(g, arm, {c});
            out.insert(o.begin(), o.end());
          }
          if (n.default_arm) {
            Preds o = vir_node(g, n.default_arm, {c});
            out.insert(o.begin(), o.end());
          } else {
            out.insert(c);
          }
          return out;
        } else if constexpr (std::is_same_v<T, VWhile>) {
          size_t c = g.node(preds);
          Preds body = vir_node(g, n.body, {c});
          for (size_t p : body) g.edges.insert({p, c});
          return {c};
        } else if constexpr (std::is_same_v<T, VTry>) {
          if (n.channel == Channel::Break) {
            g.break_stack.emplace_back();
            Preds out = vir_node(g, n.body, preds);
            for (size_t b : g.break_stack.back()) out.insert(b);
            g.break_stack.pop_back();
            return out;
          }
          return vir_node(g, n.body, preds);
        } else {
          return {g.node(preds)};
        }
      },
      e->node);
}

}  // namespace

CfgShape cfg_shape(const yul::YulFunction& f) {
  Graph g;
  size_t entry = g.node({});
  Preds out = yul_block(g, f.body, {entry});
  out.insert(g.exits.begin(), g.exits.end());
  g.node(out);
  return {g.nodes, g.edges.size()};
}

CfgShape cfg_shape(const VirFunction& f) {
  Graph g;
  size_t entry = g.node({});
  Preds preds{entry};
  const auto& top = std::get<VSeq>(f.body->node);
  for (const auto& item : top.items) {
    auto* t = std::get_if<VTry>(&item->node);
    if (t && t->channel == Channel::Leave) preds = vir_node(g, t->body, preds);
  }
  preds.insert(g.exits.begin(), g.exits.end());
  g.node(preds);
  return {g.nodes, g.edges.size()};
}

}  // namespace yulverify::vir
