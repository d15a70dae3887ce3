#include "yulverify/static_checks.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <set>

namespace yulverify::checks {

using namespace yul;

std::string_view to_string(PatternKind p) { return p == PatternKind::Reentrancy ? "reentrancy" : "timestamp"; }

bool Cfg::has_edge(size_t a, size_t b) const {
  if (a >= nodes.size()) return false;
  const auto& s = nodes[a].succ;
  return std::find(s.begin(), s.end(), b) != s.end();
}

std::vector<size_t> Cfg::nodes_at(Span s) const {
  std::vector<size_t> out;
  for (size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i].span == s) out.push_back(i);
  return out;
}

namespace {

bool is_write_op(const std::string& name) {
  return name == "sstore" || name == "mapping_store" || name == "array_store" || name == "array_push";
}

bool is_call_family(const std::string& name) {
  return name == "call" || name == "callcode" || name == "delegatecall" || name == "staticcall";
}

bool is_revert(const YExprPtr& e) {
  auto* c = std::get_if<CallExpr>(&e->node);
  return c && c->callee == "revert";
}

struct Builder {
  Cfg cfg;
  // Expressions evaluated by each node, in order.
  std::vector<std::vector<YExprPtr>> exprs;
  std::vector<std::vector<size_t>> breaks;

  Builder() {
    add({}, "entry", {});
    add({}, "exit", {});
  }

  size_t add(Span span, std::string label, std::vector<YExprPtr> es) {
    cfg.nodes.push_back({span, std::move(label), {}});
    exprs.push_back(std::move(es));
    return cfg.nodes.size() - 1;
  }

  void link(const std::vector<size_t>& from, size_t to) {
    for (size_t f : from) {
      auto& s = cfg.nodes[f].succ;
      if (std::find(s.begin(), s.end(), to) == s.end()) s.push_back(to);
    }
  }

  std::vector<size_t> block(const Block& b, std::vector<size_t> in) {
    for (const auto& s : b.stmts) in = stmt(*s, std::move(in));
    return in;
  }

  std::vector<size_t> stmt(const YStmt& s, std::vector<size_t> in) {
    return std::visit(
        [&](const auto& n) -> std::vector<size_t> {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, Block>) {
            return block(n, std::move(in));
          } else if constexpr (std::is_same_v<T, Break>) {
            size_t id = add(s.span, "break", {});
            link(in, id);
            if (!breaks.empty()) breaks.back().push_back(id);
            return {};
          } else if constexpr (std::is_same_v<T, Leave>) {
            size_t id = add(s.span, "leave", {});
            link(in, id);
            link({id}, 1);
            return {};
          } else if constexpr (std::is_same_v<T, ExprStmt>) {
            size_t id = add(s.span, print_expr(n.expr), {n.expr});
            link(in, id);
            if (is_revert(n.expr)) return {};
            return {id};
          } else if constexpr (std::is_same_v<T, Let>) {
            size_t id = add(s.span, "let " + n.name, n.init ? std::vector<YExprPtr>{n.init} : std::vector<YExprPtr>{});
            link(in, id);
            return {id};
          } else if constexpr (std::is_same_v<T, Assign>) {
            size_t id = add(s.span, n.name + " :=", {n.value});
            link(in, id);
            return {id};
          } else if constexpr (std::is_same_v<T, If>) {
            size_t id = add(s.span, "if " + print_expr(n.cond), {n.cond});
            link(in, id);
            auto out = block(n.body, {id});
            out.push_back(id);
            return out;
          } else if constexpr (std::is_same_v<T, Switch>) {
            size_t id = add(s.span, "switch " + print_expr(n.scrutinee), {n.scrutinee});
            link(in, id);
            std::vector<size_t> out;
            for (const auto& c : n.cases) {
              auto o = block(c.body, {id});
              out.insert(out.end(), o.begin(), o.end());
            }
            if (n.default_body) {
              auto o = block(*n.default_body, {id});
              out.insert(out.end(), o.begin(), o.end());
            } else {
              out.push_back(id);
            }
            return out;
          } else if constexpr (std::is_same_v<T, For>) {
            in = block(n.init, std::move(in));
            size_t cond = add(s.span, "for " + print_expr(n.cond), {n.cond});
            link(in, cond);
            breaks.emplace_back();
            auto body_out = block(n.body, {cond});
            auto post_out = block(n.post, body_out);
            link(post_out, cond);
            std::vector<size_t> out = breaks.back();
            breaks.pop_back();
            out.push_back(cond);
            return out;
          }
          return in;
        },
        s.node);
  }
};

Builder build(const YulFunction& f) {
  Builder b;
  auto out = b.block(f.body, {0});
  b.link(out, 1);
  return b;
}

// ------------------------------------------------------------------ reentrancy

enum class EvKind { External, Write, Internal };

struct Event {
  EvKind kind;
  Span span;
  std::string callee;
};

void events(const YExprPtr& e, const YulUnit& unit, std::vector<Event>& out) {
  auto* c = std::get_if<CallExpr>(&e->node);
  if (!c) return;
  for (auto it = c->args.rbegin(); it != c->args.rend(); ++it) events(*it, unit, out);
  if (is_write_op(c->callee)) out.push_back({EvKind::Write, e->span, c->callee});
  else if (is_call_family(c->callee)) out.push_back({EvKind::External, e->span, c->callee});
  else if (unit.find(c->callee)) out.push_back({EvKind::Internal, e->span, c->callee});
  else if (!is_opcode(c->callee)) out.push_back({EvKind::External, e->span, c->callee});
}

struct Summary {
  bool writes = false;
  bool external = false;
  bool ext_then_write = false;
  friend bool operator==(const Summary&, const Summary&) = default;
};

using Summaries = std::map<std::string, Summary>;

bool may_write(const Event& ev, const Summaries& sums) {
  if (ev.kind == EvKind::Write) return true;
  if (ev.kind == EvKind::Internal) {
    auto it = sums.find(ev.callee);
    return it != sums.end() && it->second.writes;
  }
  return false;
}

bool may_call_out(const Event& ev, const Summaries& sums) {
  if (ev.kind == EvKind::External) return true;
  if (ev.kind == EvKind::Internal) {
    auto it = sums.find(ev.callee);
    return it != sums.end() && it->second.external;
  }
  return false;
}

struct Analysis {
  Builder b;
  std::vector<std::vector<Event>> ev;  // per node
};

Analysis analyse(const YulFunction& f, const YulUnit& unit) {
  Analysis a{build(f), {}};
  for (const auto& es : a.b.exprs) {
    std::vector<Event> v;
    for (const auto& e : es) events(e, unit, v);
    a.ev.push_back(std::move(v));
  }
  return a;
}

struct Hit {
  Event source;
  Event sink;
  std::vector<size_t> path;
};

std::vector<Hit> find_hits(const Analysis& a, const Summaries& sums) {
  std::vector<Hit> hits;
  std::set<std::pair<int, int>> seen_sites;
  for (size_t n = 0; n < a.ev.size(); ++n) {
    for (size_t k = 0; k < a.ev[n].size(); ++k) {
      const Event& src = a.ev[n][k];
      if (!may_call_out(src, sums)) continue;
      if (!seen_sites.insert({src.span.line, src.span.col}).second) continue;
      if (src.kind == EvKind::Internal && sums.at(src.callee).ext_then_write) {
        hits.push_back({src, src, {n}});
        continue;
      }
      std::optional<Hit> found;
      for (size_t j = k + 1; j < a.ev[n].size() && !found; ++j)
        if (may_write(a.ev[n][j], sums)) found = Hit{src, a.ev[n][j], {n}};
      if (!found) {
        // Shortest path to a node with a write.
        std::map<size_t, size_t> parent;
        std::deque<size_t> queue;
        for (size_t s : a.b.cfg.nodes[n].succ)
          if (!parent.count(s)) {
            parent[s] = n;
            queue.push_back(s);
          }
        while (!queue.empty() && !found) {
          size_t m = queue.front();
          queue.pop_front();
          for (const auto& e : a.ev[m]) {
            if (!may_write(e, sums)) continue;
            std::vector<size_t> path{m};
            size_t cur = m;
            while (true) {
              size_t p = parent.at(cur);
              path.push_back(p);
              if (p == n) break;
              cur = p;
            }
            std::reverse(path.begin(), path.end());
            found = Hit{src, e, path};
            break;
          }
          for (size_t s : a.b.cfg.nodes[m].succ)
            if (!parent.count(s)) {
              parent[s] = m;
              queue.push_back(s);
            }
        }
      }
      if (found) hits.push_back(*found);
    }
  }
  return hits;
}

Summaries summarise(const YulUnit& unit) {
  Summaries sums;
  for (const auto& f : unit.functions) sums[f.name] = {};
  std::map<std::string, Analysis> an;
  for (const auto& f : unit.functions) an.emplace(f.name, analyse(f, unit));
  for (bool changed = true; changed;) {
    changed = false;
    for (const auto& f : unit.functions) {
      Summary s;
      for (const auto& evs : an.at(f.name).ev)
        for (const auto& e : evs) {
          s.writes = s.writes || may_write(e, sums);
          s.external = s.external || may_call_out(e, sums);
        }
      s.ext_then_write = !find_hits(an.at(f.name), sums).empty();
      if (!(s == sums[f.name])) {
        sums[f.name] = s;
        changed = true;
      }
    }
  }
  return sums;
}

// ------------------------------------------------------------------- timestamp

using Chain = std::vector<Span>;

bool reads_timestamp(const YExprPtr& e) {
  auto* c = std::get_if<CallExpr>(&e->node);
  if (!c) return false;
  if (c->callee == "timestamp") return true;
  return std::any_of(c->args.begin(), c->args.end(), reads_timestamp);
}

bool block_reads_timestamp(const Block& b);

bool stmt_reads_timestamp(const YStmt& s) {
  return std::visit(
      [&](const auto& n) -> bool {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Block>) return block_reads_timestamp(n);
        else if constexpr (std::is_same_v<T, ExprStmt>) return reads_timestamp(n.expr);
        else if constexpr (std::is_same_v<T, Let>) return n.init && reads_timestamp(n.init);
        else if constexpr (std::is_same_v<T, Assign>) return reads_timestamp(n.value);
        else if constexpr (std::is_same_v<T, If>) return reads_timestamp(n.cond) || block_reads_timestamp(n.body);
        else if constexpr (std::is_same_v<T, Switch>) {
          if (reads_timestamp(n.scrutinee)) return true;
          for (const auto& c : n.cases)
            if (block_reads_timestamp(c.body)) return true;
          return n.default_body && block_reads_timestamp(*n.default_body);
        } else if constexpr (std::is_same_v<T, For>) {
          return block_reads_timestamp(n.init) || reads_timestamp(n.cond) || block_reads_timestamp(n.post) ||
                 block_reads_timestamp(n.body);
        }
        return false;
      },
      s.node);
}

bool block_reads_timestamp(const Block& b) {
  return std::any_of(b.stmts.begin(), b.stmts.end(), [](const auto& s) { return stmt_reads_timestamp(*s); });
}

class Taint {
 public:
  Taint(const YulFunction& f, const YulUnit& unit, const Summaries& sums) : f_(f), unit_(unit), sums_(sums) {
    for (const auto& g : unit.functions)
      if (block_reads_timestamp(g.body)) ts_fns_.insert(g.name);
    // Functions calling a timestamp-reading function read it too.
    for (bool changed = true; changed;) {
      changed = false;
      for (const auto& g : unit.functions)
        if (!ts_fns_.count(g.name) && calls_any(g.body, ts_fns_)) {
          ts_fns_.insert(g.name);
          changed = true;
        }
    }
  }

  std::vector<PatternFinding> run() {
    for (bool changed = true; changed;) {
      changed_ = false;
      block(f_.body, std::nullopt);
      changed = changed_;
    }
    collecting_ = true;
    block(f_.body, std::nullopt);
    return std::move(findings_);
  }

 private:
  const YulFunction& f_;
  const YulUnit& unit_;
  const Summaries& sums_;
  std::set<std::string> ts_fns_;
  std::map<std::string, Chain> tainted_;
  bool changed_ = false;
  bool collecting_ = false;
  std::vector<PatternFinding> findings_;
  std::set<std::pair<Span, Span>> reported_;

  static bool calls_any(const Block& b, const std::set<std::string>& fns) {
    bool hit = false;
    std::function<void(const YExprPtr&)> ex = [&](const YExprPtr& e) {
      if (auto* c = std::get_if<CallExpr>(&e->node)) {
        if (fns.count(c->callee)) hit = true;
        for (const auto& a : c->args) ex(a);
      }
    };
    std::function<void(const Block&)> blk = [&](const Block& bb) {
      for (const auto& s : bb.stmts)
        std::visit(
            [&](const auto& n) {
              using T = std::decay_t<decltype(n)>;
              if constexpr (std::is_same_v<T, Block>) blk(n);
              else if constexpr (std::is_same_v<T, ExprStmt>) ex(n.expr);
              else if constexpr (std::is_same_v<T, Let>) {
                if (n.init) ex(n.init);
              } else if constexpr (std::is_same_v<T, Assign>) ex(n.value);
              else if constexpr (std::is_same_v<T, If>) {
                ex(n.cond);
                blk(n.body);
              } else if constexpr (std::is_same_v<T, Switch>) {
                ex(n.scrutinee);
                for (const auto& c : n.cases) blk(c.body);
                if (n.default_body) blk(*n.default_body);
              } else if constexpr (std::is_same_v<T, For>) {
                blk(n.init);
                ex(n.cond);
                blk(n.post);
                blk(n.body);
              }
            },
            s->node);
    };
    blk(b);
    return hit;
  }

  std::optional<Chain> expr(const YExprPtr& e) const {
    if (auto* v = std::get_if<VarRef>(&e->node)) {
      auto it = tainted_.find(v->name);
      if (it != tainted_.end()) return it->second;
      return std::nullopt;
    }
    auto* c = std::get_if<CallExpr>(&e->node);
    if (!c) return std::nullopt;
    if (c->callee == "timestamp") return Chain{e->span};
    for (auto it = c->args.rbegin(); it != c->args.rend(); ++it)
      if (auto ch = expr(*it)) return ch;
    if (ts_fns_.count(c->callee)) return Chain{e->span};
    return std::nullopt;
  }

  void taint(const std::string& var, Chain chain) {
    if (tainted_.count(var)) return;
    tainted_[var] = std::move(chain);
    changed_ = true;
  }

  void report(PatternFinding f) {
    if (!collecting_) return;
    if (!reported_.insert({f.site, f.sink}).second) return;
    f.pattern = PatternKind::Timestamp;
    f.function = f_.name;
    findings_.push_back(std::move(f));
  }

  bool writes(const CallExpr& c) const {
    if (is_write_op(c.callee)) return true;
    auto it = sums_.find(c.callee);
    return unit_.find(c.callee) && it != sums_.end() && it->second.writes;
  }

  // Storage writes inside an expression: data-dependent or under tainted control.
  void sinks(const YExprPtr& e, const std::optional<Chain>& control) {
    auto* c = std::get_if<CallExpr>(&e->node);
    if (!c) return;
    for (const auto& a : c->args) sinks(a, control);
    if (!writes(*c)) return;
    for (const auto& a : c->args) {
      if (auto ch = expr(a)) {
        PatternFinding f;
        f.site = e->span;
        f.sink = e->span;
        f.witness = *ch;
        f.witness.push_back(e->span);
        f.message = "storage write of a timestamp-derived value";
        report(std::move(f));
        return;
      }
    }
  }

  // First storage write or return inside a block.
  std::optional<Span> guarded_effect(const Block& b) const {
    for (const auto& s : b.stmts) {
      std::optional<Span> hit = std::visit(
          [&](const auto& n) -> std::optional<Span> {
            using T = std::decay_t<decltype(n)>;
            auto in_expr = [&](const YExprPtr& e) -> std::optional<Span> {
              std::optional<Span> r;
              std::function<void(const YExprPtr&)> go = [&](const YExprPtr& x) {
                if (r) return;
                if (auto* c = std::get_if<CallExpr>(&x->node)) {
                  for (const auto& a : c->args) go(a);
                  if (!r && writes(*c)) r = x->span;
                }
              };
              go(e);
              return r;
            };
            if constexpr (std::is_same_v<T, Block>) return guarded_effect(n);
            else if constexpr (std::is_same_v<T, Leave>) return s->span;
            else if constexpr (std::is_same_v<T, ExprStmt>) return in_expr(n.expr);
            else if constexpr (std::is_same_v<T, Let>) {
              if (f_.ret && n.name == *f_.ret) return s->span;
              return n.init ? in_expr(n.init) : std::nullopt;
            } else if constexpr (std::is_same_v<T, Assign>) {
              if (f_.ret && n.name == *f_.ret) return s->span;
              return in_expr(n.value);
            } else if constexpr (std::is_same_v<T, If>) {
              if (auto r = in_expr(n.cond)) return r;
              return guarded_effect(n.body);
            } else if constexpr (std::is_same_v<T, Switch>) {
              if (auto r = in_expr(n.scrutinee)) return r;
              for (const auto& c : n.cases)
                if (auto r = guarded_effect(c.body)) return r;
              if (n.default_body) return guarded_effect(*n.default_body);
              return std::nullopt;
            } else if constexpr (std::is_same_v<T, For>) {
              if (auto r = guarded_effect(n.init)) return r;
              if (auto r = in_expr(n.cond)) return r;
              if (auto r = guarded_effect(n.body)) return r;
              return guarded_effect(n.post);
            }
            return std::nullopt;
          },
          s->node);
      if (hit) return hit;
    }
    return std::nullopt;
  }

  void branch(Span site, const std::optional<Chain>& cond, const std::vector<const Block*>& arms,
              const std::optional<Chain>& control) {
    const std::optional<Chain>& eff = cond ? cond : control;
    if (cond) {
      for (const Block* b : arms) {
        if (auto sink = guarded_effect(*b)) {
          PatternFinding f;
          f.site = site;
          f.sink = *sink;
          f.witness = *cond;
          f.witness.push_back(site);
          f.witness.push_back(*sink);
          f.message = "timestamp-dependent branch guards a storage write or return";
          report(std::move(f));
          break;
        }
      }
    }
    for (const Block* b : arms) block(*b, eff);
  }

  void assign(const std::string& var, const YExprPtr& value, Span span, const std::optional<Chain>& control) {
    std::optional<Chain> ch = value ? expr(value) : std::nullopt;
    if (!ch) ch = control;
    if (ch) {
      Chain c = *ch;
      c.push_back(span);
      taint(var, std::move(c));
    }
    if (value) sinks(value, control);
  }

  void block(const Block& b, const std::optional<Chain>& control) {
    for (const auto& s : b.stmts) {
      std::visit(
          [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, Block>) block(n, control);
            else if constexpr (std::is_same_v<T, ExprStmt>) sinks(n.expr, control);
            else if constexpr (std::is_same_v<T, Let>) assign(n.name, n.init, s->span, control);
            else if constexpr (std::is_same_v<T, Assign>) assign(n.name, n.value, s->span, control);
            else if constexpr (std::is_same_v<T, If>) {
              sinks(n.cond, control);
              branch(s->span, expr(n.cond), {&n.body}, control);
            } else if constexpr (std::is_same_v<T, Switch>) {
              sinks(n.scrutinee, control);
              std::vector<const Block*> arms;
              for (const auto& c : n.cases) arms.push_back(&c.body);
              if (n.default_body) arms.push_back(&*n.default_body);
              branch(s->span, expr(n.scrutinee), arms, control);
            } else if constexpr (std::is_same_v<T, For>) {
              block(n.init, control);
              sinks(n.cond, control);
              branch(s->span, expr(n.cond), {&n.body, &n.post}, control);
            }
          },
          s->node);
    }
  }
};

}  // namespace

Cfg build_cfg(const YulFunction& f) { return build(f).cfg; }

std::vector<PatternFinding> check_reentrancy(const YulFunction& f, const YulUnit& unit) {
  Summaries sums = summarise(unit);
  Analysis a = analyse(f, unit);
  std::vector<PatternFinding> out;
  for (const auto& h : find_hits(a, sums)) {
    PatternFinding pf;
    pf.pattern = PatternKind::Reentrancy;
    pf.function = f.name;
    pf.site = h.source.span;
    pf.sink = h.sink.span;
    for (size_t n : h.path) pf.witness.push_back(a.b.cfg.nodes[n].span);
    pf.message = "storage write (" + h.sink.callee + ") reachable after external call to " + h.source.callee;
    out.push_back(std::move(pf));
  }
  return out;
}

std::vector<PatternFinding> check_timestamp(const YulFunction& f, const YulUnit& unit) {
  Summaries sums = summarise(unit);
  return Taint(f, unit, sums).run();
}

std::vector<PatternFinding> run_checks(const YulUnit& unit) {
  std::vector<PatternFinding> out;
  for (const auto& f : unit.functions) {
    if (f.has_check(spec::Pattern::Reentrancy)) {
      auto r = check_reentrancy(f, unit);
      out.insert(out.end(), r.begin(), r.end());
    }
    if (f.has_check(spec::Pattern::Timestamp)) {
      auto r = check_timestamp(f, unit);
      out.insert(out.end(), r.begin(), r.end());
    }
  }
  return out;
}

}  // namespace yulverify::checks
