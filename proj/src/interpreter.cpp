#include "yulverify/interpreter.hpp"

#include <random>

namespace yulverify::interp {

using namespace yul;

namespace {

struct RevertSignal {};

enum class Signal { Normal, Break, Leave };

using Frame = std::map<std::string, Word>;

class Machine {
 public:
  Machine(const YulUnit& unit, const RunOptions& opts, evm::EvmState state)
      : unit_(unit), opts_(opts), state_(std::move(state)), fuel_(opts.fuel), rng_(opts.stubs.seed) {}

  Word call(const YulFunction& f, const std::vector<Word>& args, Frame* out_frame = nullptr) {
    if (args.size() != f.params.size())
      throw Error(ErrorKind::PreconditionViolation,
                  f.name + " expects " + std::to_string(f.params.size()) + " arguments, got " +
                      std::to_string(args.size()),
                  f.span);
    if (++depth_ > 1024) throw Error(ErrorKind::OutOfFuel, "call depth exceeded in " + f.name, f.span);
    Frame frame;
    for (size_t i = 0; i < args.size(); ++i) frame[f.params[i]] = args[i];
    if (f.ret) frame[*f.ret] = 0;
    exec_block(f.body, frame);
    --depth_;
    if (out_frame) *out_frame = frame;
    return f.ret ? frame[*f.ret] : Word(0);
  }

  evm::EvmState& state() { return state_; }
  std::vector<Trace>& traces() { return traces_; }

 private:
  const YulUnit& unit_;
  const RunOptions& opts_;
  evm::EvmState state_;
  uint64_t fuel_;
  std::mt19937_64 rng_;
  std::vector<Trace> traces_;
  int depth_ = 0;
  const YulFunction* current_fn_ = nullptr;

  void tick(Span span) {
    if (fuel_ == 0) throw Error(ErrorKind::OutOfFuel, "statement budget exhausted", span);
    --fuel_;
  }

  Signal exec_block(const Block& b, Frame& frame) {
    for (const auto& st : b.stmts) {
      Signal s = exec(*st, frame);
      if (s != Signal::Normal) return s;
    }
    return Signal::Normal;
  }

  Signal exec(const YStmt& st, Frame& frame) {
    tick(st.span);
    return std::visit(
        [&](const auto& n) -> Signal {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, Block>) {
            return exec_block(n, frame);
          } else if constexpr (std::is_same_v<T, Break>) {
            return Signal::Break;
          } else if constexpr (std::is_same_v<T, Leave>) {
            return Signal::Leave;
          } else if constexpr (std::is_same_v<T, ExprStmt>) {
            eval(n.expr, frame);
            return Signal::Normal;
          } else if constexpr (std::is_same_v<T, If>) {
            if (sgn(eval(n.cond, frame)) != 0) return exec_block(n.body, frame);
            return Signal::Normal;
          } else if constexpr (std::is_same_v<T, Let>) {
            frame[n.name] = n.init ? eval(n.init, frame) : Word(0);
            return Signal::Normal;
          } else if constexpr (std::is_same_v<T, Assign>) {
            frame[n.name] = eval(n.value, frame);
            return Signal::Normal;
          } else if constexpr (std::is_same_v<T, Switch>) {
            Word v = eval(n.scrutinee, frame);
            for (const auto& c : n.cases)
              if (c.literal == v) return exec_block(c.body, frame);
            if (n.default_body) return exec_block(*n.default_body, frame);
            return Signal::Normal;
          } else {
            return exec_for(st, n, frame);
          }
        },
        st.node);
  }

  Signal exec_for(const YStmt& st, const For& loop, Frame& frame) {
    Signal init = exec_block(loop.init, frame);
    if (init != Signal::Normal) return init;
    const spec::SpecItem* learn = nullptr;
    for (const auto& s : st.specs)
      if (s.kind == spec::Directive::Learn) learn = &s;
    Trace* trace = nullptr;
    if (learn) {
      traces_.push_back(Trace{st.span, current_fn_ ? current_fn_->name : "", learn->watched, {}});
      trace = &traces_.back();
    }
    size_t trace_index = traces_.size() - 1;
    for (size_t iter = 0;; ++iter) {
      if (trace) {
        trace = &traces_[trace_index];
        TraceRow row{iter, {}};
        for (const auto& w : learn->watched) {
          auto it = frame.find(w);
          if (it == frame.end()) throw Error(ErrorKind::WatchedUnbound, "'" + w + "' at loop head", st.span);
          row.values.push_back(it->second);
        }
        trace->rows.push_back(std::move(row));
      }
      tick(st.span);
      if (sgn(eval(loop.cond, frame)) == 0) break;
      Signal s = exec_block(loop.body, frame);
      if (s == Signal::Break) break;
      if (s == Signal::Leave) return s;
      Signal p = exec_block(loop.post, frame);
      if (p == Signal::Leave) return p;
    }
    return Signal::Normal;
  }

  Word eval(const YExprPtr& e, Frame& frame) {
    return std::visit(
        [&](const auto& n) -> Word {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, Lit>) {
            return n.value;
          } else if constexpr (std::is_same_v<T, VarRef>) {
            auto it = frame.find(n.name);
            if (it == frame.end()) throw Error(ErrorKind::UnboundIdentifier, "'" + n.name + "'", e->span);
            return it->second;
          } else {
            return eval_call(n, e->span, frame);
          }
        },
        e->node);
  }

  Word eval_call(const CallExpr& c, Span span, Frame& frame) {
    // Yul evaluates arguments right to left.
    std::vector<Word> args(c.args.size());
    for (size_t i = c.args.size(); i-- > 0;) args[i] = eval(c.args[i], frame);

    if (const YulFunction* f = unit_.find(c.callee)) {
      const YulFunction* saved = current_fn_;
      current_fn_ = f;
      Word r = call(*f, args);
      current_fn_ = saved;
      return r;
    }
    if (auto op = evm::lookup_opcode(c.callee, args.size())) {
      for (size_t i = args.size(); i-- > 0;) state_.stack.push_back(args[i]);
      state_ = evm::step(*op, std::move(state_), opts_.evm);
      if (state_.reverted) throw RevertSignal{};
      if (!evm::returns_value(*op)) return 0;
      Word v = evm::top(state_);
      state_.stack.pop_back();
      return v;
    }
    if (yul::is_opcode(c.callee) && c.callee != "call")
      throw Error(ErrorKind::SyntaxError, "wrong number of arguments to " + c.callee, span);
    return external(c.callee, args, span);
  }

  Word external(const std::string& callee, const std::vector<Word>& args, Span span) {
    const Stub* stub = nullptr;
    if (auto it = opts_.stubs.stubs.find(callee); it != opts_.stubs.stubs.end()) stub = &it->second;
    else if (opts_.stubs.fallback) stub = &*opts_.stubs.fallback;
    if (!stub) throw Error(ErrorKind::CalleeUnknown, "'" + callee + "'", span);
    if (stub->kind == Stub::Pure && stub->fn) return stub->fn(args);
    // Havoc: a seeded pseudo-random word.
    Word w = 0;
    for (int i = 0; i < 4; ++i) {
      w <<= 64;
      w += Word(std::to_string(rng_()));
    }
    return w;
  }

 public:
  void set_current(const YulFunction* f) { current_fn_ = f; }
};

}  // namespace

RunOutcome run_function(const YulUnit& unit, std::string_view name, const std::vector<Word>& args,
                        const evm::EvmState& init, const RunOptions& opts) {
  const YulFunction* f = unit.find(name);
  if (!f) throw Error(ErrorKind::CalleeUnknown, "no function '" + std::string(name) + "'");
  evm::EvmState start = init;
  start.calldata = args;
  Machine m(unit, opts, start);
  m.set_current(f);
  RunOutcome out;
  try {
    Frame frame;
    Word r = m.call(*f, args, &frame);
    out.status = RunStatus::Returned;
    if (f->ret) out.returned = r;
    out.locals = std::move(frame);
    out.final = m.state();
  } catch (const RevertSignal&) {
    out.status = RunStatus::Reverted;
    out.final = m.state();
    out.final.storage = init.storage;
    out.final.reverted = true;
  }
  out.traces = std::move(m.traces());
  return out;
}

RunOutcome run_function(const YulUnit& unit, std::string_view name, const std::vector<Word>& args,
                        const evm::EvmState& init, uint64_t fuel) {
  RunOptions opts;
  opts.fuel = fuel;
  return run_function(unit, name, args, init, opts);
}

std::vector<Trace> collect_loop_traces(const YulUnit& unit, std::string_view name, const std::vector<Word>& args,
                                       const evm::EvmState& init, const RunOptions& opts) {
  return run_function(unit, name, args, init, opts).traces;
}

// ---------------------------------------------------------------- spec evaluation

namespace {

struct Evaluator {
  const SpecEnv& env;
  bool at_entry = false;
  std::map<std::string, Word> binders;

  const evm::EvmState* state(bool old) const { return (old || at_entry) ? env.entry : env.current; }

  std::optional<Word> expr(const spec::ExprPtr& e) {
    using namespace spec;
    return std::visit(
        [&](const auto& n) -> std::optional<Word> {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, Num>) {
            return n.value;
          } else if constexpr (std::is_same_v<T, Ident>) {
            if (auto it = binders.find(n.name); it != binders.end()) return it->second;
            if (n.binding == Binding::Result) return env.result;
            bool old = n.old || (at_entry && n.binding == Binding::Param);
            const auto& vals = old ? env.entry_values : env.current_values;
            if (auto it = vals.find(n.name); it != vals.end()) return it->second;
            if (auto it = env.current_values.find(n.name); it != env.current_values.end()) return it->second;
            return std::nullopt;
          } else if constexpr (std::is_same_v<T, Neg>) {
            auto v = expr(n.operand);
            if (!v) return std::nullopt;
            return Word(-*v);
          } else if constexpr (std::is_same_v<T, Binary>) {
            auto a = expr(n.lhs);
            auto b = expr(n.rhs);
            if (!a || !b) return std::nullopt;
            switch (n.op) {
              case BinOp::Add: return Word(*a + *b);
              case BinOp::Sub: return Word(*a - *b);
              case BinOp::Mul: return Word(*a * *b);
              case BinOp::Div: {
                if (sgn(*b) == 0) return std::nullopt;
                Word q;
                mpz_fdiv_q(q.get_mpz_t(), a->get_mpz_t(), b->get_mpz_t());
                return q;
              }
              case BinOp::Mod: {
                if (sgn(*b) == 0) return std::nullopt;
                Word r;
                mpz_fdiv_r(r.get_mpz_t(), a->get_mpz_t(), b->get_mpz_t());
                return r;
              }
              case BinOp::Eq: return Word(*a == *b ? 1 : 0);
              case BinOp::Ne: return Word(*a != *b ? 1 : 0);
              case BinOp::Lt: return Word(*a < *b ? 1 : 0);
              case BinOp::Le: return Word(*a <= *b ? 1 : 0);
              case BinOp::Gt: return Word(*a > *b ? 1 : 0);
              case BinOp::Ge: return Word(*a >= *b ? 1 : 0);
            }
            return std::nullopt;
          } else if constexpr (std::is_same_v<T, Accessor>) {
            const evm::EvmState* s = state(n.old);
            if (!s) return std::nullopt;
            if (n.kind == AccessorKind::Meta) return s->storage.length(n.slot);
            if (n.state == StateKind::Scalar) return s->storage.load(n.slot);
            if (n.args.empty()) return std::nullopt;
            std::vector<Word> keys;
            for (const auto& a : n.args) {
              auto v = expr(a);
              if (!v) return std::nullopt;
              keys.push_back(*v);
            }
            return s->storage.map_get(n.slot, keys);
          } else if constexpr (std::is_same_v<T, EnvRef>) {
            const evm::EvmState* s = env.entry ? env.entry : env.current;
            if (!s) return std::nullopt;
            switch (n.var) {
              case EnvVar::Caller: return s->message.sender;
              case EnvVar::CallValue: return s->message.value;
              case EnvVar::Address: return s->message.recipient;
              case EnvVar::Timestamp: return s->timestamp;
            }
            return std::nullopt;
          } else {
            return std::nullopt;
          }
        },
        e->node);
  }

  std::optional<bool> form(const spec::FormPtr& f) {
    using namespace spec;
    return std::visit(
        [&](const auto& n) -> std::optional<bool> {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, ExprForm>) {
            auto v = expr(n.expr);
            if (!v) return std::nullopt;
            return sgn(*v) != 0;
          } else if constexpr (std::is_same_v<T, StatusForm>) {
            return n.status == Status::Revert ? env.reverted : !env.reverted;
          } else if constexpr (std::is_same_v<T, Not>) {
            auto v = form(n.operand);
            if (!v) return std::nullopt;
            return !*v;
          } else if constexpr (std::is_same_v<T, Implies>) {
            // The antecedent of a status implication describes the entry state.
            bool saved = at_entry;
            if (std::holds_alternative<StatusForm>(n.rhs->node)) at_entry = true;
            auto a = form(n.lhs);
            at_entry = saved;
            if (a && !*a) return true;
            auto b = form(n.rhs);
            if (!a || !b) return (b && *b) ? std::optional<bool>(true) : std::nullopt;
            return *b;
          } else if constexpr (std::is_same_v<T, And>) {
            auto a = form(n.lhs);
            if (a && !*a) return false;
            auto b = form(n.rhs);
            if (b && !*b) return false;
            if (!a || !b) return std::nullopt;
            return true;
          } else if constexpr (std::is_same_v<T, Or>) {
            auto a = form(n.lhs);
            if (a && *a) return true;
            auto b = form(n.rhs);
            if (b && *b) return true;
            if (!a || !b) return std::nullopt;
            return false;
          } else {
            return std::nullopt;
          }
        },
        f->node);
  }
};

}  // namespace

std::optional<bool> eval_form(const spec::FormPtr& f, const SpecEnv& env) {
  Evaluator ev{env, false, {}};
  return ev.form(f);
}

std::optional<Word> eval_expr(const spec::ExprPtr& e, const SpecEnv& env) {
  Evaluator ev{env, false, {}};
  return ev.expr(e);
}

}  // namespace yulverify::interp
