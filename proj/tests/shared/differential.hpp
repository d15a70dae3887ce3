#pragma once

#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "yulverify/interpreter.hpp"
#include "yulverify/yul.hpp"

namespace yulverify::diff {

struct Outcome {
  std::string function;
  size_t accepted = 0;   // runs whose inputs satisfied every @pre
  size_t attempts = 0;
  std::vector<std::string> failures;  // violated @post, with the inputs
};

class Inputs {
 public:
  explicit Inputs(uint64_t seed) : rng_(seed) {}

  // Small values dominate so that range preconditions are often met; full
  // words and boundary values appear as well.
  Word word() {
    switch (rng_() % 8) {
      case 0: return 0;
      case 1: return pow2(256) - 1;
      case 2: {
        Word w = 0;
        for (int i = 0; i < 4; ++i) w = (w << 64) + Word(std::to_string(rng_()));
        return w;
      }
      case 3: return Word(std::to_string(rng_() % 0x10000));
      case 4: return Word(std::to_string(rng_() % 0x100000000ULL));
      default: return Word(std::to_string(rng_() % 24));
    }
  }

  Word address() { return rng_() % 4 == 0 ? Word(std::to_string(1 + rng_() % 3)) : Word(std::to_string(rng_())); }

  evm::EvmState state(const yul::YulUnit& u, const std::vector<Word>& args) {
    evm::EvmState s;
    s.message.sender = address();
    s.timestamp = Word(std::to_string(rng_() % 2'000'000'000));
    s.gas = pow2(40);
    std::vector<Word> keys = args;
    keys.push_back(s.message.sender);
    for (const auto& v : u.state_vars) {
      if (v.kind == spec::StateKind::Scalar) {
        // Address-typed slots sometimes start equal to the caller.
        s.storage.slots[v.id] = rng_() % 2 ? s.message.sender : word();
      } else {
        for (const auto& k : keys)
          if (rng_() % 4) s.storage.maps[v.id][{k}] = word();
      }
    }
    return s;
  }

  std::vector<Word> args(const yul::YulFunction& f, const evm::EvmState* caller_hint) {
    std::vector<Word> out;
    for (size_t i = 0; i < f.params.size(); ++i)
      out.push_back(caller_hint && rng_() % 5 == 0 ? caller_hint->message.sender : word());
    return out;
  }

 private:
  std::mt19937_64 rng_;
};

inline std::string describe(const yul::YulFunction& f, const std::vector<Word>& args, const evm::EvmState& s) {
  std::ostringstream out;
  out << f.name << "(";
  for (size_t i = 0; i < args.size(); ++i) out << (i ? ", " : "") << args[i].get_str();
  out << ") caller=" << s.message.sender.get_str();
  return out.str();
}

// Runs `f` on random inputs until `runs` of them satisfy every @pre, and
// checks every @post on the interpreter's final state.
inline Outcome check_function(const yul::YulUnit& u, const yul::YulFunction& f, size_t runs, uint64_t seed,
                              size_t max_attempts = 200'000) {
  Outcome o;
  o.function = f.name;
  Inputs gen(seed);
  while (o.accepted < runs && o.attempts < max_attempts) {
    ++o.attempts;
    // Draw the state twice so that arguments can coincide with the caller.
    evm::EvmState probe = gen.state(u, {});
    std::vector<Word> args = gen.args(f, &probe);
    evm::EvmState init = gen.state(u, args);
    init.message.sender = probe.message.sender;

    interp::SpecEnv pre;
    pre.entry = &init;
    pre.current = &init;
    for (size_t i = 0; i < f.params.size(); ++i) pre.entry_values[f.params[i]] = pre.current_values[f.params[i]] = args[i];
    bool ok = true;
    for (const auto& s : f.specs)
      if (s.kind == spec::Directive::Pre && !s.deferred) ok = ok && interp::eval_form(s.form, pre).value_or(false);
    if (!ok) continue;
    ++o.accepted;

    auto out = interp::run_function(u, f.name, args, init);
    interp::SpecEnv post;
    post.entry = &init;
    post.current = &out.final;
    post.entry_values = pre.entry_values;
    post.current_values = out.locals;
    for (size_t i = 0; i < f.params.size(); ++i) post.current_values.emplace(f.params[i], args[i]);
    post.result = out.returned;
    post.reverted = out.status == interp::RunStatus::Reverted;
    for (const auto& s : f.specs) {
      if (s.kind != spec::Directive::Post || s.deferred) continue;
      auto v = interp::eval_form(s.form, post);
      if (!v || !*v)
        o.failures.push_back(describe(f, args, init) + (v ? " violates " : " cannot evaluate ") + spec::print(s));
    }
  }
  return o;
}

inline std::vector<Outcome> check_unit(const yul::YulUnit& u, size_t runs, uint64_t seed) {
  std::vector<Outcome> out;
  for (const auto& f : u.functions) {
    bool has_post = false;
    for (const auto& s : f.specs) has_post = has_post || s.kind == spec::Directive::Post;
    if (has_post) out.push_back(check_function(u, f, runs, seed + out.size()));
  }
  return out;
}

}  // namespace yulverify::diff
