#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "yulverify/annotations.hpp"
#include "yulverify/evm.hpp"
#include "yulverify/yul.hpp"

namespace yulverify::interp {

enum class RunStatus { Returned, Reverted };

struct TraceRow {
  size_t iteration = 0;
  std::vector<Word> values;
};

struct Trace {
  Span loop_id;
  std::string function;
  std::vector<std::string> watched;
  std::vector<TraceRow> rows;
};

// Concrete stand-in for a function that is not defined in the unit.
struct Stub {
  enum Kind { Pure, Havoc } kind = Havoc;
  std::function<Word(const std::vector<Word>&)> fn;

  static Stub pure(std::function<Word(const std::vector<Word>&)> f) { return {Pure, std::move(f)}; }
  static Stub havoc() { return {Havoc, nullptr}; }
};

struct StubTable {
  std::map<std::string, Stub> stubs;
  std::optional<Stub> fallback;  // used for callees without an entry
  uint64_t seed = 0;
};

struct RunOptions {
  uint64_t fuel = 1'000'000;
  evm::Config evm;
  StubTable stubs;
};

struct RunOutcome {
  evm::EvmState final;
  std::optional<Word> returned;
  RunStatus status = RunStatus::Returned;
  std::vector<Trace> traces;
  // Final values of parameters and locals of the entry function.
  std::map<std::string, Word> locals;
};

RunOutcome run_function(const yul::YulUnit& unit, std::string_view name, const std::vector<Word>& args,
                        const evm::EvmState& init, const RunOptions& opts = {});
RunOutcome run_function(const yul::YulUnit& unit, std::string_view name, const std::vector<Word>& args,
                        const evm::EvmState& init, uint64_t fuel);

// One trace per executed loop carrying an @learn annotation, watched
// variables taken from that annotation.
std::vector<Trace> collect_loop_traces(const yul::YulUnit& unit, std::string_view name,
                                       const std::vector<Word>& args, const evm::EvmState& init,
                                       const RunOptions& opts = {});

// Concrete evaluation of lowered annotation forms. Values that cannot be
// computed (whole maps, quantifiers, uninterpreted predicates) yield nullopt.
struct SpecEnv {
  const evm::EvmState* entry = nullptr;
  const evm::EvmState* current = nullptr;
  std::map<std::string, Word> entry_values;    // parameters at entry
  std::map<std::string, Word> current_values;  // parameters and locals now
  std::optional<Word> result;
  bool reverted = false;
};

std::optional<bool> eval_form(const spec::FormPtr& f, const SpecEnv& env);
std::optional<Word> eval_expr(const spec::ExprPtr& e, const SpecEnv& env);

}  // namespace yulverify::interp
