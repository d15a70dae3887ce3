#pragma once

#include <string>
#include <vector>

#include "yulverify/common.hpp"
#include "yulverify/yul.hpp"

namespace yulverify::checks {

enum class PatternKind { Reentrancy, Timestamp };

std::string_view to_string(PatternKind p);

struct PatternFinding {
  PatternKind pattern = PatternKind::Reentrancy;
  std::string function;
  Span site;  // external call, or the tainted sink
  Span sink;  // storage write, or the guarded statement
  // Reentrancy: CFG node spans from the call to the write. Timestamp: taint chain.
  std::vector<Span> witness;
  std::string message;
};

// Statement-level control-flow graph. Node 0 is the entry, node 1 the exit.
struct CfgNode {
  Span span;
  std::string label;
  std::vector<size_t> succ;
};

struct Cfg {
  std::vector<CfgNode> nodes;
  bool has_edge(size_t a, size_t b) const;
  // Node whose statement carries the span, if any.
  std::vector<size_t> nodes_at(Span s) const;
};

Cfg build_cfg(const yul::YulFunction& f);

// Storage writes reachable after an external call; one finding per call site.
std::vector<PatternFinding> check_reentrancy(const yul::YulFunction& f, const yul::YulUnit& unit);

// Storage writes of timestamp-derived values, and timestamp-dependent branches
// guarding storage writes or returns.
std::vector<PatternFinding> check_timestamp(const yul::YulFunction& f, const yul::YulUnit& unit);

// Runs the checks requested by each function's @check directives.
std::vector<PatternFinding> run_checks(const yul::YulUnit& unit);

}  // namespace yulverify::checks
