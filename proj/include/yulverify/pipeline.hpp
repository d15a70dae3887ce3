#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "yulverify/inference.hpp"
#include "yulverify/solver.hpp"
#include "yulverify/static_checks.hpp"
#include "yulverify/vcgen.hpp"
#include "yulverify/yul.hpp"

namespace yulverify::pipeline {

struct VerifyOptions {
  solver::SolverConfig solver;
  unsigned jobs = 1;
  std::optional<unsigned> wrap_bits;
  unsigned degree = 3;
  std::map<std::string, vir::EcfAnswer> ecf;
  std::set<std::string> t6_functions;
  bool storage_reduce = false;
  bool strict_deferred = false;
  infer::SampleOptions sampling;
  // Deferred obligations are written here when set.
  std::optional<std::filesystem::path> deferred_dir;
};

struct ObligationResult {
  vcgen::Obligation obligation;
  std::optional<solver::Verdict> verdict;  // empty for deferred obligations
};

struct InferredLoop {
  Span loop;
  std::vector<std::string> watched;
  size_t runs = 0;
  size_t rows = 0;
  std::vector<std::string> candidates;  // fitted, in annotation syntax
  std::vector<std::string> installed;   // candidates that validated
  infer::ValidationStatus status = infer::ValidationStatus::NotApplicable;
  std::string message;
};

struct FunctionReport {
  std::string name;
  std::vector<ObligationResult> obligations;
  std::vector<checks::PatternFinding> findings;
  std::vector<InferredLoop> invariants;
};

struct Totals {
  size_t total = 0;
  size_t verified = 0;
  size_t refuted = 0;
  size_t unknown = 0;
  size_t timeout = 0;
  size_t solver_error = 0;
  size_t deferred = 0;
  double time = 0;

  void add(const ObligationResult& r);
  Totals& operator+=(const Totals& o);
};

struct Report {
  std::string unit;
  std::vector<FunctionReport> functions;
  std::array<Totals, 6> by_type;  // T1..T6
  solver::DeferredManifest deferred;
  std::string backend;
  bool strict_deferred = false;
  double wall_time = 0;

  Totals overall() const;
  size_t finding_count() const;
  // 0 when every non-deferred obligation is Verified and there are no findings.
  int exit_code() const;
  nlohmann::json to_json() const;
  std::string summary() const;
};

// Callees that are neither internal functions nor opcodes.
std::set<std::string> external_callees(const yul::YulUnit& unit);

// Loops carrying @learn, in source order.
std::vector<std::pair<std::string, Span>> learn_loops(const yul::YulUnit& unit);

// Samples, fits and validates invariants for one @learn loop; returns the
// validated candidates ready to install.
InferredLoop infer_loop(const yul::YulUnit& lowered_unit, const std::string& function, Span loop,
                        const VerifyOptions& opts, std::vector<spec::SpecItem>& installed);

// Full pipeline over a parsed (unlowered) unit.
Report verify_unit(const yul::YulUnit& parsed, const VerifyOptions& opts);
Report verify_source(std::string_view text, const std::string& unit_name, const VerifyOptions& opts);

nlohmann::json finding_to_json(const checks::PatternFinding& f);

}  // namespace yulverify::pipeline
