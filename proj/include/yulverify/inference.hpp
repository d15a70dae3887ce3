#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "yulverify/annotations.hpp"
#include "yulverify/interpreter.hpp"
#include "yulverify/solver.hpp"
#include "yulverify/vcgen.hpp"
#include "yulverify/vir.hpp"
#include "yulverify/yul.hpp"

namespace yulverify::infer {

using Rational = mpq_class;
using Matrix = std::vector<std::vector<Rational>>;

struct MonomialBasis {
  std::vector<std::string> variables;
  unsigned max_degree = 0;
  // Exponent vectors: constant first, then by degree; lexicographically
  // descending within a degree (x^2, xy, y^2).
  std::vector<std::vector<unsigned>> monomials;

  static MonomialBasis make(std::vector<std::string> variables, unsigned max_degree);
  // "1", "x", "x*x*y"
  std::string render(size_t i) const;
};

// Exact nullspace basis of a rational matrix (reduced row echelon form).
std::vector<std::vector<Rational>> nullspace(const Matrix& m);
size_t rank(const Matrix& m);

Matrix build_monomial_matrix(const interp::Trace& trace, const MonomialBasis& basis);

struct PolyInvariant {
  MonomialBasis basis;
  // Aligned with basis.monomials; primitive integers, last nonzero positive.
  std::vector<Rational> coefficients;

  Rational evaluate(const std::vector<Word>& values) const;
  // Annotation syntax: "2*x*x*x + 3*x*x + x - 6*y - 2310 = 0".
  std::string to_annotation() const;
};

// Scales to primitive integer form with a positive coefficient on the
// highest monomial; throws PreconditionViolation on the zero vector.
std::vector<Rational> normalize(std::vector<Rational> coefficients);

// Concatenates traces of the same loop and watched variables.
interp::Trace merge_traces(const std::vector<interp::Trace>& traces);

std::vector<PolyInvariant> fit_invariants(const interp::Trace& trace, unsigned max_degree);

// Traces of the loop at `loop` from runs with random arguments satisfying @pre.
struct SampleOptions {
  size_t runs = 6;
  size_t attempts = 400;
  uint64_t seed = 1;
  uint64_t fuel = 200'000;
  Word max_arg = 128;
};

std::vector<interp::Trace> sample_traces(const yul::YulUnit& lowered_unit, const std::string& function, Span loop,
                                         const SampleOptions& opts = {});

// Explicit argument vectors instead of random sampling.
std::vector<interp::Trace> traces_for_runs(const yul::YulUnit& lowered_unit, const std::string& function, Span loop,
                                           const std::vector<std::vector<Word>>& runs, uint64_t fuel = 200'000);

// Spec item for an invariant, resolved against the function scope.
spec::SpecItem to_spec_item(const PolyInvariant& inv, const yul::YulUnit& lowered_unit, const std::string& function,
                            Span loop);

enum class ValidationStatus { Valid, Invalid, NotApplicable };

std::string_view to_string(ValidationStatus s);

struct Validation {
  ValidationStatus status = ValidationStatus::NotApplicable;
  // Initiation and consecution of the installed invariants, then the loop
  // and function postconditions (sufficiency).
  std::vector<std::pair<vcgen::Obligation, solver::Verdict>> results;
};

// Installs the candidates on the loop and discharges the function's obligations.
Validation validate_invariants(const std::vector<PolyInvariant>& invs, const yul::YulUnit& lowered_unit,
                               const std::string& function, Span loop, const solver::SolverConfig& cfg,
                               const std::map<std::string, vir::EcfAnswer>& ecf = {},
                               std::optional<unsigned> wrap_bits = std::nullopt);

}  // namespace yulverify::infer
