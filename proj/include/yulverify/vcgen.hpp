#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "yulverify/annotations.hpp"
#include "yulverify/term.hpp"
#include "yulverify/vir.hpp"
#include "yulverify/yul.hpp"

namespace yulverify::vcgen {

enum class ObKind { Post, Assert, InvInit, InvPreserve, Meta, Overflow, EcfConsistency };
enum class PropType { T1, T2, T3, T4, T5, T6 };

std::string_view to_string(ObKind k);
std::string_view to_string(PropType t);

struct Obligation {
  std::string id;
  std::string function;
  ObKind kind = ObKind::Assert;
  PropType property_type = PropType::T1;
  bool deferred = false;
  Span origin;
  std::string label;
  // Named hypotheses (axioms, ranges, requires); the goal must follow from them.
  std::vector<std::pair<std::string, logic::TermPtr>> hypotheses;
  logic::TermPtr goal;

  // hypotheses => goal
  logic::TermPtr formula() const;
};

// Variable naming shared by the generator, the solver driver and the tests.
std::string local_name(const std::string& name);
std::string entry_name(const std::string& param);
std::string old_name(const std::string& cell);
std::string env_name(spec::EnvVar v);

struct VcContext {
  const yul::YulUnit* unit = nullptr;
  // Fully expanded functions (meta, overflow, ECF) used for contracts.
  std::map<std::string, vir::VirFunction> functions;
  // Plain translations used when a call is inlined.
  std::map<std::string, vir::VirFunction> plain;
  std::vector<vir::CellInfo> cells;
  std::optional<unsigned> wrap_bits;
  std::set<std::string> t6_functions;
  // Adds the storage read-after-write identity as an explicit hypothesis.
  bool storage_reduce = false;

  unsigned word_bits() const { return wrap_bits.value_or(256); }
};

// Translates every function of the unit; ECF answers are required for each
// external call reachable from a function.
VcContext build_context(const yul::YulUnit& lowered_unit, const std::map<std::string, vir::EcfAnswer>& ecf,
                        std::optional<unsigned> wrap_bits = std::nullopt);

// Cells written by a function, transitively through internal calls.
std::set<std::string> write_set(const VcContext& ctx, const std::string& fn);
bool may_revert(const VcContext& ctx, const std::string& fn);
// External call sites reachable from `fn` through inlined internal calls.
std::vector<vir::ExternalSite> reachable_external_sites(const VcContext& ctx, const std::string& fn);

// Term for a lowered annotation form.
struct FormEnv {
  std::string ret_source;
  spec::Status status = spec::Status::Return;
  bool entry = false;  // state and parameters read at function entry
  std::function<std::string(const std::string&)> local = local_name;
  const std::set<std::string>* predicates = nullptr;
  const std::vector<yul::StateVarLayout>* layout = nullptr;
};

logic::TermPtr lower_form(const spec::FormPtr& f, const FormEnv& env);
logic::TermPtr lower_expr(const spec::ExprPtr& e, const FormEnv& env);

// Exceptional postconditions by channel; revert is the rollback exit.
struct ExcPost {
  logic::TermPtr brk;
  logic::TermPtr leave;
  logic::TermPtr revert;
};

// Weakest precondition of a VIR expression with all checks assumed.
logic::TermPtr wp(const vir::VExprPtr& e, const logic::TermPtr& post, const ExcPost& exc, const VcContext& ctx,
                  const vir::VirFunction* owner = nullptr);

std::vector<Obligation> generate_vcs(const vir::VirFunction& f, const VcContext& ctx);

}  // namespace yulverify::vcgen
