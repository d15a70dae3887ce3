#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "yulverify/annotations.hpp"
#include "yulverify/evm.hpp"
#include "yulverify/term.hpp"
#include "yulverify/yul.hpp"

namespace yulverify::vir {

// Exception channels: loop exit and function exit.
enum class Channel { Break, Leave };

inline constexpr const char* kRetCell = "π";

std::string_view to_string(Channel c);

struct VExpr;
using VExprPtr = std::shared_ptr<const VExpr>;

struct VUnit {};

struct VLit {
  Word value;
};

struct VVar {
  std::string name;
};

enum class CallKind { Opcode, Internal, External };

struct VCall {
  std::string callee;
  std::vector<VExprPtr> args;
  CallKind kind = CallKind::Opcode;
  std::optional<evm::Opcode> opcode;
  int site_id = -1;  // external call sites only
};

struct VSeq {
  std::vector<VExprPtr> items;
};

struct VLet {
  std::string name;
  VExprPtr init;  // null: zero-initialised
  std::string snapshot;
};

struct VAssign {
  std::string name;
  VExprPtr value;
  // Ghost local receiving the unwrapped arithmetic result (overflow tracking).
  std::string snapshot;
};

struct VIf {
  VExprPtr cond;
  VExprPtr then;
};

struct VMatch {
  VExprPtr scrutinee;
  std::vector<std::pair<Word, VExprPtr>> cases;
  VExprPtr default_arm;  // null when absent
};

struct VWhile {
  VExprPtr cond;
  std::vector<spec::SpecItem> invariants;
  VExprPtr body;
  std::vector<std::string> learn;
};

struct VRaise {
  Channel channel;
  bool synthetic = false;  // the implicit raise closing a function body
};

struct VTry {
  VExprPtr body;
  Channel channel;
  VExprPtr handler;
};

enum class CondOrigin { User, Meta, Overflow, Inferred };

struct VCheck {
  enum Kind { Assert, Assume, LoopPost } kind = Assert;
  spec::SpecItem item;
  CondOrigin origin = CondOrigin::User;
};

// Pushes the return cell onto the state stack (function exit).
struct VPush {
  std::string cell;
};

struct VExpr {
  std::variant<VUnit, VLit, VVar, VCall, VSeq, VLet, VAssign, VIf, VMatch, VWhile, VRaise, VTry, VCheck, VPush> node;
  Span span;
};

VExprPtr make(decltype(VExpr::node) node, Span span = {});

struct Cond {
  spec::SpecItem item;
  CondOrigin origin = CondOrigin::User;
};

struct Axiom {
  std::string name;
  logic::TermPtr formula;
};

enum class EcfAnswer { Pure, Impure };

struct ExternalSite {
  int site_id = -1;
  std::string callee;
  size_t argc = 0;
  Span span;
};

struct VirFunction {
  std::string name;
  std::vector<std::string> params;
  // Return cell, referenced as π in the body.
  std::string ret_source;
  bool has_ret = false;
  VExprPtr body;
  std::vector<Cond> requires_;
  std::vector<Cond> ensures;
  std::vector<Axiom> axioms;
  bool is_public = false;
  // Forms asserted immediately before every external call.
  std::vector<spec::SpecItem> external_meta;
  std::vector<ExternalSite> external_sites;
  std::map<std::string, EcfAnswer> ecf;
  // Invariants installed after translation, keyed by loop span.
  std::map<Span, std::vector<spec::SpecItem>> extra_invariants;
  bool overflow_checked = false;
  Span span;
};

VirFunction translate_function(const yul::YulFunction& f, const yul::YulUnit& unit);

// Conjoins unit @meta into requires and ensures of public functions and
// schedules it before every external call.
VirFunction expand_meta(const std::vector<spec::SpecItem>& unit_meta, VirFunction f);

// Tags every arithmetic assignment with a snapshot ghost and appends the
// range assertions to the exit handler.
VirFunction expand_overflow_checks(VirFunction f, const std::map<std::string, yul::Width>& widths,
                                   unsigned default_bits);

// Cells that an ECF axiom ranges over.
struct CellInfo {
  std::string name;
  logic::Sort sort = logic::Sort::Int;
};

std::vector<CellInfo> unit_cells(const yul::YulUnit& unit);

// `sites` defaults to the function's own external sites.
VirFunction insert_ecf_axioms(VirFunction f, const std::map<std::string, EcfAnswer>& answers,
                              const std::vector<CellInfo>& cells,
                              const std::optional<std::vector<ExternalSite>>& sites = std::nullopt);

std::string ecf_cell_fn(const std::string& callee, const std::string& cell);
std::string ecf_ret_fn(const std::string& callee);

// WhyML-like rendering used for inspection and tests.
std::string print(const VExprPtr& e, int indent = 0);
std::string print(const VirFunction& f);

// Control-flow shape: statement nodes and edges between them.
struct CfgShape {
  size_t nodes = 0;
  size_t edges = 0;
  friend bool operator==(const CfgShape&, const CfgShape&) = default;
};

CfgShape cfg_shape(const yul::YulFunction& f);
CfgShape cfg_shape(const VirFunction& f);

}  // namespace yulverify::vir
