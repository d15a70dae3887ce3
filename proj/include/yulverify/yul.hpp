#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "yulverify/annotations.hpp"
#include "yulverify/common.hpp"

namespace yulverify::yul {

struct YExpr;
using YExprPtr = std::shared_ptr<const YExpr>;

struct VarRef {
  std::string name;
};

struct Lit {
  Word value;
};

struct CallExpr {
  std::string callee;
  std::vector<YExprPtr> args;
};

struct YExpr {
  std::variant<VarRef, Lit, CallExpr> node;
  Span span;
};

struct YStmt;
using YStmtPtr = std::shared_ptr<const YStmt>;

struct Block {
  std::vector<YStmtPtr> stmts;
};

struct Break {};
struct Leave {};

struct ExprStmt {
  YExprPtr expr;
};

struct If {
  YExprPtr cond;
  Block body;
};

struct Let {
  std::string name;
  YExprPtr init;  // null for `let x`
};

struct Assign {
  std::string name;
  YExprPtr value;
};

struct Case {
  Word literal;
  Block body;
  Span span;
};

struct Switch {
  YExprPtr scrutinee;
  std::vector<Case> cases;
  std::optional<Block> default_body;
};

struct For {
  Block init;
  YExprPtr cond;
  Block post;
  Block body;
};

struct YStmt {
  std::variant<Block, Break, Leave, ExprStmt, If, Let, Assign, Switch, For> node;
  Span span;
  // Statement-bound annotations (@inv, @learn, @assume, @assert, loop @post).
  std::vector<spec::SpecItem> specs;
};

struct YulFunction {
  std::string name;
  std::vector<std::string> params;
  std::optional<std::string> ret;
  Block body;
  std::vector<spec::SpecItem> specs;
  Span span;

  bool has_check(spec::Pattern p) const;
};

// Elementary or composite storage type from an `@storage` pragma.
struct TypeDesc {
  enum Kind { Elementary, Mapping, Array } kind = Elementary;
  std::string name;  // elementary type name
  std::shared_ptr<const TypeDesc> key;
  std::shared_ptr<const TypeDesc> value;  // mapping value or array element
  std::string str() const;
};

TypeDesc parse_type(std::string_view text, Span span = {});

// Canonical intrinsic names of one accessor (reader, writer, metadata).
struct AccessorDesc {
  std::string intrinsic;
  int arity = 0;
};

struct StateVarLayout {
  std::string source_name;
  Word id;
  spec::StateKind kind = spec::StateKind::Scalar;
  int depth = 0;  // mapping key count
  TypeDesc type;
  AccessorDesc reader;
  AccessorDesc writer;
  std::optional<AccessorDesc> meta;

  // Per-slot symbol used at VC level: map_0x05, arr_0x00, or the raw slot.
  std::string symbol() const;
};

std::vector<StateVarLayout> build_storage_map(const std::vector<std::pair<std::string, TypeDesc>>& decls);

struct Width {
  unsigned bits = 256;
  bool is_signed = false;
};

struct YulUnit {
  std::string name;
  std::vector<YulFunction> functions;
  std::vector<StateVarLayout> state_vars;
  std::vector<spec::SpecItem> meta_specs;
  std::set<std::string> predicates;
  std::set<std::string> internal;           // functions excluded from @meta
  std::map<std::string, Width> widths;      // overflow-check widths per variable

  const YulFunction* find(std::string_view fn) const;
  const StateVarLayout* layout(std::string_view var) const;
  bool is_public(const YulFunction& f) const;
  spec::Scope scope_for(const YulFunction* f) const;
};

bool is_opcode(std::string_view name);

// Parses a unit, attaching and resolving annotations; spec forms stay at
// source level (see lower_unit_specs).
YulUnit parse_yul(std::string_view text, std::string unit_name = "unit");

spec::SpecItem lower_spec_accessors(const spec::SpecItem& item, const std::vector<StateVarLayout>& layout);

// Applies lower_spec_accessors to every attached item.
YulUnit lower_unit_specs(const YulUnit& unit);

std::string print_unit(const YulUnit& unit);
std::string print_expr(const YExprPtr& e);

bool equal(const YulUnit& a, const YulUnit& b);

// Locals declared by `let` anywhere in a function (including loop init blocks).
std::set<std::string> declared_locals(const YulFunction& f);

YExprPtr make_yexpr(decltype(YExpr::node) node, Span span = {});
YStmtPtr make_ystmt(decltype(YStmt::node) node, Span span = {}, std::vector<spec::SpecItem> specs = {});

}  // namespace yulverify::yul
