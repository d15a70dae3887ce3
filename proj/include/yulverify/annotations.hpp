#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "yulverify/common.hpp"

namespace yulverify::spec {

enum class BinOp { Add, Sub, Mul, Div, Mod, Eq, Ne, Lt, Le, Gt, Ge };

bool is_comparison(BinOp op);
std::string_view to_string(BinOp op);

// What an identifier refers to once resolved against a scope.
enum class Binding { Unresolved, Local, Param, State, Binder, Result, Env, Symbol };

enum class StateKind { Scalar, Mapping, DynArray };

enum class EnvVar { Caller, CallValue, Timestamp, Address };

std::string_view to_string(EnvVar v);

enum class AccessorKind { Read, Meta };

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Num {
  Word value;
};

struct Ident {
  std::string name;
  bool old = false;
  Binding binding = Binding::Unresolved;
};

struct Index {
  ExprPtr base;
  ExprPtr index;
};

struct Field {
  ExprPtr base;
  std::string name;
};

struct Neg {
  ExprPtr operand;
};

struct Binary {
  BinOp op;
  ExprPtr lhs;
  ExprPtr rhs;
};

struct Apply {
  std::string fn;
  std::vector<ExprPtr> args;
};

// Storage access after lowering. A Read with no args on a Mapping or
// DynArray denotes the whole per-slot map.
struct Accessor {
  AccessorKind kind = AccessorKind::Read;
  StateKind state = StateKind::Scalar;
  Word slot;
  std::string source_name;
  std::vector<ExprPtr> args;
  bool old = false;
};

struct EnvRef {
  EnvVar var;
};

struct Expr {
  std::variant<Num, Ident, Index, Field, Neg, Binary, Apply, Accessor, EnvRef> node;
  Span span;
};

enum class Status { Return, Revert };
enum class QuantKind { Forall, Exists };

struct Binder {
  std::string name;
  std::string sort;
};

struct Form;
using FormPtr = std::shared_ptr<const Form>;

struct ExprForm {
  ExprPtr expr;
};

struct StatusForm {
  Status status;
};

struct Not {
  FormPtr operand;
};

struct Implies {
  FormPtr lhs;
  FormPtr rhs;
};

struct And {
  FormPtr lhs;
  FormPtr rhs;
};

struct Or {
  FormPtr lhs;
  FormPtr rhs;
};

struct Quant {
  QuantKind kind;
  std::vector<Binder> binders;
  FormPtr body;
};

struct Form {
  std::variant<ExprForm, StatusForm, Not, Implies, And, Or, Quant> node;
  Span span;
};

enum class Directive { Pre, Post, Meta, Inv, Assume, Assert, Check, Learn };
enum class Pattern { Overflow, Reentrancy, Timestamp };

std::string_view to_string(Directive d);
std::string_view to_string(Pattern p);

struct SpecItem {
  Directive kind = Directive::Assert;
  bool deferred = false;
  // `old @post ...`: every state/parameter identifier refers to the entry state.
  bool old_prefix = false;
  Pattern pattern = Pattern::Overflow;
  std::vector<std::string> watched;
  FormPtr form;
  Span span;
};

// Constructors.
ExprPtr num(const Word& v, Span span = {});
ExprPtr ident(std::string name, bool old = false, Span span = {});
ExprPtr binary(BinOp op, ExprPtr lhs, ExprPtr rhs, Span span = {});
ExprPtr make_expr(decltype(Expr::node) node, Span span = {});
FormPtr expr_form(ExprPtr e);
FormPtr status_form(Status s, Span span = {});
FormPtr make_not(FormPtr f, Span span = {});
FormPtr make_and(FormPtr a, FormPtr b, Span span = {});
FormPtr make_or(FormPtr a, FormPtr b, Span span = {});
FormPtr make_implies(FormPtr a, FormPtr b, Span span = {});
FormPtr make_form(decltype(Form::node) node, Span span = {});

// One `@tag payload` segment of a comment block.
struct DirectiveSegment {
  std::string tag;
  bool coq = false;
  bool old_prefix = false;
  std::string payload;
  Span span;
  Span payload_span;
};

// Strips comment markers and `*` decoration (columns are preserved) and cuts
// the block at each directive tag.
std::vector<DirectiveSegment> split_directives(std::string_view text, Span origin = {1, 1});

bool is_spec_directive(std::string_view tag);

SpecItem parse_directive(const DirectiveSegment& seg);
std::vector<SpecItem> parse_annotation_block(std::string_view text, Span origin = {1, 1});
FormPtr parse_form(std::string_view text, Span origin = {1, 1});

std::string print(const ExprPtr& e);
std::string print(const FormPtr& f);
std::string print(const SpecItem& item);

bool equal(const ExprPtr& a, const ExprPtr& b);
bool equal(const FormPtr& a, const FormPtr& b);
bool equal(const SpecItem& a, const SpecItem& b);

struct StateInfo {
  StateKind kind = StateKind::Scalar;
  int depth = 0;  // number of keys for mappings
};

struct Scope {
  std::map<std::string, StateInfo> state;
  std::set<std::string> params;
  std::set<std::string> locals;
  std::set<std::string> symbols;  // predicates and unit functions usable in forms
  bool has_result = false;
};

SpecItem resolve_identifiers(const SpecItem& item, const Scope& scope);

// Bottom-up rewriting helpers; `fn` sees already-rewritten children.
ExprPtr rewrite(const ExprPtr& e, const std::function<ExprPtr(const ExprPtr&)>& fn);
FormPtr rewrite_exprs(const FormPtr& f, const std::function<ExprPtr(const ExprPtr&)>& fn);
void visit_exprs(const FormPtr& f, const std::function<void(const Expr&)>& fn);
void visit_expr(const ExprPtr& e, const std::function<void(const Expr&)>& fn);

bool mentions_env(const FormPtr& f, EnvVar var);
bool mentions_status(const FormPtr& f);

}  // namespace yulverify::spec
