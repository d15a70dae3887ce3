#pragma once

#include <map>
#include <memory>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "yulverify/common.hpp"

namespace yulverify::logic {

// Int, Bool, (Array Int Int) and (Array Int (Array Int Int)).
enum class Sort { Int, Bool, Array, Array2 };

std::string smt_sort(Sort s);

enum class Op {
  IntLit, BoolLit, Var,
  Add, Sub, Mul, Div, Mod, Neg,
  Lt, Le, Gt, Ge, Eq,
  Not, And, Or, Implies, Ite,
  Select, Store,
  Apply,  // uninterpreted function
  Forall, Exists,
};

struct Term;
using TermPtr = std::shared_ptr<const Term>;

struct Term {
  Op op;
  Sort sort;
  Word value;        // IntLit
  bool bval = false; // BoolLit
  std::string name;  // Var, Apply
  std::vector<TermPtr> args;
  std::vector<std::pair<std::string, Sort>> bound;  // Forall / Exists; body is args[0]
};

TermPtr int_lit(const Word& v);
TermPtr bool_lit(bool b);
TermPtr var(const std::string& name, Sort s);
TermPtr add(TermPtr a, TermPtr b);
TermPtr sub(TermPtr a, TermPtr b);
TermPtr mul(TermPtr a, TermPtr b);
TermPtr div(TermPtr a, TermPtr b);
TermPtr mod(TermPtr a, TermPtr b);
TermPtr neg(TermPtr a);
TermPtr lt(TermPtr a, TermPtr b);
TermPtr le(TermPtr a, TermPtr b);
TermPtr gt(TermPtr a, TermPtr b);
TermPtr ge(TermPtr a, TermPtr b);
TermPtr eq(TermPtr a, TermPtr b);
TermPtr lnot(TermPtr a);
TermPtr land(TermPtr a, TermPtr b);
TermPtr land(const std::vector<TermPtr>& xs);
TermPtr lor(TermPtr a, TermPtr b);
TermPtr implies(TermPtr a, TermPtr b);
TermPtr ite(TermPtr c, TermPtr a, TermPtr b);
TermPtr select(TermPtr arr, TermPtr idx);
TermPtr store(TermPtr arr, TermPtr idx, TermPtr val);
TermPtr apply(const std::string& fn, std::vector<TermPtr> args, Sort result);
TermPtr forall(std::vector<std::pair<std::string, Sort>> bound, TermPtr body);
TermPtr exists(std::vector<std::pair<std::string, Sort>> bound, TermPtr body);

// 0 <= v < 2^bits
TermPtr in_range(TermPtr v, unsigned bits);
// Integer to boolean with the EVM convention (nonzero is true).
TermPtr truthy(TermPtr v);
// Boolean to {0,1}.
TermPtr as_int(TermPtr b);

bool is_true(const TermPtr& t);
bool is_false(const TermPtr& t);

// Capture-avoiding substitution of free variables by name; memoised over the DAG.
TermPtr substitute(const TermPtr& t, const std::map<std::string, TermPtr>& sub);

struct FunSig {
  std::vector<Sort> args;
  Sort result;
  friend bool operator==(const FunSig&, const FunSig&) = default;
};

// Free constants and uninterpreted functions, keyed by name; throws
// UnsupportedSort when a name occurs with two sorts.
void collect_symbols(const TermPtr& t, std::map<std::string, Sort>& consts, std::map<std::string, FunSig>& funs);
bool has_quantifier(const TermPtr& t);
bool has_nonlinear(const TermPtr& t);
size_t dag_size(const TermPtr& t);

// Single-line SMT-LIB rendering (tree form, no sharing).
std::string to_smt(const TermPtr& t);
// Renders with the named subterms replaced by their names (the root itself is expanded).
using SharedNames = std::unordered_map<const Term*, std::string>;
std::string to_smt(const TermPtr& t, const SharedNames& names);
// Renders a symbol, quoting it when it is not a simple SMT-LIB symbol.
std::string smt_symbol(const std::string& name);

}  // namespace yulverify::logic
