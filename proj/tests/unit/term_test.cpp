#include <gtest/gtest.h>

#include <random>

#include "yulverify/term.hpp"

using namespace yulverify;
using namespace yulverify::logic;

namespace {

TermPtr x() { return var("x", Sort::Int); }
TermPtr y() { return var("y", Sort::Int); }

}  // namespace

TEST(Term, SmtRendering) {
  EXPECT_EQ(to_smt(add(x(), int_lit(1))), "(+ x 1)");
  EXPECT_EQ(to_smt(int_lit(-3)), "(- 3)");
  EXPECT_EQ(to_smt(implies(lt(x(), y()), ge(x(), y()))), "(=> (< x y) (>= x y))");
  EXPECT_TRUE(is_true(implies(lt(x(), y()), bool_lit(true))));
  EXPECT_EQ(to_smt(select(var("m", Sort::Array), x())), "(select m x)");
  EXPECT_EQ(smt_sort(Sort::Array2), "(Array Int (Array Int Int))");
}

TEST(Term, SymbolQuoting) {
  EXPECT_EQ(smt_symbol("x"), "x");
  EXPECT_EQ(smt_symbol("l.x"), "l.x");
  EXPECT_EQ(smt_symbol("a b"), "|a b|");
}

TEST(Term, SubstituteFreeOnly) {
  auto body = eq(x(), y());
  auto q = forall({{"x", Sort::Int}}, body);
  auto t = land(q, gt(x(), y()));
  auto s = substitute(t, {{"x", int_lit(5)}});
  EXPECT_EQ(to_smt(s), "(and (forall ((x Int)) (= x y)) (> 5 y))");
}

TEST(Term, SubstituteAvoidsCapture) {
  auto q = forall({{"x", Sort::Int}}, lt(x(), y()));
  auto s = substitute(q, {{"y", x()}});
  std::map<std::string, Sort> consts;
  std::map<std::string, FunSig> funs;
  collect_symbols(s, consts, funs);
  // The free x introduced for y must stay free.
  EXPECT_EQ(consts.count("x"), 1u);
  EXPECT_NE(to_smt(s), "(forall ((x Int)) (< x x))");
}

TEST(Term, CollectSymbols) {
  auto t = land(eq(apply("f", {x(), select(var("m", Sort::Array), y())}, Sort::Int), int_lit(0)),
                forall({{"k", Sort::Int}}, ge(var("k", Sort::Int), int_lit(0))));
  std::map<std::string, Sort> consts;
  std::map<std::string, FunSig> funs;
  collect_symbols(t, consts, funs);
  EXPECT_EQ(consts.size(), 3u);
  EXPECT_EQ(consts.at("m"), Sort::Array);
  EXPECT_EQ(consts.count("k"), 0u);
  ASSERT_EQ(funs.count("f"), 1u);
  EXPECT_EQ(funs.at("f"), (FunSig{{Sort::Int, Sort::Int}, Sort::Int}));
}

TEST(Term, Classification) {
  EXPECT_TRUE(has_nonlinear(mul(x(), y())));
  EXPECT_FALSE(has_nonlinear(mul(int_lit(3), y())));
  EXPECT_TRUE(has_quantifier(lnot(exists({{"k", Sort::Int}}, lt(var("k", Sort::Int), x())))));
  EXPECT_FALSE(has_quantifier(lt(x(), y())));
  EXPECT_TRUE(is_true(bool_lit(true)));
  EXPECT_TRUE(is_false(bool_lit(false)));
}

TEST(Term, RangeAndTruthy) {
  EXPECT_EQ(to_smt(in_range(x(), 8)), "(and (<= 0 x) (< x 256))");
  EXPECT_EQ(to_smt(truthy(x())), "(not (= x 0))");
}

TEST(Term, DagSizeCountsSharedOnce) {
  auto shared = add(x(), y());
  EXPECT_EQ(dag_size(mul(shared, shared)), 4u);
}

// Substituting then rendering agrees with rendering with the variable textually replaced.
TEST(TermProperty, SubstitutionCommutesWithRendering) {
  std::mt19937_64 rng(11);
  std::function<TermPtr(int)> gen = [&](int d) -> TermPtr {
    int k = static_cast<int>(rng() % (d <= 0 ? 3 : 6));
    switch (k) {
      case 0: return x();
      case 1: return y();
      case 2: return int_lit(static_cast<long>(rng() % 50));
      case 3: return add(gen(d - 1), gen(d - 1));
      case 4: return mul(gen(d - 1), gen(d - 1));
      default: return sub(gen(d - 1), gen(d - 1));
    }
  };
  for (int i = 0; i < 300; ++i) {
    auto t = gen(4);
    auto s = substitute(t, {{"x", var("z", Sort::Int)}});
    std::string expected = to_smt(t);
    for (size_t p = 0; (p = expected.find('x', p)) != std::string::npos;) expected[p] = 'z';
    EXPECT_EQ(to_smt(s), expected);
    EXPECT_EQ(to_smt(substitute(t, {})), to_smt(t));
  }
}
