#include <gtest/gtest.h>

#include <random>

#include "support.hpp"
#include "yulverify/inference.hpp"
#include "yulverify/pipeline.hpp"

using namespace yulverify;
using namespace yulverify::infer;

namespace {

interp::Trace trace_of(std::vector<std::string> watched, const std::vector<std::vector<long>>& rows) {
  interp::Trace t;
  t.function = "f";
  t.watched = std::move(watched);
  for (size_t i = 0; i < rows.size(); ++i) {
    interp::TraceRow r;
    r.iteration = i;
    for (long v : rows[i]) r.values.emplace_back(v);
    t.rows.push_back(r);
  }
  return t;
}

// Fraction-free Bareiss elimination over integers (denominators cleared row-wise).
size_t bareiss_rank(const Matrix& m) {
  if (m.empty()) return 0;
  std::vector<std::vector<mpz_class>> a;
  for (const auto& row : m) {
    mpz_class l = 1;
    for (const auto& q : row) mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), q.get_den_mpz_t());
    std::vector<mpz_class> r;
    for (const auto& q : row) r.push_back(mpz_class(q.get_num() * (l / q.get_den())));
    a.push_back(r);
  }
  size_t rows = a.size(), cols = a[0].size(), rank = 0;
  mpz_class prev = 1;
  for (size_t c = 0; c < cols && rank < rows; ++c) {
    size_t p = rank;
    while (p < rows && a[p][c] == 0) ++p;
    if (p == rows) continue;
    std::swap(a[p], a[rank]);
    for (size_t i = rank + 1; i < rows; ++i) {
      for (size_t j = c + 1; j < cols; ++j) a[i][j] = (a[rank][c] * a[i][j] - a[i][c] * a[rank][j]) / prev;
      a[i][c] = 0;
    }
    prev = a[rank][c];
    ++rank;
  }
  return rank;
}

unsigned long binom(unsigned long n, unsigned long k) {
  unsigned long r = 1;
  for (unsigned long i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// Closed form for the loop x := x + 1, y := y + x*x from (10, 0): 6y = x(x+1)(2x+1) - 2310.
mpz_class closed_form(const mpz_class& x, const mpz_class& y) { return x * (x + 1) * (2 * x + 1) - 6 * y - 2310; }

const std::map<std::string, vir::EcfAnswer> kPureTransfer = {{"transferFrom", vir::EcfAnswer::Pure}};

Span lottery_loop(const yul::YulUnit& u) {
  for (const auto& [fn, loop] : pipeline::learn_loops(u))
    if (fn == "_lotteryReward") return loop;
  return {};
}

}  // namespace

TEST(Monomials, OrderAndRendering) {
  auto b = MonomialBasis::make({"x", "y"}, 2);
  std::vector<std::string> names;
  for (size_t i = 0; i < b.monomials.size(); ++i) names.push_back(b.render(i));
  EXPECT_EQ(names, (std::vector<std::string>{"1", "x", "y", "x*x", "x*y", "y*y"}));
}

TEST(Monomials, RowExamples) {
  auto row = build_monomial_matrix(trace_of({"x", "y"}, {{2, 3}}), MonomialBasis::make({"x", "y"}, 1));
  EXPECT_EQ(row[0], (std::vector<Rational>{1, 2, 3}));
  auto cubic = build_monomial_matrix(trace_of({"x"}, {{10}}), MonomialBasis::make({"x"}, 3));
  EXPECT_EQ(cubic[0].back(), 1000);
  EXPECT_THROW(build_monomial_matrix(trace_of({"x"}, {}), MonomialBasis::make({"x"}, 1)), Error);
}

TEST(MonomialsProperty, CountIsBinomial) {
  for (unsigned n = 1; n <= 4; ++n)
    for (unsigned d = 0; d <= 4; ++d) {
      std::vector<std::string> vars;
      for (unsigned i = 0; i < n; ++i) vars.push_back("v" + std::to_string(i));
      EXPECT_EQ(MonomialBasis::make(vars, d).monomials.size(), binom(n + d, d)) << n << " " << d;
    }
}

TEST(NullspaceProperty, AgreesWithBareissAndAnnihilates) {
  std::mt19937_64 rng(3);
  for (int iter = 0; iter < 300; ++iter) {
    size_t rows = 1 + rng() % 6, cols = 1 + rng() % 6;
    Matrix m(rows, std::vector<Rational>(cols));
    for (auto& r : m)
      for (auto& q : r) q = Rational(static_cast<long>(rng() % 7) - 3, 1 + static_cast<long>(rng() % 3));
    // Force dependent rows now and then.
    if (rows > 1 && rng() % 2) {
      for (size_t j = 0; j < cols; ++j) m[rows - 1][j] = m[0][j] * 2 - m[rows > 2 ? 1 : 0][j];
    }
    for (auto& r : m)
      for (auto& q : r) q.canonicalize();
    auto ns = nullspace(m);
    size_t r = bareiss_rank(m);
    EXPECT_EQ(rank(m), r);
    EXPECT_EQ(ns.size() + r, cols);
    for (const auto& v : ns) {
      bool nonzero = false;
      for (const auto& q : v) nonzero = nonzero || q != 0;
      EXPECT_TRUE(nonzero);
      for (const auto& row : m) {
        Rational dot = 0;
        for (size_t j = 0; j < cols; ++j) dot += row[j] * v[j];
        EXPECT_EQ(dot, 0);
      }
    }
  }
}

TEST(NormalizeProperty, ScalingInvariance) {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 300; ++i) {
    std::vector<Rational> v(1 + rng() % 6);
    for (auto& q : v) q = Rational(static_cast<long>(rng() % 11) - 5, 1 + static_cast<long>(rng() % 4));
    v.back() = Rational(1 + static_cast<long>(rng() % 5), 3);
    for (auto& q : v) q.canonicalize();
    Rational c(static_cast<long>(rng() % 9) + 1, static_cast<long>(rng() % 5) + 1);
    if (rng() % 2) c = -c;
    c.canonicalize();
    std::vector<Rational> scaled;
    for (const auto& q : v) scaled.push_back(q * c);
    auto n1 = normalize(v);
    EXPECT_EQ(n1, normalize(scaled));
    EXPECT_GT(n1.back(), 0);
    mpz_class g = 0;
    for (const auto& q : n1) {
      EXPECT_EQ(q.get_den(), 1);
      mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), q.get_num_mpz_t());
    }
    EXPECT_EQ(g, 1);
  }
  EXPECT_THROW(normalize({0, 0}), Error);
}

TEST(Fit, ConstantTrace) {
  auto invs = fit_invariants(trace_of({"v"}, {{5}, {5}, {5}}), 1);
  ASSERT_EQ(invs.size(), 1u);
  EXPECT_EQ(invs[0].coefficients, (std::vector<Rational>{-5, 1}));
  EXPECT_EQ(invs[0].to_annotation(), "v - 5 = 0");
}

TEST(Fit, GenericPointsHaveNoLinearInvariant) {
  EXPECT_TRUE(fit_invariants(trace_of({"x", "y"}, {{1, 7}, {4, 2}, {9, 9}, {3, 13}}), 1).empty());
}

TEST(Fit, RequiresTwoRowsAndPositiveDegree) {
  EXPECT_THROW(fit_invariants(trace_of({"x"}, {{1}}), 1), Error);
  EXPECT_THROW(fit_invariants(trace_of({"x"}, {{1}, {2}}), 0), Error);
}

TEST(Fit, SumOfSquaresFromThreeRuns) {
  auto u = fixtures::load("vote_buggy.yul");
  Span loop = lottery_loop(u);
  auto traces = traces_for_runs(u, "_lotteryReward", loop, {{13}, {20}, {37}});
  ASSERT_EQ(traces.size(), 3u);
  auto merged = merge_traces(traces);
  EXPECT_EQ(merged.rows.size(), 4u + 11u + 28u);
  auto invs = fit_invariants(merged, 3);
  ASSERT_EQ(invs.size(), 1u);
  EXPECT_EQ(invs[0].to_annotation(), "2*x*x*x + 3*x*x + x - 6*y - 2310 = 0");
  for (const auto& r : merged.rows) {
    EXPECT_EQ(invs[0].evaluate(r.values), 0);
    EXPECT_EQ(closed_form(r.values[0], r.values[1]), 0);
  }
  // Proportional to the closed form away from the trace as well.
  std::mt19937_64 rng(1);
  for (int i = 0; i < 50; ++i) {
    mpz_class x = static_cast<long>(rng() % 1000), y = static_cast<long>(rng() % 100000);
    EXPECT_EQ(invs[0].evaluate({x, y}), Rational(closed_form(x, y)));
  }
}

TEST(Fit, ZeroResidualOnSampledTraces) {
  auto u = fixtures::load("vote_buggy.yul");
  Span loop = lottery_loop(u);
  SampleOptions opts;
  opts.seed = 17;
  auto traces = sample_traces(u, "_lotteryReward", loop, opts);
  ASSERT_GE(traces.size(), 2u);
  auto merged = merge_traces(traces);
  for (const auto& inv : fit_invariants(merged, 3))
    for (const auto& r : merged.rows) EXPECT_EQ(inv.evaluate(r.values), 0);
}

TEST(Validate, LearnedInvariantIsInductiveAndSufficient) {
  YV_REQUIRE_Z3(cfg);
  auto u = fixtures::load("vote_buggy.yul");
  Span loop = lottery_loop(u);
  auto invs = fit_invariants(merge_traces(traces_for_runs(u, "_lotteryReward", loop, {{13}, {20}, {37}})), 3);
  auto v = validate_invariants(invs, u, "_lotteryReward", loop, cfg, kPureTransfer);
  EXPECT_EQ(v.status, ValidationStatus::Valid);
  bool saw_init = false, saw_preserve = false;
  for (const auto& [ob, verdict] : v.results) {
    EXPECT_EQ(verdict.status, solver::Status::Verified) << ob.id;
    saw_init = saw_init || ob.kind == vcgen::ObKind::InvInit;
    saw_preserve = saw_preserve || ob.kind == vcgen::ObKind::InvPreserve;
  }
  EXPECT_TRUE(saw_init && saw_preserve);
}

TEST(Validate, WrongCandidateIsInvalid) {
  YV_REQUIRE_Z3(cfg);
  auto u = fixtures::load("vote_buggy.yul");
  Span loop = lottery_loop(u);
  // y = 0 holds only before the first iteration.
  auto bad = fit_invariants(trace_of({"x", "y"}, {{10, 0}, {11, 0}}), 1);
  ASSERT_FALSE(bad.empty());
  EXPECT_EQ(validate_invariants(bad, u, "_lotteryReward", loop, cfg, kPureTransfer).status,
            ValidationStatus::Invalid);
}

TEST(InferLoop, TooLowDegreeIsNotApplicable) {
  YV_REQUIRE_Z3(cfg);
  auto u = fixtures::load("vote_buggy.yul");
  pipeline::VerifyOptions opts;
  opts.solver = cfg;
  opts.ecf = kPureTransfer;
  opts.degree = 2;
  std::vector<spec::SpecItem> installed;
  auto r = pipeline::infer_loop(u, "_lotteryReward", lottery_loop(u), opts, installed);
  EXPECT_EQ(r.status, ValidationStatus::NotApplicable);
  EXPECT_TRUE(installed.empty());
}
