#include <gtest/gtest.h>

#include <filesystem>

#include "support.hpp"
#include "yulverify/solver.hpp"

using namespace yulverify;
using namespace yulverify::solver;
using logic::Sort;

namespace {

vcgen::Obligation ob(const std::string& id, logic::TermPtr goal,
                     std::vector<std::pair<std::string, logic::TermPtr>> hyps = {}) {
  vcgen::Obligation o;
  o.id = id;
  o.function = "f";
  o.goal = std::move(goal);
  o.hypotheses = std::move(hyps);
  return o;
}

logic::TermPtr iv(const std::string& n) { return logic::var(n, Sort::Int); }

}  // namespace

TEST(Solver, BackendNames) {
  EXPECT_EQ(parse_backend("z3"), std::optional<Backend>(Backend::Z3));
  EXPECT_EQ(parse_backend("z3-alt"), std::optional<Backend>(Backend::Z3Alt));
  EXPECT_EQ(parse_backend("nope"), std::nullopt);
}

TEST(Solver, TrueIsVerified) {
  YV_REQUIRE_Z3(cfg);
  auto v = discharge(ob("t", logic::bool_lit(true)), cfg);
  EXPECT_EQ(v.status, Status::Verified);
  EXPECT_EQ(v.backend, "z3");
}

TEST(Solver, RefutedCarriesValidModel) {
  YV_REQUIRE_Z3(cfg);
  auto o = ob("r", logic::lt(iv("x"), logic::int_lit(10)), {{"lo", logic::ge(iv("x"), logic::int_lit(5))}});
  auto v = discharge(o, cfg);
  ASSERT_EQ(v.status, Status::Refuted);
  ASSERT_TRUE(v.model);
  EXPECT_GE(v.model->consts.at("x").num, 10);
  EXPECT_EQ(validate_model(o, *v.model), std::optional<bool>(true));
}

TEST(Solver, ArrayModelRoundTrip) {
  YV_REQUIRE_Z3(cfg);
  auto m = logic::var("m", Sort::Array);
  auto o = ob("a", logic::eq(logic::select(m, logic::int_lit(3)), logic::int_lit(0)),
              {{"k", logic::eq(logic::select(m, logic::int_lit(4)), logic::int_lit(7))}});
  auto v = discharge(o, cfg);
  ASSERT_EQ(v.status, Status::Refuted);
  auto at3 = evaluate(logic::select(m, logic::int_lit(3)), *v.model);
  auto at4 = evaluate(logic::select(m, logic::int_lit(4)), *v.model);
  ASSERT_TRUE(at3 && at4);
  EXPECT_NE(at3->num, 0);
  EXPECT_EQ(at4->num, 7);
}

TEST(Solver, HardNonlinearGoalTimesOut) {
  YV_REQUIRE_Z3(base);
  SolverConfig cfg = base;
  cfg.timeout = 1.0;
  // No positive solutions to x^3 + y^3 = z^3; beyond the nonlinear engine.
  auto x = iv("x"), y = iv("y"), z = iv("z");
  auto cube = [](const logic::TermPtr& t) { return logic::mul(t, logic::mul(t, t)); };
  auto o = ob("flt", logic::lnot(logic::eq(logic::add(cube(x), cube(y)), cube(z))),
              {{"pos", logic::land({logic::gt(x, logic::int_lit(0)), logic::gt(y, logic::int_lit(0)),
                                    logic::gt(z, logic::int_lit(0))})}});
  auto v = discharge(o, cfg);
  EXPECT_EQ(v.status, Status::Timeout) << to_string(v.status);
  EXPECT_LT(v.wall_time, 3.0);
}

TEST(Solver, EmitIsDeterministicAndShares) {
  auto s = logic::add(iv("a"), iv("b"));
  auto o = ob("d", logic::eq(logic::mul(s, s), logic::mul(s, iv("c"))));
  std::string first = emit_smtlib(o);
  EXPECT_EQ(first, emit_smtlib(o));
  EXPECT_NE(first.find("(define-fun %s0 () Int (+ a b))"), std::string::npos) << first;
  EXPECT_EQ(emit_smtlib(o, {Logic::Auto, false}).find("define-fun"), std::string::npos);
  EXPECT_NE(first.find("(set-logic QF_"), std::string::npos) << first;
}

TEST(Solver, QuantifiedGoalRejectedUnderQuantifierFreeLogic) {
  auto o = ob("q", logic::forall({{"k", Sort::Int}}, logic::ge(logic::mul(iv("k"), iv("k")), logic::int_lit(0))));
  EXPECT_NO_THROW(emit_smtlib(o));
  try {
    emit_smtlib(o, {Logic::QuantifierFree, true});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnsupportedSort);
  }
}

TEST(Solver, ConflictingSortsRejected) {
  auto o = ob("s", logic::land(logic::var("v", Sort::Bool), logic::eq(logic::var("v", Sort::Int), logic::int_lit(1))));
  try {
    emit_smtlib(o);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnsupportedSort);
  }
}

TEST(Solver, ParseModelSyntaxes) {
  auto m1 = parse_model(parse_sexprs(
      "(model (define-fun x () Int 5) (define-fun b () Bool true) "
      "(define-fun m () (Array Int Int) (store ((as const (Array Int Int)) 0) 2 (- 9))))"));
  EXPECT_EQ(m1.consts.at("x").num, 5);
  EXPECT_TRUE(m1.consts.at("b").flag);
  auto at2 = evaluate(logic::select(logic::var("m", Sort::Array), logic::int_lit(2)), m1);
  ASSERT_TRUE(at2);
  EXPECT_EQ(at2->num, -9);
  auto m2 = parse_model(parse_sexprs("(define-fun |l.x| () Int 3)"));
  EXPECT_EQ(m2.consts.at("l.x").num, 3);
  auto m3 = parse_model(parse_sexprs("((x 4) (y (- 1)))"));
  EXPECT_EQ(m3.consts.at("y").num, -1);
  EXPECT_THROW(parse_sexprs("(a (b)"), Error);
}

TEST(Solver, EvaluateUnknownSymbol) {
  Model m;
  EXPECT_FALSE(evaluate(iv("nothere"), m).has_value());
}

TEST(Solver, DischargeAllPreservesOrder) {
  YV_REQUIRE_Z3(cfg);
  std::vector<vcgen::Obligation> obs;
  for (int i = 0; i < 8; ++i)
    obs.push_back(ob("o" + std::to_string(i), logic::ge(iv("x"), logic::int_lit(i % 2 ? 0 : -1)),
                     {{"r", logic::ge(iv("x"), logic::int_lit(0))}}));
  obs.push_back(ob("bad", logic::gt(iv("x"), logic::int_lit(0))));
  auto vs = discharge_all(obs, cfg, 4);
  ASSERT_EQ(vs.size(), obs.size());
  for (int i = 0; i < 8; ++i) EXPECT_EQ(vs[i].status, Status::Verified);
  EXPECT_EQ(vs.back().status, Status::Refuted);
}

TEST(Solver, BuggyVoteModelValidates) {
  YV_REQUIRE_Z3(cfg);
  auto u = fixtures::load("vote_buggy.yul");
  auto ctx = vcgen::build_context(u, {{"transferFrom", vir::EcfAnswer::Pure}});
  auto obs = vcgen::generate_vcs(ctx.functions.at("vote"), ctx);
  const vcgen::Obligation* stakes = nullptr;
  for (const auto& o : obs)
    if (o.id == "vote.post.2") stakes = &o;
  ASSERT_NE(stakes, nullptr);
  auto v = discharge(*stakes, cfg);
  ASSERT_EQ(v.status, Status::Refuted);
  EXPECT_EQ(validate_model(*stakes, *v.model), std::optional<bool>(true));
}

TEST(Deferred, ManifestAndExport) {
  auto u = fixtures::load("rebalance.yul");
  auto ctx = vcgen::build_context(u, {});
  std::vector<vcgen::Obligation> deferred, all;
  for (const auto& [name, f] : ctx.functions)
    for (auto& o : vcgen::generate_vcs(f, ctx)) {
      if (o.deferred) deferred.push_back(o);
      all.push_back(o);
    }
  ASSERT_EQ(deferred.size(), 1u);
  auto manifest = deferred_manifest(deferred);
  ASSERT_EQ(manifest.entries.size(), 1u);
  EXPECT_EQ(manifest.entries[0].file, deferred[0].id + ".sexp");
  EXPECT_EQ(manifest.entries[0].theorem, deferred[0].function + "'vc");

  auto dir = std::filesystem::temp_directory_path() / "yv_deferred_test";
  std::filesystem::remove_all(dir);
  export_deferred(deferred, dir);
  EXPECT_TRUE(std::filesystem::exists(dir / "manifest.json"));
  EXPECT_TRUE(std::filesystem::exists(dir / manifest.entries[0].file));

  try {
    deferred_manifest(all);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::PreconditionViolation);
  }
  EXPECT_TRUE(deferred_manifest({}).entries.empty());
  std::filesystem::remove_all(dir);
}
