#include <gtest/gtest.h>

#include <filesystem>

#include "support.hpp"
#include "yulverify/pipeline.hpp"
#include "yulverify/vcgen.hpp"

using namespace yulverify;
using namespace yulverify::vcgen;
using logic::Sort;

namespace {

std::vector<Obligation> vcs(const yul::YulUnit& u, const std::string& fn,
                            const std::map<std::string, vir::EcfAnswer>& ecf = {},
                            std::optional<unsigned> wrap = std::nullopt) {
  auto ctx = build_context(u, ecf, wrap);
  return generate_vcs(ctx.functions.at(fn), ctx);
}

const Obligation* find(const std::vector<Obligation>& obs, ObKind k) {
  for (const auto& o : obs)
    if (o.kind == k) return &o;
  return nullptr;
}

std::vector<std::string> straight_fixtures() {
  std::vector<std::string> out;
  for (const auto& e : std::filesystem::directory_iterator(fixtures::fixture_path("straight")))
    out.push_back("straight/" + e.path().filename().string());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST(VcGen, NamingConventions) {
  EXPECT_EQ(local_name("x"), "l.x");
  EXPECT_EQ(entry_name("stake"), "entry.stake");
  EXPECT_EQ(old_name("map_0x01"), "old.map_0x01");
}

TEST(VcGen, TrivialAssertIsTrueAndVerified) {
  YV_REQUIRE_Z3(cfg);
  auto u = fixtures::lowered("function f() { /* @assert 1 = 1 */ pop(0) }");
  auto obs = vcs(u, "f");
  ASSERT_EQ(obs.size(), 1u);
  EXPECT_EQ(obs[0].kind, ObKind::Assert);
  EXPECT_EQ(obs[0].id, "f.assert.1");
  EXPECT_TRUE(logic::is_true(obs[0].goal));
  EXPECT_EQ(solver::discharge(obs[0], cfg).status, solver::Status::Verified);
}

TEST(VcGen, IdsFollowSourceOrder) {
  auto obs = vcs(fixtures::load("vote_buggy.yul"), "_lotteryReward", {{"transferFrom", vir::EcfAnswer::Pure}});
  std::vector<std::string> ids;
  for (const auto& o : obs) ids.push_back(o.id);
  ASSERT_GE(ids.size(), 3u);
  EXPECT_EQ(find(obs, ObKind::InvInit)->id.find("_lotteryReward.inv-init."), 0u);
  for (size_t i = 0; i < obs.size(); ++i) {
    auto dot = obs[i].id.rfind('.');
    EXPECT_EQ(obs[i].id.substr(dot + 1), std::to_string(i + 1));
  }
}

TEST(VcGen, LoopWithoutInvariant) {
  auto u = fixtures::lowered("function f(n) { for { let i := 0 } lt(i, n) { i := add(i, 1) } { } }");
  try {
    vcs(u, "f");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::MissingInvariant);
  }
}

TEST(VcGen, MissingEcfAnswer) {
  auto u = fixtures::load("vote_buggy.yul");
  try {
    build_context(u, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::MissingEcfAnswer);
  }
}

TEST(VcGen, ImpureCallHavocsStorage) {
  YV_REQUIRE_Z3(cfg);
  auto u = fixtures::lowered(R"(
/* @storage total : uint256 */
/* @post total = old total */
function f(t) { pop(ext(t)) }
)");
  auto pure = vcs(u, "f", {{"ext", vir::EcfAnswer::Pure}});
  auto impure = vcs(u, "f", {{"ext", vir::EcfAnswer::Impure}});
  EXPECT_EQ(solver::discharge(*find(pure, ObKind::Post), cfg).status, solver::Status::Verified);
  EXPECT_EQ(solver::discharge(*find(impure, ObKind::Post), cfg).status, solver::Status::Refuted);
  EXPECT_NE(find(pure, ObKind::EcfConsistency), nullptr);
}

TEST(VcGen, MetaOnlyOnPublicFunctions) {
  auto u = fixtures::load("vote_fixed.yul");
  auto pub = vcs(u, "vote", {{"transferFrom", vir::EcfAnswer::Pure}});
  auto priv = vcs(u, "_lotteryReward", {{"transferFrom", vir::EcfAnswer::Pure}});
  EXPECT_NE(find(pub, ObKind::Meta), nullptr);
  EXPECT_EQ(find(priv, ObKind::Meta), nullptr);
  for (const auto& o : pub)
    if (o.kind == ObKind::Meta) EXPECT_EQ(o.property_type, PropType::T3);
}

TEST(VcGen, OverflowObligationsOnlyWhenRequested) {
  auto u = fixtures::load("array_alloc_buggy.yul");
  auto checked = vcs(u, "create_memory_array", {}, 64);
  auto unchecked = vcs(u, "f", {}, 64);
  size_t n = 0;
  for (const auto& o : checked)
    if (o.kind == ObKind::Overflow) {
      ++n;
      EXPECT_EQ(o.property_type, PropType::T5);
    }
  EXPECT_EQ(n, 2u);
  EXPECT_EQ(find(unchecked, ObKind::Overflow), nullptr);
}

TEST(VcGen, OverflowRefutedAt64Bits) {
  YV_REQUIRE_Z3(cfg);
  auto obs = vcs(fixtures::load("array_alloc_buggy.yul"), "create_memory_array", {}, 64);
  for (const auto& o : obs) {
    if (o.kind != ObKind::Overflow) continue;
    auto v = solver::discharge(o, cfg);
    ASSERT_EQ(v.status, solver::Status::Refuted) << o.id;
    ASSERT_TRUE(v.model.has_value());
    EXPECT_EQ(solver::validate_model(o, *v.model), std::optional<bool>(true)) << o.id;
  }
}

TEST(VcGen, FormLowering) {
  auto u = fixtures::load("vote_buggy.yul");
  FormEnv env;
  env.layout = &u.state_vars;
  auto t = lower_form(u.find("vote")->specs[1].form, env);
  std::map<std::string, Sort> consts;
  std::map<std::string, logic::FunSig> funs;
  logic::collect_symbols(t, consts, funs);
  EXPECT_TRUE(consts.count("old.map_0x01"));
  EXPECT_TRUE(consts.count("map_0x02"));
  EXPECT_TRUE(consts.count("old.map_0x02"));
  EXPECT_TRUE(consts.count("env.caller"));
}

// wp is monotone: Q1 => Q2 implies wp(S, Q1) => wp(S, Q2).
TEST(VcGenProperty, WpMonotoneOnCorpusBodies) {
  YV_REQUIRE_Z3(cfg);
  const logic::TermPtr exc = logic::bool_lit(true);
  for (const auto& name : straight_fixtures()) {
    auto u = fixtures::load(name);
    auto ctx = build_context(u, {});
    for (const auto& [fn, vf] : ctx.plain) {
      auto r = logic::var(local_name(vf.has_ret ? vf.ret_source : "unused"), Sort::Int);
      auto q2 = logic::ge(r, logic::int_lit(3));
      auto q1 = logic::land(q2, logic::le(r, logic::int_lit(1000)));
      ExcPost x{exc, exc, exc};
      Obligation ob;
      ob.id = fn + ".mono";
      ob.goal = logic::implies(wp(vf.body, q1, x, ctx, &vf), wp(vf.body, q2, x, ctx, &vf));
      EXPECT_EQ(solver::discharge(ob, cfg).status, solver::Status::Verified) << name << " " << fn;
    }
  }
}

// The explicit read-after-write hypothesis never turns a verified obligation into anything else.
TEST(VcGenProperty, StorageReduceKeepsVerdicts) {
  YV_REQUIRE_Z3(cfg);
  std::vector<std::string> files = straight_fixtures();
  files.push_back("vote_fixed.yul");
  files.push_back("rebalance.yul");
  for (const auto& name : files) {
    pipeline::VerifyOptions base;
    base.solver = cfg;
    base.ecf = {{"transferFrom", vir::EcfAnswer::Pure}};
    auto with = base;
    with.storage_reduce = true;
    auto a = pipeline::verify_source(fixtures::read_fixture(name), name, base);
    auto b = pipeline::verify_source(fixtures::read_fixture(name), name, with);
    ASSERT_EQ(a.functions.size(), b.functions.size());
    for (size_t f = 0; f < a.functions.size(); ++f) {
      ASSERT_EQ(a.functions[f].obligations.size(), b.functions[f].obligations.size());
      for (size_t i = 0; i < a.functions[f].obligations.size(); ++i) {
        const auto& va = a.functions[f].obligations[i].verdict;
        const auto& vb = b.functions[f].obligations[i].verdict;
        if (va && va->status == solver::Status::Verified)
          EXPECT_EQ(vb->status, solver::Status::Verified) << a.functions[f].obligations[i].obligation.id;
      }
    }
  }
}
