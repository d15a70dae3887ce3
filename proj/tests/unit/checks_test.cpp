#include <gtest/gtest.h>

#include "support.hpp"
#include "yulverify/static_checks.hpp"

using namespace yulverify;
using namespace yulverify::checks;

namespace {

std::vector<PatternFinding> reentrancy(const yul::YulUnit& u, const std::string& fn) {
  return check_reentrancy(*u.find(fn), u);
}

// Every consecutive pair of witness spans is joined by some CFG edge.
bool witness_is_path(const Cfg& cfg, const std::vector<Span>& w) {
  for (size_t i = 0; i + 1 < w.size(); ++i) {
    bool linked = false;
    for (size_t a : cfg.nodes_at(w[i]))
      for (size_t b : cfg.nodes_at(w[i + 1])) linked = linked || cfg.has_edge(a, b);
    if (!linked) return false;
  }
  return true;
}

}  // namespace

TEST(Reentrancy, BuggyVoteHasOneFindingAtTheTransfer) {
  auto u = fixtures::load("vote_buggy.yul");
  auto fs = reentrancy(u, "vote");
  ASSERT_EQ(fs.size(), 1u);
  EXPECT_EQ(fs[0].pattern, PatternKind::Reentrancy);
  EXPECT_EQ(fs[0].site.line, 17);
  EXPECT_GT(fs[0].sink.line, fs[0].site.line);
  ASSERT_GE(fs[0].witness.size(), 2u);
  // Witness nodes are statements; the call site lies inside the first one.
  EXPECT_EQ(fs[0].witness.front().line, fs[0].site.line);
  EXPECT_EQ(fs[0].witness.back().line, fs[0].sink.line);
  EXPECT_TRUE(witness_is_path(build_cfg(*u.find("vote")), fs[0].witness));
}

TEST(Reentrancy, FixedVoteAndCallFreeCodeAreClean) {
  auto fixed = fixtures::load("vote_fixed.yul");
  EXPECT_TRUE(reentrancy(fixed, "vote").empty());
  auto plain = fixtures::lowered("function f() { sstore(0, 1) }");
  EXPECT_TRUE(reentrancy(plain, "f").empty());
}

TEST(Reentrancy, WriteBeforeCallOnlyIsClean) {
  auto u = fixtures::lowered("function f(t) { sstore(0, 1) pop(ext(t)) }");
  EXPECT_TRUE(reentrancy(u, "f").empty());
}

TEST(Reentrancy, LoopBackEdgeReachesEarlierWrite) {
  auto u = fixtures::lowered(R"(
function f(t, n) {
  for { let i := 0 } lt(i, n) { i := add(i, 1) } {
    sstore(0, i)
    pop(ext(t))
  }
}
)");
  auto fs = reentrancy(u, "f");
  ASSERT_EQ(fs.size(), 1u);
  EXPECT_TRUE(witness_is_path(build_cfg(*u.find("f")), fs[0].witness));
}

TEST(Reentrancy, WriteInsideInternalCalleeCounts) {
  auto u = fixtures::lowered("function g() { sstore(0, 1) }\nfunction f(t) { pop(ext(t)) g() }");
  EXPECT_EQ(reentrancy(u, "f").size(), 1u);
}

TEST(Reentrancy, StableUnderFunctionReordering) {
  std::string a = fixtures::read_fixture("vote_buggy.yul");
  auto u1 = fixtures::lowered(a);
  auto split = a.find("/* @pre n < 100 */");
  ASSERT_NE(split, std::string::npos);
  auto head_end = a.find("/* @post userVoted");
  std::string reordered = a.substr(0, head_end) + a.substr(split) + "\n" + a.substr(head_end, split - head_end);
  auto u2 = fixtures::lowered(reordered);
  auto f1 = run_checks(u1);
  auto f2 = run_checks(u2);
  ASSERT_EQ(f1.size(), f2.size());
  ASSERT_EQ(f1.size(), 1u);
  EXPECT_EQ(f1[0].function, f2[0].function);
  EXPECT_EQ(f1[0].witness.size(), f2[0].witness.size());
}

TEST(Timestamp, DataFlowIntoStorage) {
  auto u = fixtures::load("timestamp_data.yul");
  auto fs = run_checks(u);
  ASSERT_EQ(fs.size(), 1u);
  EXPECT_EQ(fs[0].pattern, PatternKind::Timestamp);
  EXPECT_FALSE(fs[0].witness.empty());
}

TEST(Timestamp, ControlDependence) {
  auto fs = run_checks(fixtures::load("timestamp_control.yul"));
  ASSERT_GE(fs.size(), 1u);
  for (const auto& f : fs) EXPECT_EQ(f.pattern, PatternKind::Timestamp);
}

TEST(Timestamp, UnusedReadIsClean) {
  EXPECT_TRUE(run_checks(fixtures::load("timestamp_clean.yul")).empty());
}

TEST(Checks, OnlyRequestedPatternsRun) {
  auto u = fixtures::lowered("function f(t) { pop(ext(t)) sstore(0, timestamp()) }");
  EXPECT_TRUE(run_checks(u).empty());
  EXPECT_EQ(check_timestamp(*u.find("f"), u).size(), 1u);
}

TEST(Cfg, EntryExitAndBranches) {
  auto u = fixtures::lowered("function f(x) { if x { sstore(0, 1) } sstore(1, 2) }");
  auto cfg = build_cfg(*u.find("f"));
  ASSERT_GE(cfg.nodes.size(), 4u);
  EXPECT_TRUE(cfg.nodes[1].succ.empty());
  size_t reach_exit = 0;
  for (const auto& n : cfg.nodes)
    for (size_t s : n.succ) reach_exit += s == 1;
  EXPECT_GE(reach_exit, 1u);
}

TEST(CfgProperty, ExitReachableFromEntryOnCorpus) {
  for (const char* name : {"vote_buggy.yul", "vote_fixed.yul", "array_alloc_buggy.yul", "rebalance.yul",
                           "timestamp_control.yul", "straight/sl10_switch.yul", "straight/sl19_helper.yul"}) {
    auto u = fixtures::load(name);
    for (const auto& f : u.functions) {
      auto cfg = build_cfg(f);
      std::vector<bool> seen(cfg.nodes.size());
      std::vector<size_t> stack{0};
      while (!stack.empty()) {
        size_t n = stack.back();
        stack.pop_back();
        if (seen[n]) continue;
        seen[n] = true;
        for (size_t s : cfg.nodes[n].succ) stack.push_back(s);
      }
      EXPECT_TRUE(seen[1]) << name << " " << f.name;
    }
  }
}
