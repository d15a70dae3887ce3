#include <gtest/gtest.h>

#include <filesystem>

#include "support.hpp"
#include "yulverify/vir.hpp"
#include "yulverify/yul.hpp"

using namespace yulverify;
using namespace yulverify::yul;

namespace {

ErrorKind error_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorKind::IoError;
}

std::vector<std::string> corpus() {
  std::vector<std::string> out;
  for (const auto& dir : {std::string(YV_FIXTURE_DIR), std::string(YV_FIXTURE_DIR) + "/straight"})
    for (const auto& e : std::filesystem::directory_iterator(dir))
      if (e.path().extension() == ".yul") out.push_back(e.path().string());
  std::sort(out.begin(), out.end());
  return out;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Yul, IdentityFunction) {
  auto u = parse_yul("function f(x) -> r { r := x }");
  ASSERT_EQ(u.functions.size(), 1u);
  EXPECT_EQ(u.functions[0].name, "f");
  EXPECT_EQ(u.functions[0].params, std::vector<std::string>{"x"});
  EXPECT_EQ(u.functions[0].ret, std::optional<std::string>("r"));
}

TEST(Yul, CompilerBugFixtureFunctions) {
  auto u = parse_yul(fixtures::read_fixture("array_alloc_buggy.yul"));
  std::vector<std::string> names;
  for (const auto& f : u.functions) names.push_back(f.name);
  EXPECT_EQ(names, (std::vector<std::string>{"allocate", "create_memory_array", "f"}));
}

TEST(Yul, BreakOutsideLoop) {
  EXPECT_EQ(error_of([] { parse_yul("function f() { break }"); }), ErrorKind::SyntaxError);
}

TEST(Yul, LeaveInsideFunctionOnly) {
  EXPECT_NO_THROW(parse_yul("function f() { leave }"));
  EXPECT_EQ(error_of([] { parse_yul("leave"); }), ErrorKind::SyntaxError);
}

TEST(Yul, MultiReturnUnsupported) {
  EXPECT_EQ(error_of([] { parse_yul("function f() -> a, b { }"); }), ErrorKind::UnsupportedConstruct);
}

TEST(Yul, DuplicateSwitchCase) {
  EXPECT_EQ(error_of([] { parse_yul("function f(x) { switch x case 1 { } case 1 { } }"); }), ErrorKind::SyntaxError);
}

TEST(Yul, OpcodesAreBuiltins) {
  for (const char* op : {"add", "mul", "sload", "sstore", "mload", "mstore", "caller", "timestamp", "iszero", "lt",
                         "gt", "eq", "revert", "call"})
    EXPECT_TRUE(is_opcode(op)) << op;
  EXPECT_FALSE(is_opcode("transferFrom"));
}

TEST(Yul, AnnotationsBindToFollowingFunctionAndLoop) {
  auto u = parse_yul(fixtures::read_fixture("vote_buggy.yul"));
  const auto* vote = u.find("vote");
  ASSERT_NE(vote, nullptr);
  EXPECT_EQ(vote->specs.size(), 3u);
  EXPECT_TRUE(vote->has_check(spec::Pattern::Reentrancy));
  const auto* lr = u.find("_lotteryReward");
  ASSERT_NE(lr, nullptr);
  const YStmt* loop = nullptr;
  for (const auto& s : lr->body.stmts)
    if (std::holds_alternative<For>(s->node)) loop = s.get();
  ASSERT_NE(loop, nullptr);
  ASSERT_EQ(loop->specs.size(), 3u);
  EXPECT_EQ(loop->specs[0].kind, spec::Directive::Learn);
  EXPECT_EQ(u.meta_specs.size(), 1u);
}

TEST(Storage, SequentialIds) {
  auto layout = build_storage_map({{"a", parse_type("uint256")}, {"b", parse_type("mapping(address => uint256)")}});
  ASSERT_EQ(layout.size(), 2u);
  EXPECT_EQ(layout[0].id, 0);
  EXPECT_EQ(layout[1].id, 1);
  EXPECT_EQ(layout[0].kind, spec::StateKind::Scalar);
  EXPECT_FALSE(layout[0].meta.has_value());
  EXPECT_EQ(layout[1].symbol(), "map_0x01");
}

TEST(Storage, DynamicArrayHasLengthAccessor) {
  auto layout = build_storage_map({{"past_stakes", parse_type("uint256[]")}});
  ASSERT_EQ(layout.size(), 1u);
  EXPECT_EQ(layout[0].id, 0);
  EXPECT_EQ(layout[0].kind, spec::StateKind::DynArray);
  ASSERT_TRUE(layout[0].meta.has_value());
  EXPECT_EQ(layout[0].meta->intrinsic, "array_length");
  EXPECT_EQ(layout[0].reader.intrinsic, "array_load");
  EXPECT_EQ(layout[0].writer.intrinsic, "array_store");
}

TEST(Storage, EmptyAndTooDeep) {
  EXPECT_TRUE(build_storage_map({}).empty());
  EXPECT_EQ(error_of([] {
              build_storage_map({{"m", parse_type("mapping(address => mapping(address => mapping(address => uint256)))")}});
            }),
            ErrorKind::UnsupportedType);
}

TEST(Storage, IdsFormInitialSegment) {
  auto u = parse_yul(fixtures::read_fixture("vote_buggy.yul"));
  for (size_t i = 0; i < u.state_vars.size(); ++i) EXPECT_EQ(u.state_vars[i].id, Word(static_cast<long>(i)));
}

TEST(Lowering, MapReadBecomesMapGet) {
  auto u = fixtures::load("vote_buggy.yul");
  const auto* vote = u.find("vote");
  std::string printed = spec::print(vote->specs[0]);
  EXPECT_NE(printed.find("map_get(map_0x01, caller)"), std::string::npos) << printed;
}

TEST(Lowering, ArrayWriteFormAndLength) {
  auto u = fixtures::lowered(
      "/*\n * @storage past_stakes : uint256[]\n */\n"
      "/* @post past_stakes[0] = 0 /\\ past_stakes.length >= 1 */\nfunction f() { array_store(0, 0, 0) }");
  std::string printed = spec::print(u.functions[0].specs[0]);
  EXPECT_NE(printed.find("array_get(arr_0x00, 0) = 0"), std::string::npos) << printed;
  EXPECT_NE(printed.find("array_length(arr_0x00)"), std::string::npos) << printed;
}

TEST(Lowering, LocalsUnchangedAndIdempotent) {
  auto u = parse_yul("/* @post result = x */\nfunction f(x) -> r { r := x }");
  auto once = lower_spec_accessors(u.functions[0].specs[0], u.state_vars);
  auto twice = lower_spec_accessors(once, u.state_vars);
  EXPECT_TRUE(spec::equal(once, twice));
  EXPECT_EQ(spec::print(once), spec::print(u.functions[0].specs[0]));
}

TEST(Lowering, IdempotentOnCorpus) {
  for (const auto& path : corpus()) {
    auto u = lower_unit_specs(parse_yul(slurp(path)));
    EXPECT_TRUE(equal(u, lower_unit_specs(u))) << path;
  }
}

TEST(Yul, PrintRoundTripOnCorpus) {
  for (const auto& path : corpus()) {
    auto u = parse_yul(slurp(path));
    std::string printed = print_unit(u);
    YulUnit again;
    ASSERT_NO_THROW(again = parse_yul(printed)) << path << "\n" << printed;
    EXPECT_TRUE(equal(u, again)) << path << "\n" << printed;
  }
}

TEST(Translation, CfgShapePreservedOnCorpus) {
  for (const auto& path : corpus()) {
    auto u = lower_unit_specs(parse_yul(slurp(path)));
    for (const auto& f : u.functions)
      EXPECT_EQ(vir::cfg_shape(f), vir::cfg_shape(vir::translate_function(f, u))) << path << " " << f.name;
  }
}

TEST(Translation, LeaveRaisesAndEmptyBodyHasHandler) {
  auto u = fixtures::lowered("function g() -> r { leave }\nfunction h() { }");
  std::string g = vir::print(vir::translate_function(u.functions[0], u));
  EXPECT_NE(g.find("raise Σ_leave"), std::string::npos) << g;
  std::string h = vir::print(vir::translate_function(u.functions[1], u));
  EXPECT_NE(h.find("with Σ_leave"), std::string::npos) << h;
}
