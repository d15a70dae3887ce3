#pragma once

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>
#include <string>

#include "yulverify/solver.hpp"
#include "yulverify/yul.hpp"

namespace yulverify::fixtures {

inline std::string fixture_path(const std::string& name) { return std::string(YV_FIXTURE_DIR) + "/" + name; }

inline std::string read_fixture(const std::string& name) {
  std::ifstream in(fixture_path(name));
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline yul::YulUnit load(const std::string& name) {
  return yul::lower_unit_specs(yul::parse_yul(read_fixture(name), name));
}

inline yul::YulUnit lowered(std::string_view text) { return yul::lower_unit_specs(yul::parse_yul(text)); }

#define YV_REQUIRE_Z3(cfg)                                   \
  auto cfg##_opt = solver::make_config(solver::Backend::Z3); \
  if (!cfg##_opt) GTEST_SKIP() << "z3 not installed";        \
  const solver::SolverConfig& cfg = *cfg##_opt

}  // namespace yulverify::fixtures
