#include <gtest/gtest.h>

#include <random>

#include "../shared/evm_properties.hpp"
#include "yulverify/evm.hpp"

using namespace yulverify;
using namespace yulverify::evm;

using props::Rng;
using props::oracle_round_up;
using props::random_state;
using props::with_args;

TEST(Evm, Param) {
  EvmState s;
  s.calldata = {9, 7};
  EXPECT_EQ(param(s, 1), 7);
  s.calldata = {5};
  EXPECT_EQ(param(s, 0), 5);
  s.calldata = {};
  EXPECT_THROW(param(s, 0), Error);
}

TEST(Evm, CeilingAndZeroes) {
  EXPECT_EQ(mem_ceiling(0), 1);
  EXPECT_EQ(mem_ceiling(32), 2);
  EXPECT_TRUE(k_zeroes(-1).empty());
  EXPECT_EQ(k_zeroes(2).size(), 3u);
  EXPECT_EQ(pad_mem({1}, 1, 3).size(), 4u);
}

TEST(Evm, GetMemInBounds) {
  MemArray m{{7}, 1, 0};
  auto out = get_mem(0, m);
  EXPECT_EQ(out.peek, 7);
  EXPECT_EQ(out.size, 1);
}

TEST(Evm, GetMemOutOfBounds) {
  MemArray m{{7}, 1, 0};
  auto out = get_mem(64, m);
  EXPECT_EQ(out.peek, 0);
  EXPECT_EQ(out.size, oracle_round_up(1, 64));
  EXPECT_EQ(out.data.size(), 4u);
  EXPECT_EQ(out.data[0], 7);
  try {
    get_mem(-1, m);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NegativeAddress);
  }
}

TEST(Evm, MemCost) {
  EXPECT_EQ(mem_cost(MemArray{{}, 0, 0}), 0);
  EXPECT_EQ(mem_cost(MemArray{{0}, 1, 0}), 3);
  EXPECT_EQ(mem_cost(MemArray{std::vector<Word>(32), 32, 0}), 98);
}

TEST(Evm, ArithmeticIsUnbounded) {
  Word big = pow2(256) - 1;
  EXPECT_EQ(top(step(Opcode::Add, with_args(EvmState{}, 1, 0))), 1);
  EXPECT_EQ(top(step(Opcode::Add, with_args(EvmState{}, 1, big))), pow2(256));
}

TEST(Evm, WrapModeMultiplication) {
  EvmState s = push(push(EvmState{}, pow2(59)), 0x20);
  EXPECT_EQ(top(step(Opcode::Mul, s, Config{64})), 0);
  EXPECT_EQ(top(step(Opcode::Mul, s)), pow2(64));
}

TEST(Evm, IsZeroAndDivisionByZero) {
  EXPECT_EQ(top(step(Opcode::IsZero, push(EvmState{}, 0))), 1);
  EXPECT_EQ(top(step(Opcode::Div, push(push(EvmState{}, 0), 5))), 0);
  EXPECT_EQ(top(step(Opcode::Mod, push(push(EvmState{}, 0), 5))), 0);
}

TEST(Evm, StackUnderflow) {
  try {
    step(Opcode::Add, push(EvmState{}, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::StackUnderflow);
  }
  EXPECT_THROW(pop(EvmState{}), Error);
}

TEST(Evm, TimestampTaintsAndCallerReadsSender) {
  EvmState s;
  s.timestamp = 99;
  s.message.sender = 42;
  auto t = step(Opcode::Timestamp, s);
  EXPECT_EQ(top(t), 99);
  EXPECT_TRUE(t.timestamp_tainted);
  EXPECT_EQ(top(step(Opcode::Caller, s)), 42);
}

TEST(Evm, UninitializedStorageIsZero) {
  EXPECT_EQ(top(step(Opcode::Sload, push(EvmState{}, 12345))), 0);
}

// Executable MLOAD specifications over random states.
TEST(EvmProperty, MloadSpecifications) {
  for (const auto& v : props::mload_violations(2024, 2000)) ADD_FAILURE() << v;
}

TEST(EvmProperty, MstoreKeepsSizeInvariantAndNeverShrinks) {
  Rng r{std::mt19937_64(77)};
  for (int i = 0; i < 1000; ++i) {
    EvmState s0 = random_state(r);
    long idx = r.range(0, s0.memory.size.get_si() * 32 + 300);
    Word v = r.word();
    EvmState s1 = step(Opcode::Mstore, with_args(s0, idx, v));
    EXPECT_GE(s1.memory.size, s0.memory.size);
    EXPECT_EQ(s1.memory.data.size(), s1.memory.size.get_ui());
    EXPECT_EQ(top(step(Opcode::Mload, push(s1, idx))), v);
  }
}

// Reading a slot right after writing it yields the written value.
TEST(EvmProperty, StorageReduce) {
  for (const auto& v : props::storage_reduce_violations(99, 2000)) ADD_FAILURE() << v;
}

TEST(EvmProperty, RevertedIsAbsorbing) {
  Rng r{std::mt19937_64(5)};
  const Opcode ops[] = {Opcode::Add, Opcode::Sstore, Opcode::Mstore, Opcode::Caller, Opcode::Timestamp};
  for (int i = 0; i < 200; ++i) {
    EvmState s = random_state(r);
    s.reverted = true;
    s = push(push(s, r.range(0, 100)), r.range(0, 100));
    EvmState t = step(ops[i % 5], s);
    EXPECT_TRUE(t.reverted);
    EXPECT_EQ(t, s);
  }
}
