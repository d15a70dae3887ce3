#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "yulverify/common.hpp"

namespace yulverify::evm {

inline constexpr int kByteSize = 32;
inline constexpr int kGasVeryLow = 3;

struct MemArray {
  std::vector<Word> data;
  Word size = 0;  // in words
  Word peek = 0;

  friend bool operator==(const MemArray&, const MemArray&) = default;
};

struct Message {
  Word recipient = 0;
  Word sender = 0;
  Word value = 0;
  Word gas = 0;

  friend bool operator==(const Message&, const Message&) = default;
};

// Raw slots for sload/sstore plus abstract per-slot maps for mappings and
// dynamic arrays (keys are not hashed).
struct Storage {
  std::map<Word, Word> slots;
  std::map<Word, std::map<std::vector<Word>, Word>> maps;
  std::map<Word, Word> lengths;

  Word load(const Word& slot) const;
  Word map_get(const Word& id, const std::vector<Word>& keys) const;
  Word length(const Word& id) const;

  friend bool operator==(const Storage&, const Storage&) = default;
};

struct EvmState {
  std::vector<Word> stack;  // back() is the top
  std::vector<Word> calldata;
  MemArray memory;
  Storage storage;
  Message message;
  Word pc = 0;
  Word gas = 0;
  Word timestamp = 0;
  bool reverted = false;
  bool timestamp_tainted = false;

  friend bool operator==(const EvmState&, const EvmState&) = default;
};

enum class Opcode {
  Add, Sub, Mul, Div, Mod, Lt, Gt, Eq, IsZero, And, Or, Not,
  Sload, Sstore, Mload, Mstore,
  Caller, CallValue, Address, Timestamp, Revert,
  MappingLoad, MappingLoad2, MappingStore, MappingStore2,
  ArrayLoad, ArrayStore, ArrayLength, ArrayPush, Pop,
};

// Resolves a Yul builtin name with the given argument count.
std::optional<Opcode> lookup_opcode(std::string_view name, size_t argc);
int arity(Opcode op);
bool returns_value(Opcode op);
std::string_view to_string(Opcode op);

struct Config {
  // Modular reduction of arithmetic results; unbounded when absent.
  std::optional<unsigned> wrap_bits;
};

Word param(const EvmState& s, size_t i);

Word mem_ceiling(const Word& x);
Word mem_round_up(const Word& max_index, const Word& i);
std::vector<Word> k_zeroes(const Word& k);
std::vector<Word> pad_mem(const std::vector<Word>& data, const Word& cur, const Word& next);
MemArray get_mem(const Word& byte_idx, const MemArray& mem);
Word mem_cost(const MemArray& mem);

EvmState push(EvmState s, const Word& v);
Word top(const EvmState& s);
EvmState pop(EvmState s);

// Operands are popped first-argument-first (the first argument is on top).
EvmState step(Opcode op, EvmState s, const Config& cfg = {});

Word wrap(const Word& v, unsigned bits);

}  // namespace yulverify::evm
