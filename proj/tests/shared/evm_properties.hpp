#pragma once

#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "yulverify/evm.hpp"

namespace yulverify::props {

// Memory expansion cost written out independently: 3 gas per word plus words^2 / 512.
inline Word oracle_cost(long words) { return Word(3 * words + (words * words) / 512); }

// Word count after touching the 32 bytes at byte_idx.
inline long oracle_round_up(long size, long byte_idx) { return std::max(size, (byte_idx + 64) / 32); }

struct Rng {
  std::mt19937_64 gen;
  long range(long lo, long hi) { return std::uniform_int_distribution<long>(lo, hi)(gen); }
  Word word() {
    Word w = 0;
    for (int i = 0; i < 4; ++i) w = (w << 64) + Word(std::to_string(gen()));
    return w;
  }
};

inline evm::EvmState random_state(Rng& r) {
  evm::EvmState s;
  long size = r.range(0, 64);
  s.memory.size = size;
  for (long i = 0; i < size; ++i) s.memory.data.push_back(r.range(0, 3) == 0 ? Word(0) : r.word());
  s.memory.peek = r.word();
  s.gas = Word(1) << 40;
  s.timestamp = r.range(0, 1L << 40);
  s.message.sender = r.range(1, 1L << 40);
  for (int i = 0, n = static_cast<int>(r.range(0, 5)); i < n; ++i) s.storage.slots[r.range(0, 20)] = r.word();
  for (int i = 0, n = static_cast<int>(r.range(0, 5)); i < n; ++i)
    s.storage.maps[r.range(0, 4)][{Word(r.range(0, 20))}] = r.word();
  return s;
}

// Pushes call arguments so that the first one ends on top.
template <typename... Ws>
evm::EvmState with_args(evm::EvmState s, const Ws&... args) {
  std::vector<Word> v{Word(args)...};
  for (auto it = v.rbegin(); it != v.rend(); ++it) s = evm::push(s, *it);
  return s;
}

// Gas, size and content specifications of MLOAD; returns one line per violation.
inline std::vector<std::string> mload_violations(uint64_t seed, int cases) {
  using evm::Opcode;
  std::vector<std::string> bad;
  Rng r{std::mt19937_64(seed)};
  for (int i = 0; i < cases; ++i) {
    evm::EvmState s0 = random_state(r);
    long size0 = s0.memory.size.get_si();
    long idx = r.range(0, size0 * 32 + 300);
    evm::EvmState s1 = evm::step(Opcode::Mload, evm::push(s0, idx));
    long size1 = s1.memory.size.get_si();
    auto fail = [&](const char* what) {
      std::ostringstream o;
      o << "case " << i << " idx " << idx << " size " << size0 << ": " << what;
      bad.push_back(o.str());
    };
    if (s0.gas - s1.gas != oracle_cost(size1) - oracle_cost(size0) + 3) fail("gas");
    if (idx < size0 * 32) {
      if (size1 != size0) fail("size grew on in-bounds read");
      if (evm::top(s1) != s0.memory.data[static_cast<size_t>(idx / 32)]) fail("value");
    } else {
      if (size1 != oracle_round_up(size0, idx)) fail("size after expansion");
      if (evm::top(s1) != 0) fail("fresh memory is not zero");
    }
    for (long k = 0; k < size0; ++k)
      if (s1.memory.data[static_cast<size_t>(k)] != s0.memory.data[static_cast<size_t>(k)]) {
        fail("old content changed");
        break;
      }
    if (s1.memory.data.size() != static_cast<size_t>(size1)) fail("data length differs from size");
  }
  return bad;
}

// Reading a slot or mapping entry right after writing it yields the written value.
inline std::vector<std::string> storage_reduce_violations(uint64_t seed, int cases) {
  using evm::Opcode;
  std::vector<std::string> bad;
  Rng r{std::mt19937_64(seed)};
  for (int i = 0; i < cases; ++i) {
    evm::EvmState phi = random_state(r);
    Word slot = r.range(0, 3) == 0 ? r.word() : Word(r.range(0, 20));
    Word v = r.word();
    evm::EvmState written = evm::step(Opcode::Sstore, with_args(phi, slot, v));
    evm::EvmState read = evm::step(Opcode::Sload, with_args(written, slot));
    if (evm::top(read) != v) bad.push_back("case " + std::to_string(i) + ": sload after sstore");
    if (evm::pop(read).stack != phi.stack) bad.push_back("case " + std::to_string(i) + ": stack disturbed");

    Word id = r.range(0, 4);
    Word key = r.range(0, 30);
    evm::EvmState mw = evm::step(Opcode::MappingStore, with_args(phi, id, key, v));
    if (evm::top(evm::step(Opcode::MappingLoad, with_args(mw, id, key))) != v)
      bad.push_back("case " + std::to_string(i) + ": mapping_load after mapping_store");
  }
  return bad;
}

}  // namespace yulverify::props
