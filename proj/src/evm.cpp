#include "yulverify/evm.hpp"

#include <algorithm>

namespace yulverify::evm {

Word Storage::load(const Word& slot) const {
  auto it = slots.find(slot);
  return it == slots.end() ? Word(0) : it->second;
}

Word Storage::map_get(const Word& id, const std::vector<Word>& keys) const {
  auto m = maps.find(id);
  if (m == maps.end()) return 0;
  auto it = m->second.find(keys);
  return it == m->second.end() ? Word(0) : it->second;
}

Word Storage::length(const Word& id) const {
  auto it = lengths.find(id);
  return it == lengths.end() ? Word(0) : it->second;
}

std::optional<Opcode> lookup_opcode(std::string_view name, size_t argc) {
  struct Entry {
    std::string_view name;
    Opcode op;
  };
  static const Entry table[] = {
      {"add", Opcode::Add},           {"sub", Opcode::Sub},
      {"mul", Opcode::Mul},           {"div", Opcode::Div},
      {"mod", Opcode::Mod},           {"lt", Opcode::Lt},
      {"gt", Opcode::Gt},             {"eq", Opcode::Eq},
      {"iszero", Opcode::IsZero},     {"and", Opcode::And},
      {"or", Opcode::Or},             {"not", Opcode::Not},
      {"sload", Opcode::Sload},       {"sstore", Opcode::Sstore},
      {"mload", Opcode::Mload},       {"mstore", Opcode::Mstore},
      {"caller", Opcode::Caller},     {"callvalue", Opcode::CallValue},
      {"address", Opcode::Address},   {"timestamp", Opcode::Timestamp},
      {"revert", Opcode::Revert},     {"mapping_load", Opcode::MappingLoad},
      {"mapping_load", Opcode::MappingLoad2}, {"mapping_store", Opcode::MappingStore},
      {"mapping_store", Opcode::MappingStore2}, {"array_load", Opcode::ArrayLoad},
      {"array_store", Opcode::ArrayStore}, {"array_length", Opcode::ArrayLength},
      {"array_push", Opcode::ArrayPush},     {"pop", Opcode::Pop},
  };
  for (const auto& e : table)
    if (e.name == name && static_cast<size_t>(arity(e.op)) == argc) return e.op;
  return std::nullopt;
}

int arity(Opcode op) {
  switch (op) {
    case Opcode::Add: case Opcode::Sub: case Opcode::Mul: case Opcode::Div: case Opcode::Mod:
    case Opcode::Lt: case Opcode::Gt: case Opcode::Eq: case Opcode::And: case Opcode::Or:
    case Opcode::Sstore: case Opcode::Mstore: case Opcode::Revert: case Opcode::MappingLoad:
    case Opcode::ArrayLoad: case Opcode::ArrayPush:
      return 2;
    case Opcode::IsZero: case Opcode::Not: case Opcode::Sload: case Opcode::Mload:
    case Opcode::ArrayLength: case Opcode::Pop:
      return 1;
    case Opcode::Caller: case Opcode::CallValue: case Opcode::Address: case Opcode::Timestamp:
      return 0;
    case Opcode::MappingLoad2: case Opcode::MappingStore: case Opcode::ArrayStore:
      return 3;
    case Opcode::MappingStore2:
      return 4;
  }
  return 0;
}

bool returns_value(Opcode op) {
  switch (op) {
    case Opcode::Sstore: case Opcode::Mstore: case Opcode::Revert: case Opcode::MappingStore:
    case Opcode::MappingStore2: case Opcode::ArrayStore: case Opcode::ArrayPush:
    case Opcode::Pop:
      return false;
    default:
      return true;
  }
}

std::string_view to_string(Opcode op) {
  switch (op) {
    case Opcode::Add: return "add";
    case Opcode::Sub: return "sub";
    case Opcode::Mul: return "mul";
    case Opcode::Div: return "div";
    case Opcode::Mod: return "mod";
    case Opcode::Lt: return "lt";
    case Opcode::Gt: return "gt";
    case Opcode::Eq: return "eq";
    case Opcode::IsZero: return "iszero";
    case Opcode::And: return "and";
    case Opcode::Or: return "or";
    case Opcode::Not: return "not";
    case Opcode::Sload: return "sload";
    case Opcode::Sstore: return "sstore";
    case Opcode::Mload: return "mload";
    case Opcode::Mstore: return "mstore";
    case Opcode::Caller: return "caller";
    case Opcode::CallValue: return "callvalue";
    case Opcode::Address: return "address";
    case Opcode::Timestamp: return "timestamp";
    case Opcode::Revert: return "revert";
    case Opcode::MappingLoad: case Opcode::MappingLoad2: return "mapping_load";
    case Opcode::MappingStore: case Opcode::MappingStore2: return "mapping_store";
    case Opcode::ArrayLoad: return "array_load";
    case Opcode::ArrayStore: return "array_store";
    case Opcode::ArrayLength: return "array_length";
    case Opcode::ArrayPush: return "array_push";
    case Opcode::Pop: return "pop";
  }
  return "?";
}

Word param(const EvmState& s, size_t i) {
  if (i >= s.calldata.size())
    throw Error(ErrorKind::IndexOutOfRange,
                "param " + std::to_string(i) + " of " + std::to_string(s.calldata.size()));
  return s.calldata[i];
}

Word mem_ceiling(const Word& x) {
  Word out;
  Word num = x + kByteSize;
  mpz_fdiv_q_ui(out.get_mpz_t(), num.get_mpz_t(), kByteSize);
  return out;
}

Word mem_round_up(const Word& max_index, const Word& i) {
  Word end_idx = i + kByteSize;
  Word c = mem_ceiling(end_idx);
  return max_index > c ? max_index : c;
}

std::vector<Word> k_zeroes(const Word& k) {
  std::vector<Word> out;
  if (sgn(k) < 0) return out;
  out.assign(k.get_ui() + 1, Word(0));
  return out;
}

std::vector<Word> pad_mem(const std::vector<Word>& data, const Word& cur, const Word& next) {
  std::vector<Word> out = data;
  auto zeros = k_zeroes(next - cur);
  out.insert(out.end(), zeros.begin(), zeros.end());
  return out;
}

namespace {

// Concrete runs cannot materialise astronomically large memories.
const Word kMaxConcreteWords = Word(1) << 22;

// pad_mem appends one word more than the size grows by; keep length(data) = size.
MemArray extend(const MemArray& mem, const Word& new_size) {
  if (new_size > kMaxConcreteWords)
    throw Error(ErrorKind::OutOfFuel, "memory expansion to " + new_size.get_str() + " words");
  MemArray out;
  out.data = pad_mem(mem.data, mem.size, new_size);
  out.data.resize(new_size.get_ui());
  out.size = new_size;
  out.peek = 0;
  return out;
}

}  // namespace

MemArray get_mem(const Word& byte_idx, const MemArray& mem) {
  if (sgn(byte_idx) < 0) throw Error(ErrorKind::NegativeAddress, byte_idx.get_str());
  if (byte_idx < mem.size * 32) {
    MemArray out = mem;
    Word idx = byte_idx / 32;
    out.peek = mem.data[idx.get_ui()];
    return out;
  }
  return extend(mem, mem_round_up(mem.size, byte_idx));
}

Word mem_cost(const MemArray& mem) {
  Word a = mem.size;
  Word sq = a * a;
  Word q;
  mpz_fdiv_q_ui(q.get_mpz_t(), sq.get_mpz_t(), 512);
  return 3 * a + q;
}

EvmState push(EvmState s, const Word& v) {
  s.stack.push_back(v);
  return s;
}

Word top(const EvmState& s) {
  if (s.stack.empty()) throw Error(ErrorKind::StackUnderflow, "top of empty stack");
  return s.stack.back();
}

EvmState pop(EvmState s) {
  if (s.stack.empty()) throw Error(ErrorKind::StackUnderflow, "pop on empty stack");
  s.stack.pop_back();
  return s;
}

Word wrap(const Word& v, unsigned bits) {
  Word out;
  mpz_fdiv_r_2exp(out.get_mpz_t(), v.get_mpz_t(), bits);
  return out;
}

EvmState step(Opcode op, EvmState s, const Config& cfg) {
  if (s.reverted) return s;
  size_t n = static_cast<size_t>(arity(op));
  if (s.stack.size() < n)
    throw Error(ErrorKind::StackUnderflow, std::string(to_string(op)) + " needs " + std::to_string(n) + " operands");
  std::vector<Word> a(n);
  for (size_t i = 0; i < n; ++i) {
    a[i] = std::move(s.stack.back());
    s.stack.pop_back();
  }
  auto arith = [&](Word v) {
    if (cfg.wrap_bits) v = wrap(v, *cfg.wrap_bits);
    s.stack.push_back(std::move(v));
  };
  auto boolean = [&](bool b) { s.stack.push_back(Word(b ? 1 : 0)); };
  s.pc += 1;
  switch (op) {
    case Opcode::Add: arith(a[0] + a[1]); break;
    case Opcode::Sub: arith(a[0] - a[1]); break;
    case Opcode::Mul: arith(a[0] * a[1]); break;
    case Opcode::Div: {
      Word q = 0;
      if (sgn(a[1]) != 0) mpz_tdiv_q(q.get_mpz_t(), a[0].get_mpz_t(), a[1].get_mpz_t());
      arith(q);
      break;
    }
    case Opcode::Mod: {
      Word r = 0;
      if (sgn(a[1]) != 0) mpz_tdiv_r(r.get_mpz_t(), a[0].get_mpz_t(), a[1].get_mpz_t());
      arith(r);
      break;
    }
    case Opcode::Lt: boolean(a[0] < a[1]); break;
    case Opcode::Gt: boolean(a[0] > a[1]); break;
    case Opcode::Eq: boolean(a[0] == a[1]); break;
    case Opcode::IsZero: boolean(sgn(a[0]) == 0); break;
    case Opcode::And: s.stack.push_back(a[0] & a[1]); break;
    case Opcode::Or: s.stack.push_back(a[0] | a[1]); break;
    case Opcode::Not: s.stack.push_back(pow2(cfg.wrap_bits.value_or(256)) - 1 - a[0]); break;
    case Opcode::Sload: s.stack.push_back(s.storage.load(a[0])); break;
    case Opcode::Sstore: s.storage.slots[a[0]] = a[1]; break;
    case Opcode::Mload: {
      MemArray before = s.memory;
      s.memory = get_mem(a[0], s.memory);
      s.gas -= mem_cost(s.memory) - mem_cost(before) + kGasVeryLow;
      s.stack.push_back(s.memory.peek);
      break;
    }
    case Opcode::Mstore: {
      MemArray before = s.memory;
      MemArray m = get_mem(a[0], s.memory);
      Word idx = a[0] / 32;
      m.data[idx.get_ui()] = a[1];
      m.peek = before.peek;
      s.memory = std::move(m);
      s.gas -= mem_cost(s.memory) - mem_cost(before) + kGasVeryLow;
      break;
    }
    case Opcode::Caller: s.stack.push_back(s.message.sender); break;
    case Opcode::CallValue: s.stack.push_back(s.message.value); break;
    case Opcode::Address: s.stack.push_back(s.message.recipient); break;
    case Opcode::Timestamp:
      s.stack.push_back(s.timestamp);
      s.timestamp_tainted = true;
      break;
    case Opcode::Revert: s.reverted = true; break;
    case Opcode::MappingLoad: s.stack.push_back(s.storage.map_get(a[0], {a[1]})); break;
    case Opcode::MappingLoad2: s.stack.push_back(s.storage.map_get(a[0], {a[1], a[2]})); break;
    case Opcode::MappingStore: s.storage.maps[a[0]][{a[1]}] = a[2]; break;
    case Opcode::MappingStore2: s.storage.maps[a[0]][{a[1], a[2]}] = a[3]; break;
    case Opcode::ArrayLoad: s.stack.push_back(s.storage.map_get(a[0], {a[1]})); break;
    case Opcode::ArrayStore: s.storage.maps[a[0]][{a[1]}] = a[2]; break;
    case Opcode::ArrayLength: s.stack.push_back(s.storage.length(a[0])); break;
    case Opcode::ArrayPush: {
      Word len = s.storage.length(a[0]);
      s.storage.maps[a[0]][{len}] = a[1];
      s.storage.lengths[a[0]] = len + 1;
      break;
    }
    case Opcode::Pop: break;
  }
  return s;
}

}  // namespace yulverify::evm
