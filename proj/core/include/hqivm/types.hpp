#pragma once

#include <bit>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <absl/container/inlined_vector.h>
#include <absl/types/span.h>

namespace hqivm {

using Value = std::uint32_t;
using Mult = std::int64_t;
using VarId = int;

// Bit i set means variable (or atom) i is a member.
using VarSet = std::uint64_t;
using AtomSet = std::uint64_t;

using Tuple = absl::InlinedVector<Value, 4>;
using TupleView = absl::Span<const Value>;

inline constexpr int kMaxVars = 64;
inline constexpr int kMaxAtoms = 64;

inline constexpr VarSet bit(int i) { return VarSet{1} << i; }
inline constexpr bool has(VarSet s, int i) { return (s >> i) & 1U; }
inline constexpr bool subset(VarSet a, VarSet b) { return (a & ~b) == 0; }
inline int popcount(VarSet s) { return std::popcount(s); }

inline std::vector<int> members(VarSet s) {
  std::vector<int> out;
  while (s) {
    int i = std::countr_zero(s);
    out.push_back(i);
    s &= s - 1;
  }
  return out;
}

inline VarSet mask_of(const std::vector<int>& ids) {
  VarSet m = 0;
  for (int i : ids) m |= bit(i);
  return m;
}

// A database instance: symbol -> (tuple in symbol column order -> multiplicity).
using Database = std::map<std::string, std::map<std::vector<Value>, Mult>>;

}  // namespace hqivm
