#pragma once

// Bit-class combinatorics over qubit indices viewed as n-bit integers.
//
// Bit 0 is the least significant bit. Class (i,b) holds every index whose
// bit i equals b; class [i,=] / [i,!=] holds every index whose bits i-1 and i
// are equal / unequal.

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace iontest {

using Qubit = std::uint32_t;

/// Unordered pair of distinct qubits, stored with a < b.
struct Coupling {
  Qubit a = 0;
  Qubit b = 1;

  Coupling() = default;
  Coupling(Qubit x, Qubit y);

  bool contains(Qubit q) const noexcept { return q == a || q == b; }
  auto operator<=>(const Coupling&) const = default;
};

std::string to_string(const Coupling& c);

struct BitClass {
  int bit = 0;
  int value = 0;
  auto operator<=>(const BitClass&) const = default;
};

enum class Relation { Equal, Unequal };

struct EqClass {
  int bit = 1;
  Relation rel = Relation::Equal;
  auto operator<=>(const EqClass&) const = default;
};

using ClassLabel = std::variant<BitClass, EqClass>;

std::string to_string(const BitClass& label);
std::string to_string(const EqClass& label);
std::string to_string(const ClassLabel& label);

struct Syndrome {
  std::vector<BitClass> failing;
  std::map<int, int> fixedBits;
  int length = 0;
  bool conflict = false;
};

/// Builds fixedBits/length/conflict from a list of failing (i,b) tests.
Syndrome make_syndrome(std::vector<BitClass> failing);

/// XOR of consecutive bits of one endpoint of a bit-complementary pair.
struct PairSignature {
  std::uint32_t xorBits = 0;
  int width = 0;
  auto operator<=>(const PairSignature&) const = default;
};

struct Padding {
  int n = 0;
  std::vector<Qubit> virtualQubits;
};

Padding pad_to_power_of_two(int qubits);

inline int bit_of(Qubit x, int i) noexcept { return static_cast<int>((x >> i) & 1U); }

/// Members of a class in ascending order. When `limit` is given, indices
/// >= limit (padding qubits) are dropped.
std::vector<Qubit> class_members(int n, const ClassLabel& label,
                                 std::optional<Qubit> limit = std::nullopt);

bool is_complementary(int n, const Coupling& c) noexcept;

/// All (i,b) classes that contain both endpoints, ordered by bit.
std::vector<BitClass> classes_containing_pair(int n, const Coupling& c);

PairSignature pair_signature(int n, const Coupling& c);

/// Every pair consistent with a non-conflicting syndrome: endpoints agree on
/// the fixed bits and are complementary on the rest. Size 2^(n-L-1).
std::vector<Coupling> candidates_from_syndrome(int n, const Syndrome& s);

/// Restricted [i,=] class over two consecutive free bits.
struct RestrictedClass {
  int lowBit = 0;
  int highBit = 0;
  std::vector<Qubit> members;
};

std::string to_string(const RestrictedClass& rc);

/// One set per consecutive pair of free bits (k-1 sets for k free bits). Set j
/// holds the integers whose bits freeBits[j-1] and freeBits[j] are equal and
/// which agree with `fixedBits`. Throws NoTestNeeded for k < 2.
std::vector<RestrictedClass> restricted_eq_classes(int n, const std::vector<int>& freeBits,
                                                   const std::map<int, int>& fixedBits = {},
                                                   std::optional<Qubit> limit = std::nullopt);

/// Membership in [i,=] via the reflected Gray code of x.
bool gray_code_check(int n, int i, Qubit x);

/// Bits not fixed by the syndrome, ascending.
std::vector<int> free_bits(int n, const Syndrome& s);

}  // namespace iontest
