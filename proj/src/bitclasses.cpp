#include "iontest/bitclasses.hpp"

#include <algorithm>
#include <sstream>

#include "iontest/errors.hpp"

namespace iontest {

namespace {

constexpr int kMaxBits = 30;

void check_width(int n) {
  if (n < 1 || n > kMaxBits) {
    throw InvalidArgument("bit width out of range: " + std::to_string(n));
  }
}

Qubit fixed_pattern(const std::map<int, int>& fixedBits) {
  Qubit x = 0;
  for (const auto& [bit, value] : fixedBits) {
    if (value) x |= Qubit{1} << bit;
  }
  return x;
}

bool agrees_with(Qubit x, const std::map<int, int>& fixedBits) {
  return std::all_of(fixedBits.begin(), fixedBits.end(),
                     [x](const auto& kv) { return bit_of(x, kv.first) == kv.second; });
}

}  // namespace

Coupling::Coupling(Qubit x, Qubit y) : a(std::min(x, y)), b(std::max(x, y)) {
  if (x == y) {
    throw InvalidArgument("coupling endpoints must differ: " + std::to_string(x));
  }
}

std::string to_string(const Coupling& c) {
  return "{" + std::to_string(c.a) + "," + std::to_string(c.b) + "}";
}

std::string to_string(const BitClass& label) {
  return "(" + std::to_string(label.bit) + "," + std::to_string(label.value) + ")";
}

std::string to_string(const EqClass& label) {
  return "[" + std::to_string(label.bit) + (label.rel == Relation::Equal ? ",=]" : ",!=]");
}

std::string to_string(const ClassLabel& label) {
  return std::visit([](const auto& l) { return to_string(l); }, label);
}

std::string to_string(const RestrictedClass& rc) {
  return "[" + std::to_string(rc.lowBit) + ":" + std::to_string(rc.highBit) + ",=]";
}

Syndrome make_syndrome(std::vector<BitClass> failing) {
  std::sort(failing.begin(), failing.end());
  failing.erase(std::unique(failing.begin(), failing.end()), failing.end());
  Syndrome s;
  for (const auto& label : failing) {
    auto [it, inserted] = s.fixedBits.emplace(label.bit, label.value);
    if (!inserted && it->second != label.value) s.conflict = true;
  }
  s.failing = std::move(failing);
  s.length = static_cast<int>(s.conflict ? s.failing.size() : s.fixedBits.size());
  return s;
}

Padding pad_to_power_of_two(int qubits) {
  if (qubits < 2) {
    throw InvalidArgument("device needs at least two qubits, got " + std::to_string(qubits));
  }
  Padding p;
  while ((1LL << p.n) < qubits) ++p.n;
  if (p.n > kMaxBits) throw InvalidArgument("device too large");
  for (Qubit q = static_cast<Qubit>(qubits); q < (Qubit{1} << p.n); ++q) {
    p.virtualQubits.push_back(q);
  }
  return p;
}

std::vector<Qubit> class_members(int n, const ClassLabel& label, std::optional<Qubit> limit) {
  check_width(n);
  const Qubit size = Qubit{1} << n;
  const Qubit end = limit ? std::min(*limit, size) : size;
  std::vector<Qubit> out;
  if (const auto* bc = std::get_if<BitClass>(&label)) {
    if (bc->bit < 0 || bc->bit >= n || (bc->value != 0 && bc->value != 1)) {
      throw InvalidArgument("invalid bit class " + to_string(*bc) + " for n=" + std::to_string(n));
    }
    for (Qubit x = 0; x < end; ++x) {
      if (bit_of(x, bc->bit) == bc->value) out.push_back(x);
    }
  } else {
    const auto& eq = std::get<EqClass>(label);
    if (eq.bit <= 0 || eq.bit >= n) {
      throw InvalidArgument("invalid eq class " + to_string(eq) + " for n=" + std::to_string(n));
    }
    const bool wantEqual = eq.rel == Relation::Equal;
    for (Qubit x = 0; x < end; ++x) {
      if ((bit_of(x, eq.bit - 1) == bit_of(x, eq.bit)) == wantEqual) out.push_back(x);
    }
  }
  return out;
}

bool is_complementary(int n, const Coupling& c) noexcept {
  const Qubit mask = (Qubit{1} << n) - 1;
  return (c.a ^ c.b) == mask;
}

std::vector<BitClass> classes_containing_pair(int n, const Coupling& c) {
  check_width(n);
  std::vector<BitClass> out;
  for (int i = 0; i < n; ++i) {
    if (bit_of(c.a, i) == bit_of(c.b, i)) out.push_back({i, bit_of(c.a, i)});
  }
  return out;
}

PairSignature pair_signature(int n, const Coupling& c) {
  check_width(n);
  if (!is_complementary(n, c)) {
    throw InvalidArgument("pair " + to_string(c) + " is not bit-complementary for n=" +
                          std::to_string(n));
  }
  PairSignature sig{0, n - 1};
  for (int j = 0; j + 1 < n; ++j) {
    if (bit_of(c.a, j) != bit_of(c.a, j + 1)) sig.xorBits |= 1U << j;
  }
  return sig;
}

std::vector<int> free_bits(int n, const Syndrome& s) {
  std::vector<int> out;
  for (int i = 0; i < n; ++i) {
    if (!s.fixedBits.contains(i)) out.push_back(i);
  }
  return out;
}

std::vector<Coupling> candidates_from_syndrome(int n, const Syndrome& s) {
  check_width(n);
  if (s.conflict) {
    throw MultiFaultError("syndrome has complementary failing classes; more than one fault");
  }
  const auto freeList = free_bits(n, s);
  if (freeList.empty()) {
    throw InvalidArgument("syndrome fixes every bit; no pair can produce it");
  }
  const Qubit base = fixed_pattern(s.fixedBits);
  Qubit freeMask = 0;
  for (int b : freeList) freeMask |= Qubit{1} << b;

  std::vector<Coupling> out;
  const int k = static_cast<int>(freeList.size());
  // Enumerate assignments of the free bits with the highest free bit at 0.
  for (Qubit code = 0; code < (Qubit{1} << (k - 1)); ++code) {
    Qubit x = base;
    for (int j = 0; j + 1 < k; ++j) {
      if ((code >> j) & 1U) x |= Qubit{1} << freeList[j];
    }
    out.emplace_back(x, x ^ freeMask);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<RestrictedClass> restricted_eq_classes(int n, const std::vector<int>& freeBits,
                                                   const std::map<int, int>& fixedBits,
                                                   std::optional<Qubit> limit) {
  check_width(n);
  if (freeBits.size() < 2) {
    throw NoTestNeeded("fewer than two free bits; the candidate is already unique");
  }
  for (int b : freeBits) {
    if (b < 0 || b >= n || fixedBits.contains(b)) {
      throw InvalidArgument("invalid free bit " + std::to_string(b));
    }
  }
  const Qubit size = Qubit{1} << n;
  const Qubit end = limit ? std::min(*limit, size) : size;
  std::vector<RestrictedClass> out;
  for (std::size_t j = 1; j < freeBits.size(); ++j) {
    RestrictedClass rc{freeBits[j - 1], freeBits[j], {}};
    for (Qubit x = 0; x < end; ++x) {
      if (agrees_with(x, fixedBits) && bit_of(x, rc.lowBit) == bit_of(x, rc.highBit)) {
        rc.members.push_back(x);
      }
    }
    out.push_back(std::move(rc));
  }
  return out;
}

bool gray_code_check(int n, int i, Qubit x) {
  if (i <= 0 || i >= n) {
    throw InvalidArgument("gray_code_check needs 0 < i < n");
  }
  const Qubit gray = x ^ (x >> 1);
  return bit_of(gray, i - 1) == 0;
}

}  // namespace iontest
