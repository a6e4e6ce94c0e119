#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "dspkit/error.hpp"

namespace dspkit {

/// Block sizes attached to one eigenvalue, stored weakly decreasing.
class Partition {
 public:
  Partition() = default;

  explicit Partition(std::vector<int> parts) : parts_(std::move(parts)) {
    if (parts_.empty()) throw Error(ErrorCode::invalid_input, "empty partition");
    for (int b : parts_)
      if (b <= 0) throw Error(ErrorCode::invalid_input, "partition parts must be positive");
    std::sort(parts_.begin(), parts_.end(), std::greater<>());
  }

  Partition(std::initializer_list<int> parts) : Partition(std::vector<int>(parts)) {}

  static Partition ones(int m) { return Partition(std::vector<int>(static_cast<std::size_t>(m), 1)); }

  std::span<const int> parts() const { return parts_; }
  int operator[](std::size_t i) const { return parts_[i]; }

  /// Sum of the parts (algebraic multiplicity of the eigenvalue).
  int size() const { return std::accumulate(parts_.begin(), parts_.end(), 0); }

  /// Number of parts (Jordan blocks).
  int length() const { return static_cast<int>(parts_.size()); }

  int largest() const { return parts_.front(); }

  bool is_all_ones() const { return parts_.front() == 1; }

  Partition dual() const {
    std::vector<int> out(static_cast<std::size_t>(largest()), 0);
    for (int b : parts_)
      for (int k = 0; k < b; ++k) ++out[static_cast<std::size_t>(k)];
    return Partition(std::move(out));
  }

  /// rank of N^j for a nilpotent N with this block structure.
  int power_rank(int j) const {
    int r = 0;
    for (int b : parts_) r += std::max(b - j, 0);
    return r;
  }

  friend auto operator<=>(const Partition&, const Partition&) = default;

 private:
  std::vector<int> parts_;
};

/// A Jordan normal form: one partition per (anonymous) eigenvalue slot.
class Jnf {
 public:
  Jnf() = default;

  explicit Jnf(std::vector<Partition> slots) : slots_(std::move(slots)) {
    if (slots_.empty()) throw Error(ErrorCode::invalid_input, "a JNF needs at least one eigenvalue slot");
  }

  Jnf(std::initializer_list<Partition> slots) : Jnf(std::vector<Partition>(slots)) {}

  static Jnf diagonal(std::span<const int> multiplicities) {
    std::vector<Partition> slots;
    for (int m : multiplicities) slots.push_back(Partition::ones(m));
    return Jnf(std::move(slots));
  }
  static Jnf diagonal(std::initializer_list<int> multiplicities) {
    return diagonal(std::span<const int>(multiplicities.begin(), multiplicities.size()));
  }

  /// n one-dimensional slots: the distinct-eigenvalue JNF.
  static Jnf distinct(int n) { return diagonal(std::vector<int>(static_cast<std::size_t>(n), 1)); }

  const std::vector<Partition>& slots() const { return slots_; }
  const Partition& slot(std::size_t l) const { return slots_[l]; }
  std::size_t slot_count() const { return slots_.size(); }

  int size() const {
    int n = 0;
    for (const auto& s : slots_) n += s.size();
    return n;
  }

  std::vector<int> multiplicities() const {
    std::vector<int> m;
    for (const auto& s : slots_) m.push_back(s.size());
    return m;
  }

  int max_block_count() const {
    int best = 0;
    for (const auto& s : slots_) best = std::max(best, s.length());
    return best;
  }

  bool is_diagonal() const {
    return std::all_of(slots_.begin(), slots_.end(), [](const Partition& s) { return s.is_all_ones(); });
  }

  bool is_distinct() const {
    return std::all_of(slots_.begin(), slots_.end(), [](const Partition& s) { return s.size() == 1; });
  }

  /// Slots sorted decreasingly; equal JNFs have equal canonical forms.
  Jnf canonical() const {
    Jnf out = *this;
    std::sort(out.slots_.begin(), out.slots_.end(), std::greater<>());
    return out;
  }

  friend bool operator==(const Jnf& a, const Jnf& b) { return a.canonical().slots_ == b.canonical().slots_; }
  friend auto operator<=>(const Jnf& a, const Jnf& b) { return a.canonical().slots_ <=> b.canonical().slots_; }

  std::string to_string() const {
    std::ostringstream os;
    os << '{';
    for (std::size_t l = 0; l < slots_.size(); ++l) {
      if (l) os << ',';
      os << '(';
      for (int i = 0; i < slots_[l].length(); ++i) os << (i ? "," : "") << slots_[l][static_cast<std::size_t>(i)];
      os << ')';
    }
    os << '}';
    return os.str();
  }

 private:
  std::vector<Partition> slots_;
};

/// p+1 JNFs of a common size n, p >= 1.
class JnfTuple {
 public:
  JnfTuple() = default;

  explicit JnfTuple(std::vector<Jnf> entries) : entries_(std::move(entries)) {
    if (entries_.size() < 2) throw Error(ErrorCode::invalid_input, "a tuple needs at least two classes");
    const int n = entries_.front().size();
    for (const auto& e : entries_)
      if (e.size() != n) throw Error(ErrorCode::invalid_input, "all classes of a tuple must have the same size");
  }

  JnfTuple(std::initializer_list<Jnf> entries) : JnfTuple(std::vector<Jnf>(entries)) {}

  const std::vector<Jnf>& entries() const { return entries_; }
  const Jnf& operator[](std::size_t j) const { return entries_[j]; }
  std::size_t count() const { return entries_.size(); }
  int p() const { return static_cast<int>(entries_.size()) - 1; }
  int n() const { return entries_.front().size(); }

  /// Entries canonicalized and sorted; for order-insensitive comparisons.
  JnfTuple canonical() const {
    JnfTuple out = *this;
    for (auto& e : out.entries_) e = e.canonical();
    std::sort(out.entries_.begin(), out.entries_.end());
    return out;
  }

  friend bool operator==(const JnfTuple& a, const JnfTuple& b) {
    if (a.entries_.size() != b.entries_.size()) return false;
    for (std::size_t j = 0; j < a.entries_.size(); ++j)
      if (!(a.entries_[j] == b.entries_[j])) return false;
    return true;
  }

  std::string to_string() const {
    std::string s = "[";
    for (std::size_t j = 0; j < entries_.size(); ++j) s += (j ? " " : "") + entries_[j].to_string();
    return s + "]";
  }

 private:
  std::vector<Jnf> entries_;
};

// -- invariants ---------------------------------------------------------------

/// Centralizer dimension: sum over slots of sum_i (2i-1) b_i.
inline int z_of(const Jnf& jnf) {
  int z = 0;
  for (const auto& s : jnf.slots())
    for (int i = 0; i < s.length(); ++i) z += (2 * i + 1) * s[static_cast<std::size_t>(i)];
  return z;
}

/// Dimension of the conjugacy class, n^2 - z.
inline int d_of(const Jnf& jnf) {
  const int n = jnf.size();
  return n * n - z_of(jnf);
}

/// n minus the largest number of blocks sharing one eigenvalue.
inline int r_of(const Jnf& jnf) { return jnf.size() - jnf.max_block_count(); }

/// Index of rigidity 2n^2 - sum d_j.
inline int kappa_of(const JnfTuple& tuple) {
  const int n = tuple.n();
  int sum_d = 0;
  for (const auto& e : tuple.entries()) sum_d += d_of(e);
  return 2 * n * n - sum_d;
}

struct InvariantSummary {
  std::vector<int> r;
  std::vector<int> d;
  std::vector<int> z;
  int kappa = 0;
};

inline InvariantSummary summarize(const JnfTuple& tuple) {
  InvariantSummary s;
  for (const auto& e : tuple.entries()) {
    s.r.push_back(r_of(e));
    s.d.push_back(d_of(e));
    s.z.push_back(z_of(e));
  }
  s.kappa = kappa_of(tuple);
  return s;
}

/// Diagonal JNF whose multiplicities are the union of the dual partitions.
inline Jnf corresponding_diagonal(const Jnf& jnf) {
  std::vector<int> mult;
  for (const auto& s : jnf.slots()) {
    const Partition dual = s.dual();
    for (int m : dual.parts()) mult.push_back(m);
  }
  std::sort(mult.begin(), mult.end(), std::greater<>());
  return Jnf::diagonal(mult);
}

// -- closure order ------------------------------------------------------------

enum class Subordination { subordinate, not_subordinate, not_comparable };

constexpr std::string_view to_string(Subordination s) {
  switch (s) {
    case Subordination::subordinate: return "subordinate";
    case Subordination::not_subordinate: return "not_subordinate";
    case Subordination::not_comparable: return "not_comparable";
  }
  return "unknown";
}

/// Is the class (lower, lower_labels) in the closure of (upper, upper_labels)?
/// Labels name the eigenvalue of each slot and must be pairwise distinct within
/// one class. Since the ranks of all powers determine a nilpotent orbit, equal
/// ranks everywhere means equal classes, so the strictness clause of the closure
/// order never has to be tested separately.
template <class Label>
Subordination is_subordinate(const Jnf& lower, std::span<const Label> lower_labels, const Jnf& upper,
                             std::span<const Label> upper_labels) {
  if (lower_labels.size() != lower.slot_count() || upper_labels.size() != upper.slot_count())
    throw Error(ErrorCode::invalid_input, "one label per eigenvalue slot is required");
  if (lower.slot_count() != upper.slot_count() || lower.size() != upper.size())
    return Subordination::not_comparable;

  for (std::size_t a = 0; a < lower.slot_count(); ++a) {
    std::size_t match = upper.slot_count();
    for (std::size_t b = 0; b < upper.slot_count(); ++b)
      if (upper_labels[b] == lower_labels[a]) match = b;
    if (match == upper.slot_count()) return Subordination::not_comparable;
    const Partition& lo = lower.slot(a);
    const Partition& up = upper.slot(match);
    if (lo.size() != up.size()) return Subordination::not_comparable;
    // The n - m_lambda summand is common to both sides and cancels.
    const int top = std::max(lo.largest(), up.largest());
    for (int j = 1; j <= top; ++j)
      if (up.power_rank(j) < lo.power_rank(j)) return Subordination::not_subordinate;
  }
  return Subordination::subordinate;
}

// -- enumeration --------------------------------------------------------------

/// All partitions of n, lexicographically decreasing.
inline std::vector<Partition> all_partitions(int n) {
  std::vector<Partition> out;
  std::vector<int> cur;
  std::function<void(int, int)> rec = [&](int rest, int cap) {
    if (rest == 0) {
      out.emplace_back(cur);
      return;
    }
    for (int b = std::min(rest, cap); b >= 1; --b) {
      cur.push_back(b);
      rec(rest - b, b);
      cur.pop_back();
    }
  };
  if (n > 0) rec(n, n);
  return out;
}

/// All JNFs of size n (multisets of partitions with total size n), canonical.
inline std::vector<Jnf> all_jnfs(int n) {
  std::vector<Partition> pool;
  for (int m = n; m >= 1; --m)
    for (auto& p : all_partitions(m)) pool.push_back(std::move(p));
  std::vector<Jnf> out;
  std::vector<Partition> cur;
  std::function<void(std::size_t, int)> rec = [&](std::size_t from, int rest) {
    if (rest == 0) {
      out.push_back(Jnf(cur).canonical());
      return;
    }
    for (std::size_t i = from; i < pool.size(); ++i) {
      if (pool[i].size() > rest) continue;
      cur.push_back(pool[i]);
      rec(i, rest - pool[i].size());
      cur.pop_back();
    }
  };
  rec(0, n);
  return out;
}

/// All diagonal JNFs of size n (one per partition of n).
inline std::vector<Jnf> all_diagonal_jnfs(int n) {
  std::vector<Jnf> out;
  for (const auto& p : all_partitions(n)) out.push_back(Jnf::diagonal(p.parts()));
  return out;
}

/// Calls visit(indices) for every multiset of `count` indices into [0, pool_size),
/// given as a non-decreasing index vector.
template <class Visit>
void for_each_multiset(std::size_t pool_size, std::size_t count, Visit&& visit) {
  std::vector<std::size_t> idx(count, 0);
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t pos, std::size_t from) {
    if (pos == count) {
      visit(std::span<const std::size_t>(idx));
      return;
    }
    for (std::size_t i = from; i < pool_size; ++i) {
      idx[pos] = i;
      rec(pos + 1, i);
    }
  };
  if (count > 0) rec(0, 0);
}

}  // namespace dspkit
