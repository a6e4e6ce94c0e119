#pragma once

#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "dspkit/error.hpp"
#include "dspkit/jnf.hpp"
#include "dspkit/scalar.hpp"

namespace dspkit {

/// A JNF with one exact eigenvalue per slot.
template <EigenScalar S>
class ClassSpec {
 public:
  using scalar_type = S;
  static constexpr Mode mode = scalar_traits<S>::mode;

  ClassSpec() = default;
  ClassSpec(Jnf jnf, std::vector<S> eigenvalues) : jnf_(std::move(jnf)), eigenvalues_(std::move(eigenvalues)) {
    if (eigenvalues_.size() != jnf_.slot_count())
      throw Error(ErrorCode::invalid_input, "one eigenvalue per slot is required");
    for (std::size_t a = 0; a < eigenvalues_.size(); ++a)
      for (std::size_t b = a + 1; b < eigenvalues_.size(); ++b)
        if (eigenvalues_[a] == eigenvalues_[b])
          throw Error(ErrorCode::invalid_input, "eigenvalues of one class must be pairwise distinct");
  }

  const Jnf& jnf() const { return jnf_; }
  const std::vector<S>& eigenvalues() const { return eigenvalues_; }
  const S& eigenvalue(std::size_t l) const { return eigenvalues_[l]; }
  int size() const { return jnf_.size(); }
  int multiplicity(std::size_t l) const { return jnf_.slot(l).size(); }

  friend bool operator==(const ClassSpec&, const ClassSpec&) = default;

 private:
  Jnf jnf_;
  std::vector<S> eigenvalues_;
};

using AdditiveSpec = ClassSpec<AdditiveScalar>;
using MultiplicativeSpec = ClassSpec<MultiplicativeScalar>;

template <EigenScalar S>
JnfTuple jnf_tuple(std::span<const ClassSpec<S>> specs) {
  std::vector<Jnf> entries;
  for (const auto& s : specs) entries.push_back(s.jnf());
  return JnfTuple(std::move(entries));
}

template <EigenScalar S>
Subordination is_subordinate(const ClassSpec<S>& lower, const ClassSpec<S>& upper) {
  return is_subordinate<S>(lower.jnf(), std::span<const S>(lower.eigenvalues()), upper.jnf(),
                           std::span<const S>(upper.eigenvalues()));
}

namespace detail {

template <EigenScalar S>
int common_size(std::span<const ClassSpec<S>> specs) {
  if (specs.size() < 2) throw Error(ErrorCode::invalid_input, "at least two classes are required");
  const int n = specs.front().size();
  for (const auto& s : specs)
    if (s.size() != n) throw Error(ErrorCode::invalid_input, "all classes must have the same size");
  return n;
}

/// Product (or sum) of the eigenvalues of one class, multiplicities scaled by 1/divisor.
template <EigenScalar S>
S class_total(const ClassSpec<S>& spec, int divisor = 1) {
  using T = scalar_traits<S>;
  S acc = T::identity();
  for (std::size_t l = 0; l < spec.jnf().slot_count(); ++l)
    acc = T::combine(acc, T::power(spec.eigenvalue(l), spec.multiplicity(l) / divisor));
  return acc;
}

}  // namespace detail

/// The global constraint: product of all eigenvalues is 1, resp. their sum is 0.
template <EigenScalar S>
bool check_evs(std::span<const ClassSpec<S>> specs) {
  using T = scalar_traits<S>;
  detail::common_size(specs);
  S acc = T::identity();
  for (const auto& s : specs) acc = T::combine(acc, detail::class_total(s));
  return acc == T::identity();
}

/// Equal-cardinality selections (one count per slot of every entry) whose
/// combined eigenvalues give the identity.
struct RelationWitness {
  int k = 0;
  std::vector<std::vector<int>> counts;  // counts[j][l]: copies of slot l of entry j
};

struct RelationOptions {
  /// Ignore relations whose selection is proportional to the multiplicities
  /// (the family t * m / d generated by the gcd-reduced relation).
  bool exclude_reduced_family = false;
  int max_size = 16;
  std::size_t state_ceiling = 2'000'000;
};

namespace detail {

inline int multiplicity_gcd(const std::vector<std::vector<int>>& mult) {
  int d = 0;
  for (const auto& m : mult)
    for (int x : m) d = std::gcd(d, x);
  return d;
}

template <EigenScalar S>
std::vector<std::vector<int>> multiplicities(std::span<const ClassSpec<S>> specs) {
  std::vector<std::vector<int>> out;
  for (const auto& s : specs) out.push_back(s.jnf().multiplicities());
  return out;
}

/// All achievable values of one entry at cardinality k, with up to two distinct
/// count vectors per value (enough to know whether a non-family selection exists).
template <EigenScalar S>
class EntryTable {
 public:
  using Witnesses = std::vector<std::vector<int>>;

  EntryTable(const ClassSpec<S>& spec, int max_k, std::size_t& budget) {
    using T = scalar_traits<S>;
    // states[k] : value -> witnesses
    std::vector<std::map<S, Witnesses>> states(static_cast<std::size_t>(max_k) + 1);
    states[0][T::identity()] = {std::vector<int>{}};
    for (std::size_t l = 0; l < spec.jnf().slot_count(); ++l) {
      const int m = spec.multiplicity(l);
      std::vector<std::map<S, Witnesses>> next(states.size());
      for (int k = 0; k <= max_k; ++k)
        for (const auto& [value, wits] : states[static_cast<std::size_t>(k)]) {
          S v = value;
          for (int c = 0; c <= m && k + c <= max_k; ++c) {
            auto& slot = next[static_cast<std::size_t>(k + c)][v];
            for (const auto& w : wits) {
              if (slot.size() >= 2) break;
              auto w2 = w;
              w2.push_back(c);
              slot.push_back(std::move(w2));
            }
            v = T::combine(v, spec.eigenvalue(l));
          }
        }
      std::size_t total = 0;
      for (const auto& s : next) total += s.size();
      if (total > budget) throw Error(ErrorCode::resource_exceeded, "relation search exceeds its state budget");
      states = std::move(next);
    }
    by_k_ = std::move(states);
    for (const auto& s : by_k_) budget -= std::min(budget, s.size());
  }

  const std::map<S, Witnesses>& at(int k) const { return by_k_[static_cast<std::size_t>(k)]; }

 private:
  std::vector<std::map<S, Witnesses>> by_k_;
};

}  // namespace detail

/// Searches for a non-genericity relation; none means the eigenvalues are generic.
template <EigenScalar S>
std::optional<RelationWitness> find_relation(std::span<const ClassSpec<S>> specs, const RelationOptions& opt = {}) {
  using T = scalar_traits<S>;
  const int n = detail::common_size(specs);
  if (n > opt.max_size) throw Error(ErrorCode::resource_exceeded, "relation search is limited to small sizes");
  if (n <= 1) return std::nullopt;

  const auto mult = detail::multiplicities(specs);
  const int d = detail::multiplicity_gcd(mult);
  std::size_t budget = opt.state_ceiling;
  std::vector<detail::EntryTable<S>> tables;
  for (const auto& s : specs) tables.emplace_back(s, n - 1, budget);

  // Partial selection over a range of entries, keyed by (value, deviates from family).
  using Key = std::pair<S, bool>;
  using Partial = std::map<Key, std::vector<std::vector<int>>>;

  for (int k = 1; k < n; ++k) {
    // family counts at this k: t * m / d with t = k d / n
    std::optional<int> t;
    if ((k * d) % n == 0) t = k * d / n;
    auto is_family = [&](std::size_t j, const std::vector<int>& counts) {
      if (!t) return false;
      for (std::size_t l = 0; l < counts.size(); ++l)
        if (counts[l] != *t * mult[j][l] / d) return false;
      return true;
    };

    auto fold = [&](std::size_t from, std::size_t to) {
      Partial acc;
      acc[{T::identity(), false}] = {};
      for (std::size_t j = from; j < to; ++j) {
        Partial next;
        for (const auto& [key, sel] : acc)
          for (const auto& [value, wits] : tables[j].at(k))
            for (const auto& w : wits) {
              Key nk{T::combine(key.first, value), key.second || !is_family(j, w)};
              if (next.count(nk)) continue;
              auto s2 = sel;
              s2.push_back(w);
              next.emplace(std::move(nk), std::move(s2));
            }
        if (next.size() > opt.state_ceiling)
          throw Error(ErrorCode::resource_exceeded, "relation search exceeds its state budget");
        acc = std::move(next);
      }
      return acc;
    };

    const std::size_t half = specs.size() / 2;
    const Partial left = fold(0, half);
    const Partial right = fold(half, specs.size());
    for (const auto& [key, sel] : left)
      for (bool dev : {false, true}) {
        if (opt.exclude_reduced_family && !key.second && !dev) continue;
        auto it = right.find({T::inverse(key.first), dev});
        if (it == right.end()) continue;
        RelationWitness w{k, sel};
        w.counts.insert(w.counts.end(), it->second.begin(), it->second.end());
        return w;
      }
  }
  return std::nullopt;
}

template <EigenScalar S>
bool is_generic(std::span<const ClassSpec<S>> specs, const RelationOptions& opt = {}) {
  return !find_relation(specs, opt).has_value();
}

/// Whether exp(2 pi i arg) with modulus 1 is a primitive d-th root of unity.
inline bool is_primitive_root(const MultiplicativeScalar& x, int d) {
  if (x.modulus != 1) return false;
  const Rational scaled = x.arg * d;
  if (boost::multiprecision::denominator(scaled) != 1) return false;
  const Integer k = boost::multiprecision::numerator(scaled);
  return boost::multiprecision::gcd(k, Integer(d)) == 1;
}

template <EigenScalar S>
struct GcdReduction {
  int d = 1;
  std::optional<S> xi;              // multiplicative only, d > 1
  std::optional<bool> xi_primitive;  // multiplicative only, d > 1
};

/// Combined eigenvalues of the whole tuple with every multiplicity divided by `divisor`.
template <EigenScalar S>
S reduced_total(std::span<const ClassSpec<S>> specs, int divisor) {
  using T = scalar_traits<S>;
  for (const auto& s : specs)
    for (int m : s.jnf().multiplicities())
      if (m % divisor != 0) throw Error(ErrorCode::invalid_input, "divisor does not divide every multiplicity");
  S acc = T::identity();
  for (const auto& s : specs) acc = T::combine(acc, detail::class_total(s, divisor));
  return acc;
}

template <EigenScalar S>
GcdReduction<S> gcd_reduction(std::span<const ClassSpec<S>> specs) {
  detail::common_size(specs);
  GcdReduction<S> out;
  out.d = detail::multiplicity_gcd(detail::multiplicities(specs));
  if constexpr (scalar_traits<S>::mode == Mode::multiplicative) {
    if (out.d > 1) {
      out.xi = reduced_total(specs, out.d);
      out.xi_primitive = is_primitive_root(*out.xi, out.d);
    }
  }
  return out;
}

struct GeneralizedBeta {
  int min_rank_sum = 0;
  int bound = 0;  // 2n
  bool holds = false;
};

/// min over b_1 ... b_{p+1} = 1 (resp. b_1 + ... + b_{p+1} = 0) of
/// sum_j rk(b_j M_j - I) (resp. rk(A_j - b_j I)), compared with 2n.
template <EigenScalar S>
GeneralizedBeta check_generalized_beta(std::span<const ClassSpec<S>> specs) {
  using T = scalar_traits<S>;
  const int n = detail::common_size(specs);
  // Some entry avoids its eigenvalues: every other entry takes its best slot.
  int sum_best = 0, min_best = n;
  for (const auto& s : specs) {
    sum_best += s.jnf().max_block_count();
    min_best = std::min(min_best, s.jnf().max_block_count());
  }
  int best_blocks = sum_best - min_best;
  // Every entry sits on one of its eigenvalues; the chosen values must combine to the identity.
  std::map<S, int> acc{{T::identity(), 0}};
  for (const auto& s : specs) {
    std::map<S, int> next;
    for (const auto& [v, blocks] : acc)
      for (std::size_t l = 0; l < s.jnf().slot_count(); ++l) {
        const S w = T::combine(v, s.eigenvalue(l));
        const int b = blocks + s.jnf().slot(l).length();
        auto [it, inserted] = next.emplace(w, b);
        if (!inserted) it->second = std::max(it->second, b);
      }
    acc = std::move(next);
  }
  if (auto it = acc.find(T::identity()); it != acc.end()) best_blocks = std::max(best_blocks, it->second);

  GeneralizedBeta g;
  g.min_rank_sum = static_cast<int>(specs.size()) * n - best_blocks;
  g.bound = 2 * n;
  g.holds = g.min_rank_sum >= g.bound;
  return g;
}

struct SamplerOptions {
  int max_denominator = 97;
  int retries = 1000;
  int magnitude = 3;  // additive values drawn from [-magnitude, magnitude]
};

/// Seeded rejection sampler for generic exact eigenvalues.
template <EigenScalar S>
std::vector<ClassSpec<S>> sample_generic(const JnfTuple& tuple, std::uint64_t seed, const SamplerOptions& opt = {}) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> den_dist(1, opt.max_denominator);
  auto random_rational = [&](int lo_scale, int hi_scale) {
    const int den = den_dist(rng);
    std::uniform_int_distribution<int> num_dist(lo_scale * den, hi_scale * den - (hi_scale == 1 ? 1 : 0));
    return Rational(num_dist(rng), den);
  };

  const std::size_t last = tuple.count() - 1;
  for (int attempt = 0; attempt < opt.retries; ++attempt) {
    std::vector<std::vector<S>> values(tuple.count());
    S partial = scalar_traits<S>::identity();
    for (std::size_t j = 0; j < tuple.count(); ++j) {
      const Jnf& e = tuple[j];
      for (std::size_t l = 0; l < e.slot_count(); ++l) {
        if (j == last && l + 1 == e.slot_count()) break;
        S v;
        if constexpr (scalar_traits<S>::mode == Mode::additive)
          v = AdditiveScalar(random_rational(-opt.magnitude, opt.magnitude));
        else
          v = MultiplicativeScalar::unit(random_rational(0, 1));
        partial = scalar_traits<S>::combine(partial, scalar_traits<S>::power(v, e.slot(l).size()));
        values[j].push_back(std::move(v));
      }
    }
    // Solve the final eigenvalue from the global constraint.
    const int m = tuple[last].slot(tuple[last].slot_count() - 1).size();
    if constexpr (scalar_traits<S>::mode == Mode::additive) {
      values[last].push_back(Rational(-1, m) * partial);
    } else {
      std::uniform_int_distribution<int> branch(0, m - 1);
      const Rational a = (frac(-partial.arg) + branch(rng)) / m;
      values[last].push_back(MultiplicativeScalar::unit(a));
    }

    std::vector<ClassSpec<S>> specs;
    try {
      for (std::size_t j = 0; j < tuple.count(); ++j) specs.emplace_back(tuple[j], values[j]);
    } catch (const Error&) {
      continue;  // eigenvalue collision inside a class
    }
    if (is_generic<S>(specs)) return specs;
  }
  throw Error(ErrorCode::sampling_exhausted, "no generic eigenvalues found within the retry budget");
}

/// lambda -> exp(2 pi i lambda) for real rational eigenvalues.
inline MultiplicativeSpec exp_map(const AdditiveSpec& spec) {
  std::vector<MultiplicativeScalar> out;
  for (const auto& v : spec.eigenvalues()) {
    if (v.im != 0) throw Error(ErrorCode::unsupported_scalar, "exp of a non-real eigenvalue is not representable");
    MultiplicativeScalar w = MultiplicativeScalar::unit(v.re);
    for (const auto& u : out)
      if (u == w) throw Error(ErrorCode::slot_collision, "two eigenvalues differ by an integer");
    out.push_back(std::move(w));
  }
  return MultiplicativeSpec(spec.jnf(), std::move(out));
}

}  // namespace dspkit
