#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "dspkit/error.hpp"
#include "dspkit/jnf.hpp"

namespace dspkit {

struct ConditionCheck {
  int n = 0;
  int sum_d = 0;
  int sum_r = 0;
  bool alpha = false;         // sum d_j >= 2n^2 - 2
  bool alpha_strict = false;  // sum d_j >  2n^2 - 2
  bool beta = false;          // for all j: sum_{i != j} r_i >= n
  bool omega = false;         // sum r_j >= 2n
};

inline ConditionCheck check_conditions(const JnfTuple& tuple) {
  ConditionCheck c;
  c.n = tuple.n();
  int max_r = 0;
  for (const auto& e : tuple.entries()) {
    const int r = r_of(e);
    c.sum_r += r;
    c.sum_d += d_of(e);
    max_r = std::max(max_r, r);
  }
  const int bound = 2 * c.n * c.n - 2;
  c.alpha = c.sum_d >= bound;
  c.alpha_strict = c.sum_d > bound;
  c.beta = c.sum_r - max_r >= c.n;
  c.omega = c.sum_r >= 2 * c.n;
  return c;
}

/// Whether the reduction can be applied to `tuple` as it stands.
inline bool psi_defined(const ConditionCheck& c) { return c.n > 1 && c.alpha && c.beta && !c.omega; }

/// Slot indices attaining the maximal block count of `jnf`.
inline std::vector<std::size_t> maximizer_slots(const Jnf& jnf) {
  std::vector<std::size_t> out;
  const int best = jnf.max_block_count();
  for (std::size_t l = 0; l < jnf.slot_count(); ++l)
    if (jnf.slot(l).length() == best) out.push_back(l);
  return out;
}

/// Default tie-break: largest multiplicity among maximizers, then lowest index.
inline std::size_t default_slot(const Jnf& jnf) {
  std::size_t chosen = 0;
  int best_blocks = -1, best_sum = -1;
  for (std::size_t l = 0; l < jnf.slot_count(); ++l) {
    const int b = jnf.slot(l).length(), s = jnf.slot(l).size();
    if (b > best_blocks || (b == best_blocks && s > best_sum)) {
      chosen = l;
      best_blocks = b;
      best_sum = s;
    }
  }
  return chosen;
}

/// One application of the reduction: with n1 = sum r_j - n, every entry loses one
/// unit from each of the n - n1 smallest blocks of a maximally blocked slot.
inline JnfTuple psi_step(const JnfTuple& tuple, std::optional<std::vector<std::size_t>> choice = std::nullopt) {
  const ConditionCheck c = check_conditions(tuple);
  if (!psi_defined(c))
    throw Error(ErrorCode::psi_undefined, "reduction requires n > 1, alpha, beta and not omega");
  const int n = c.n;
  const int n1 = c.sum_r - n;
  if (n1 < 1 || n1 >= n) throw Error(ErrorCode::psi_undefined, "reduced size out of range");
  if (choice && choice->size() != tuple.count())
    throw Error(ErrorCode::invalid_choice, "one slot per entry is required");

  const int drop = n - n1;
  std::vector<Jnf> next;
  next.reserve(tuple.count());
  for (std::size_t j = 0; j < tuple.count(); ++j) {
    const Jnf& e = tuple[j];
    std::size_t slot = default_slot(e);
    if (choice) {
      slot = (*choice)[j];
      if (slot >= e.slot_count() || e.slot(slot).length() != e.max_block_count())
        throw Error(ErrorCode::invalid_choice, "chosen slot does not carry the maximal number of blocks");
    }
    std::vector<Partition> slots;
    for (std::size_t l = 0; l < e.slot_count(); ++l) {
      if (l != slot) {
        slots.push_back(e.slot(l));
        continue;
      }
      std::vector<int> parts(e.slot(l).parts().begin(), e.slot(l).parts().end());
      const int len = static_cast<int>(parts.size());
      if (drop > len) throw Error(ErrorCode::psi_undefined, "not enough blocks to shrink");
      for (int i = len - drop; i < len; ++i) --parts[static_cast<std::size_t>(i)];
      std::erase(parts, 0);
      if (!parts.empty()) slots.emplace_back(std::move(parts));
    }
    if (slots.empty()) throw Error(ErrorCode::psi_undefined, "an entry was reduced to size zero");
    next.emplace_back(std::move(slots));
  }
  return JnfTuple(std::move(next));
}

enum class Termination { omega_holds, n_equals_1, psi_undefined };

constexpr std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::omega_holds: return "omega_holds";
    case Termination::n_equals_1: return "n_equals_1";
    case Termination::psi_undefined: return "psi_undefined";
  }
  return "unknown";
}

struct PsiStep {
  JnfTuple input;
  std::vector<std::size_t> chosen_slots;
  int n1 = 0;
};

struct PsiTrace {
  std::vector<PsiStep> steps;
  JnfTuple terminal;
  Termination reason = Termination::psi_undefined;
};

/// Iterates the reduction with the default tie-break while it is defined.
inline PsiTrace run_psi(const JnfTuple& tuple) {
  PsiTrace trace;
  JnfTuple cur = tuple;
  for (;;) {
    const ConditionCheck c = check_conditions(cur);
    if (c.n == 1) {
      trace.reason = Termination::n_equals_1;
      break;
    }
    if (c.omega) {
      trace.reason = Termination::omega_holds;
      break;
    }
    if (!psi_defined(c)) {
      trace.reason = Termination::psi_undefined;
      break;
    }
    PsiStep step{cur, {}, c.sum_r - c.n};
    for (const auto& e : cur.entries()) step.chosen_slots.push_back(default_slot(e));
    JnfTuple next = psi_step(cur, step.chosen_slots);
    trace.steps.push_back(std::move(step));
    cur = std::move(next);
  }
  trace.terminal = std::move(cur);
  return trace;
}

enum class Verdict { solvable, not_solvable, unknown };

constexpr std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::solvable: return "solvable";
    case Verdict::not_solvable: return "not_solvable";
    case Verdict::unknown: return "unknown";
  }
  return "unknown";
}

struct DecisionReport {
  Verdict verdict = Verdict::not_solvable;
  ConditionCheck conditions;
  int kappa = 0;
  PsiTrace trace;
  std::optional<int> expected_moduli_dimension;  // 2 - kappa when solvable
};

/// Solvability for generic eigenvalues: beta on the input, then the reduction
/// must stop at a tuple satisfying omega or of size one.
inline DecisionReport decide_generic(const JnfTuple& tuple) {
  DecisionReport r;
  r.conditions = check_conditions(tuple);
  r.kappa = kappa_of(tuple);
  r.trace = run_psi(tuple);
  const bool stops_well =
      r.trace.reason == Termination::omega_holds || r.trace.reason == Termination::n_equals_1;
  const bool ok = tuple.n() == 1 || (r.conditions.beta && stops_well);
  r.verdict = ok ? Verdict::solvable : Verdict::not_solvable;
  if (ok) r.expected_moduli_dimension = 2 - r.kappa;
  return r;
}

/// Weak problem when some entry has n distinct eigenvalues: alpha and beta.
inline DecisionReport decide_weak_distinct(const JnfTuple& tuple) {
  bool has_distinct = false;
  for (const auto& e : tuple.entries()) has_distinct = has_distinct || e.is_distinct();
  if (!has_distinct) throw Error(ErrorCode::not_applicable, "no entry has distinct eigenvalues");
  DecisionReport r;
  r.conditions = check_conditions(tuple);
  r.kappa = kappa_of(tuple);
  r.trace = run_psi(tuple);
  const bool ok = tuple.n() == 1 || (r.conditions.alpha && r.conditions.beta);
  r.verdict = ok ? Verdict::solvable : Verdict::not_solvable;
  if (ok) r.expected_moduli_dimension = 2 - r.kappa;
  return r;
}

}  // namespace dspkit
