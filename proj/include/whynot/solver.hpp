#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "whynot/core.hpp"

namespace whynot {

// Min-max relational algebra: a system OV = M # IV where
//   b_k = min_j max(M[k][j], v[j]).
// Raising any v[j] can only raise outputs; every row is bounded below by
// min_j M[k][j] and above by 1.

using DegreeVec = std::vector<Degree>;
using DegreeMatrix = std::vector<DegreeVec>;  // row-major

Degree eval_minmax_row(const DegreeVec& row, const DegreeVec& v);
DegreeVec eval_minmax(const DegreeMatrix& m, const DegreeVec& v);

// Pairs of columns that cannot both stay below 1 (for rule systems: the
// lambda/rho columns of one rule, since max(lambda, rho) = 1 for any
// normalized input pair).
struct ColumnCoupling {
  std::size_t a = 0;
  std::size_t b = 0;
};

struct SolveResult {
  bool solvable = false;
  // Least solution when solvable: eval(m, least) = b and least <= v for
  // every solution v (coupling-respecting solutions included).
  std::optional<DegreeVec> least;
  // Maximal solutions, enumerated only when the witness choice space is
  // small; the witness description below is the lossless fallback.
  std::vector<DegreeVec> maximal;
  bool maximal_enumerated = false;
  // Lossless description of the uncoupled solution set: v is a solution iff
  // v >= least pointwise and, for every row, v[j] <= cap at one of the
  // row's witness columns. Couplings, when present, filter this set further.
  struct RowWitness {
    std::size_t row = 0;
    Degree cap;
    std::vector<std::size_t> columns;
  };
  std::vector<RowWitness> witnesses;
};

// Exact solver for eval_minmax(m, v) = b. With couplings given, solvable
// means "has a solution respecting every coupling". Correctness contract is
// exhaustive search over the 11-level grid (see tests).
SolveResult solve_exact(const DegreeMatrix& m, const DegreeVec& b,
                        const std::vector<ColumnCoupling>& couplings = {});

// One atomic bound on one unknown.
struct AtomicBound {
  std::size_t column = 0;
  bool lower = true;  // true: v[column] >= bound, false: v[column] <= bound
  Degree bound;
  friend bool operator==(const AtomicBound&, const AtomicBound&) = default;
};

// Disjunction of conjunctions of atomic bounds. at-least queries produce one
// conjunction; at-most queries produce a disjunction of single bounds.
struct ThresholdConstraint {
  std::vector<std::vector<AtomicBound>> disjuncts;
  bool infeasible = false;
  // Set when infeasible: the row can never be pushed to the requested side;
  // for at-most queries this is the row floor min_j M[k][j].
  std::optional<Degree> floor;
};

// Exact condition for eval_minmax_row(row, v) >= t: every column with
// row[j] < t must have v[j] >= t. Empty conjunction when t is already
// guaranteed by the row entries alone.
ThresholdConstraint require_at_least(const DegreeVec& row, Degree t);

// Exact condition for eval_minmax_row(row, v) <= t: some column with
// row[j] <= t must have v[j] <= t. Infeasible (with floor) when no column
// entry is <= t.
ThresholdConstraint require_at_most(const DegreeVec& row, Degree t);

bool satisfies(const ThresholdConstraint& c, const DegreeVec& v);

// Drops conjunctions that force both columns of a coupling below 1; marks
// the whole constraint infeasible when nothing survives. Upper bounds at 1
// and lower bounds never conflict with a coupling.
ThresholdConstraint apply_couplings(ThresholdConstraint c,
                                    const std::vector<ColumnCoupling>& couplings);

// Row output as a function of one input, everything else pinned:
//   f(x) = min(max(entry, x), cap)
// where entry = row[j] and cap = min over j' != j of max(row[j'], v[j']).
// Nondecreasing, piecewise linear, at most two interior breakpoints.
struct SensitivityCurve {
  Degree entry;
  Degree cap;
  Degree at(Degree x) const { return min(max(entry, x), cap); }
  bool constant() const { return entry >= cap; }
  // Interior breakpoints (0 and 1 excluded): {entry, cap} where the slope
  // changes, empty when the function is constant.
  std::vector<Degree> breakpoints() const;
};

SensitivityCurve sensitivity_curve(const DegreeVec& row, const DegreeVec& v,
                                   std::size_t column);

}  // namespace whynot
