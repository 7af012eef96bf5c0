#include "whynot/solver.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace whynot {

Degree eval_minmax_row(const DegreeVec& row, const DegreeVec& v) {
  if (row.size() != v.size())
    throw std::invalid_argument("eval: row/vector size mismatch");
  if (row.empty()) throw std::invalid_argument("eval: empty row");
  Degree out = Degree::one();
  for (std::size_t j = 0; j < row.size(); ++j)
    out = min(out, max(row[j], v[j]));
  return out;
}

DegreeVec eval_minmax(const DegreeMatrix& m, const DegreeVec& v) {
  DegreeVec out;
  out.reserve(m.size());
  for (const DegreeVec& row : m) out.push_back(eval_minmax_row(row, v));
  return out;
}

namespace {

// Dual-Sanchez residuation: the only candidate for a least solution. Every
// solution must satisfy v[j] >= b_i wherever M[i][j] < b_i (otherwise row i
// drops below b_i), and this vector achieves those bounds tightly.
DegreeVec least_candidate(const DegreeMatrix& m, const DegreeVec& b) {
  std::size_t cols = m.empty() ? 0 : m.front().size();
  DegreeVec v(cols, Degree::zero());
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < cols; ++j)
      if (m[i][j] < b[i]) v[j] = max(v[j], b[i]);
  return v;
}

bool is_solution(const DegreeMatrix& m, const DegreeVec& b, const DegreeVec& v) {
  return eval_minmax(m, v) == b;
}

bool dominates(const DegreeVec& a, const DegreeVec& b) {
  for (std::size_t j = 0; j < a.size(); ++j)
    if (a[j] < b[j]) return false;
  return true;
}

bool respects(const DegreeVec& v, const std::vector<ColumnCoupling>& couplings) {
  for (const ColumnCoupling& c : couplings)
    if (max(v[c.a], v[c.b]) != Degree::one()) return false;
  return true;
}

}  // namespace

SolveResult solve_exact(const DegreeMatrix& m, const DegreeVec& b,
                        const std::vector<ColumnCoupling>& couplings) {
  if (m.size() != b.size())
    throw std::invalid_argument("solve: matrix/target size mismatch");
  SolveResult res;
  if (m.empty()) throw std::invalid_argument("solve: empty system");
  std::size_t cols = m.front().size();
  for (const DegreeVec& row : m)
    if (row.size() != cols) throw std::invalid_argument("solve: ragged matrix");
  for (const ColumnCoupling& c : couplings)
    if (c.a >= cols || c.b >= cols)
      throw std::invalid_argument("solve: coupling column out of range");

  DegreeVec base = least_candidate(m, b);
  if (!is_solution(m, b, base)) return res;  // unsolvable even uncoupled

  // Witness sets: row i stays exactly at b_i only if some column with
  // M[i][j] <= b_i keeps v[j] <= b_i.
  for (std::size_t i = 0; i < m.size(); ++i) {
    SolveResult::RowWitness w;
    w.row = i;
    w.cap = b[i];
    for (std::size_t j = 0; j < cols; ++j)
      if (m[i][j] <= b[i]) w.columns.push_back(j);
    res.witnesses.push_back(std::move(w));
  }

  if (couplings.empty()) {
    res.solvable = true;
  } else {
    // A coupled solution exists iff raising one chosen end of every coupling
    // to 1 (2^k single-end assignments) leaves some row-witness structure
    // intact; any coupled solution dominates one of these candidates.
    std::size_t k = couplings.size();
    if (k > 20) throw std::invalid_argument("solve: too many couplings");
    for (std::size_t mask = 0; mask < (std::size_t{1} << k) && !res.solvable;
         ++mask) {
      DegreeVec v = base;
      for (std::size_t c = 0; c < k; ++c)
        v[(mask >> c) & 1 ? couplings[c].b : couplings[c].a] = Degree::one();
      if (is_solution(m, b, v)) res.solvable = true;
    }
    if (!res.solvable) return res;
  }
  res.least = base;

  // Maximal solutions: pick one witness column per row, cap it at that row's
  // b, leave everything else at 1. Enumerate when the choice space is small.
  std::size_t combos = 1;
  for (const auto& w : res.witnesses) {
    combos *= w.columns.size();
    if (combos > 4096) break;
  }
  if (combos <= 4096) {
    std::set<DegreeVec> candidates;
    std::vector<std::size_t> choice(m.size(), 0);
    for (;;) {
      DegreeVec v(cols, Degree::one());
      for (std::size_t i = 0; i < m.size(); ++i) {
        std::size_t j = res.witnesses[i].columns[choice[i]];
        v[j] = min(v[j], b[i]);
      }
      if (is_solution(m, b, v) && respects(v, couplings)) candidates.insert(v);
      std::size_t i = 0;
      while (i < m.size() && ++choice[i] == res.witnesses[i].columns.size())
        choice[i++] = 0;
      if (i == m.size()) break;
    }
    for (const DegreeVec& v : candidates) {
      bool maximal = true;
      for (const DegreeVec& u : candidates)
        if (u != v && dominates(u, v)) {
          maximal = false;
          break;
        }
      if (maximal) res.maximal.push_back(v);
    }
    res.maximal_enumerated = true;
  }
  return res;
}

ThresholdConstraint require_at_least(const DegreeVec& row, Degree t) {
  ThresholdConstraint c;
  std::vector<AtomicBound> conj;
  for (std::size_t j = 0; j < row.size(); ++j)
    if (row[j] < t) conj.push_back(AtomicBound{j, true, t});
  c.disjuncts.push_back(std::move(conj));
  return c;
}

ThresholdConstraint require_at_most(const DegreeVec& row, Degree t) {
  ThresholdConstraint c;
  for (std::size_t j = 0; j < row.size(); ++j)
    if (row[j] <= t) c.disjuncts.push_back({AtomicBound{j, false, t}});
  if (c.disjuncts.empty()) {
    c.infeasible = true;
    Degree fl = Degree::one();
    for (Degree e : row) fl = min(fl, e);
    c.floor = fl;
  }
  return c;
}

bool satisfies(const ThresholdConstraint& c, const DegreeVec& v) {
  if (c.infeasible) return false;
  for (const auto& conj : c.disjuncts) {
    bool ok = true;
    for (const AtomicBound& a : conj) {
      bool holds = a.lower ? v[a.column] >= a.bound : v[a.column] <= a.bound;
      if (!holds) {
        ok = false;
        break;
      }
    }
    if (ok) return true;
  }
  return false;
}

ThresholdConstraint apply_couplings(ThresholdConstraint c,
                                    const std::vector<ColumnCoupling>& couplings) {
  if (c.infeasible || couplings.empty()) return c;
  std::vector<std::vector<AtomicBound>> kept;
  for (auto& conj : c.disjuncts) {
    bool feasible = true;
    for (const ColumnCoupling& pair : couplings) {
      bool a_low = false, b_low = false;
      for (const AtomicBound& bound : conj) {
        if (bound.lower || bound.bound == Degree::one()) continue;
        if (bound.column == pair.a) a_low = true;
        if (bound.column == pair.b) b_low = true;
      }
      if (a_low && b_low) {
        feasible = false;
        break;
      }
    }
    if (feasible) kept.push_back(std::move(conj));
  }
  c.disjuncts = std::move(kept);
  if (c.disjuncts.empty()) c.infeasible = true;
  return c;
}

std::vector<Degree> SensitivityCurve::breakpoints() const {
  std::vector<Degree> out;
  if (constant()) return out;
  if (entry > Degree::zero()) out.push_back(entry);
  if (cap < Degree::one()) out.push_back(cap);
  return out;
}

SensitivityCurve sensitivity_curve(const DegreeVec& row, const DegreeVec& v,
                                   std::size_t column) {
  if (row.size() != v.size())
    throw std::invalid_argument("sensitivity: row/vector size mismatch");
  if (column >= row.size())
    throw std::invalid_argument("sensitivity: column out of range");
  Degree cap = Degree::one();
  for (std::size_t j = 0; j < row.size(); ++j)
    if (j != column) cap = min(cap, max(row[j], v[j]));
  return SensitivityCurve{row[column], cap};
}

}  // namespace whynot
