#pragma once

#include <map>
#include <string>
#include <vector>

#include "whynot/core.hpp"

namespace whynot {

// Two-sided match result: pos is the possibility that the pattern holds
// given the fact, neg the possibility that it fails. For a crisp pattern and
// a normalized fact, max(pos, neg) = 1; fuzzy patterns can leave both below
// 1, which downstream code treats as a subnormal input pair.
struct MatchPair {
  Degree pos;
  Degree neg;
  // False when the fact distribution this pair was computed against had
  // height < 1; carried along as a warning, never an error.
  bool fact_normalized = true;

  bool normalized() const { return max(pos, neg) == Degree::one(); }
  friend bool operator==(const MatchPair&, const MatchPair&) = default;
};

enum class Connective { conjunction, disjunction };

// One elementary condition: a fuzzy pattern on one attribute, optionally
// negated, with an importance weight (1 = fully required).
struct ConditionPart {
  std::string attribute;
  std::string term;  // authored name, kept for rendering
  bool negated = false;
  FuzzySubset pattern;  // already complemented when negated
  Degree weight = Degree::one();
};

struct WeightedCondition {
  std::vector<ConditionPart> parts;
  Connective connective = Connective::conjunction;
};

// Weight normalization: max_i w_i = 1 for either connective (a condition
// needs at least one fully important part). Throws std::invalid_argument.
void validate_weights(const std::vector<Degree>& weights);

// pos = max_u min(mu(u), pi(u)), neg the same against the complement pattern.
MatchPair match_elementary(const FuzzySubset& pattern,
                           const PossibilityDistribution& fact);

// Weighted aggregation of elementary pairs.
//   conjunction: pos = min_i max(pos_i, 1-w_i), neg = max_i min(neg_i, w_i)
//   disjunction: pos = max_i min(pos_i, w_i),   neg = min_i max(neg_i, 1-w_i)
// Requires at least one pair and normalized weights.
MatchPair aggregate(const std::vector<MatchPair>& pairs,
                    const std::vector<Degree>& weights, Connective connective);

using FactMap = std::map<std::string, PossibilityDistribution>;

// Matches every part of a condition against the fact map (missing attributes
// count as total ignorance) and aggregates. Elementary pairs are returned in
// part order for tracing.
struct ConditionMatch {
  MatchPair aggregated;
  std::vector<MatchPair> elementary;
};

ConditionMatch match_condition(const WeightedCondition& condition,
                               const FactMap& facts);

}  // namespace whynot
