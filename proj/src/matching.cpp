#include "whynot/matching.hpp"

#include <stdexcept>

namespace whynot {

void validate_weights(const std::vector<Degree>& weights) {
  if (weights.empty()) throw std::invalid_argument("condition has no parts");
  Degree top = Degree::zero();
  for (Degree w : weights) top = max(top, w);
  if (top != Degree::one())
    throw std::invalid_argument("weights must satisfy max_i w_i = 1");
}

MatchPair match_elementary(const FuzzySubset& pattern,
                           const PossibilityDistribution& fact) {
  if (!same_domain(pattern.domain(), fact.domain()))
    throw std::invalid_argument("match: pattern/fact domain mismatch");
  Degree pos = Degree::zero();
  Degree neg = Degree::zero();
  for (std::size_t i = 0; i < fact.pi().size(); ++i) {
    pos = max(pos, min(pattern.at(i), fact.at(i)));
    neg = max(neg, min(pattern.at(i).complement(), fact.at(i)));
  }
  return MatchPair{pos, neg, fact.is_normalized()};
}

MatchPair aggregate(const std::vector<MatchPair>& pairs,
                    const std::vector<Degree>& weights, Connective connective) {
  if (pairs.empty()) throw std::invalid_argument("aggregate: no pairs");
  if (pairs.size() != weights.size())
    throw std::invalid_argument("aggregate: pair/weight count mismatch");
  validate_weights(weights);

  bool facts_ok = true;
  for (const MatchPair& p : pairs) facts_ok = facts_ok && p.fact_normalized;

  if (connective == Connective::conjunction) {
    Degree pos = Degree::one();
    Degree neg = Degree::zero();
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      pos = min(pos, max(pairs[i].pos, weights[i].complement()));
      neg = max(neg, min(pairs[i].neg, weights[i]));
    }
    return MatchPair{pos, neg, facts_ok};
  }
  Degree pos = Degree::zero();
  Degree neg = Degree::one();
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    pos = max(pos, min(pairs[i].pos, weights[i]));
    neg = min(neg, max(pairs[i].neg, weights[i].complement()));
  }
  return MatchPair{pos, neg, facts_ok};
}

ConditionMatch match_condition(const WeightedCondition& condition,
                               const FactMap& facts) {
  ConditionMatch out;
  std::vector<Degree> weights;
  for (const ConditionPart& part : condition.parts) {
    auto it = facts.find(part.attribute);
    MatchPair pair =
        it != facts.end()
            ? match_elementary(part.pattern, it->second)
            : match_elementary(
                  part.pattern,
                  PossibilityDistribution::ignorance(part.pattern.domain()));
    out.elementary.push_back(pair);
    weights.push_back(part.weight);
  }
  out.aggregated = aggregate(out.elementary, weights, condition.connective);
  return out;
}

}  // namespace whynot
