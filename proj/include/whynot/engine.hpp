#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "whynot/core.hpp"
#include "whynot/matching.hpp"
#include "whynot/solver.hpp"

namespace whynot {

// A two-context uncertain rule "if p then x is E":
//   s = possibility of E when the condition fails (1 = the rule says nothing
//       about that context),
//   r = possibility of not-E when the condition holds (0 = no exceptions).
// Context matrix by columns (p, not p): [[1, s], [r, 1]].
struct UncertainRule {
  std::string id;
  // Bookkeeping for rules produced by folding a complementary pair or by
  // decomposing a fuzzy conclusion; empty otherwise.
  std::string merged_from;
  std::string decomposed_from;

  WeightedCondition condition;
  std::string conclusion_attribute;
  FuzzySubset conclusion;  // E; must be crisp for the native combination path
  Degree s = Degree::one();
  Degree r = Degree::zero();

  // Author-written rendering fragments for the condition and its negation.
  std::string phrase_pos;
  std::string phrase_neg;
};

// Detachment: from the rule contexts and the condition match (lambda, rho),
// the possibility bounds for E and not-E. Unsimplified forms, valid for
// subnormal pairs too:
//   alpha = max(lambda, min(s, rho)),  beta = max(min(r, lambda), rho).
struct Propagation {
  Degree alpha;
  Degree beta;
};

Propagation propagate(const UncertainRule& rule, const MatchPair& match);

// Distribution induced on the conclusion domain by one rule:
//   pi*(u) = min(max(mu_E(u), beta), max(1 - mu_E(u), alpha)).
// For crisp E this equals max(min(mu_E, alpha), min(1 - mu_E, beta)).
PossibilityDistribution induce(const FuzzySubset& e, Degree alpha, Degree beta);

// Nonempty intersection of conclusion sets / complements across one rule
// group. in_conclusion[i] tells whether the atom lies inside rule i's E.
struct Atom {
  std::vector<bool> in_conclusion;
  std::vector<std::size_t> members;  // domain indices, ascending
};

// Atoms in first-occurrence order when scanning the conclusion domain.
// Requires a nonempty group of crisp same-attribute conclusions.
std::vector<Atom> build_atoms(const std::vector<UncertainRule>& rules);

struct GroupResult {
  std::vector<Atom> atoms;
  DegreeVec output;  // one degree per atom
  PossibilityDistribution distribution;
};

// Combined conclusion of a rule group: atom degree = min over rules of
// (alpha_i inside E_i, beta_i outside), expanded to elements. Exactly equal
// to the pointwise min of the individual induced distributions.
GroupResult combine_group(const std::vector<UncertainRule>& rules,
                          const std::vector<MatchPair>& input);

// The group as a min-max relational system: one row per atom, columns
// lambda_1 rho_1 lambda_2 rho_2 ... Entries are (s_i, 1) when the atom lies
// in E_i and (1, r_i) otherwise, so row evaluation against the flattened
// input vector reproduces the combined output for normalized inputs.
struct RuleMatrix {
  enum class Side { lambda, rho };
  struct Column {
    std::string rule_id;
    Side side = Side::lambda;
  };
  DegreeMatrix rows;
  std::vector<Column> columns;
};

RuleMatrix build_rule_matrix(const std::vector<UncertainRule>& rules,
                             const std::vector<Atom>& atoms);

// [lambda_1, rho_1, lambda_2, rho_2, ...] for row evaluation.
DegreeVec flatten_input(const std::vector<MatchPair>& input);

// Couplings between the lambda/rho columns of each rule (valid whenever the
// input pairs are normalized).
std::vector<ColumnCoupling> rule_couplings(std::size_t rule_count);

// Replaces a rule with a fuzzy conclusion by a stack of crisp-conclusion
// rules, one per distinct membership level t_1 = 1 > ... > t_k > 0:
//   Q_j = {u : mu_E(u) >= t_j},  r_j = max(t_{j+1}, base_r)  (t_{k+1} = 0).
// A crisp conclusion comes back unchanged. Requires max mu_E = 1.
std::vector<UncertainRule> decompose_fuzzy_conclusion(const UncertainRule& rule,
                                                      Degree base_r);

// --- Layered consultation ---------------------------------------------

struct ElementaryRecord {
  std::string attribute;
  std::string term;
  bool negated = false;
  Degree weight = Degree::one();
  MatchPair pair;
};

struct RuleRecord {
  UncertainRule rule;
  std::vector<ElementaryRecord> parts;
  MatchPair match;  // aggregated (lambda, rho)
  Degree alpha;
  Degree beta;
};

struct GroupRecord {
  std::string attribute;
  int layer = 1;
  std::vector<RuleRecord> rules;
  std::vector<Atom> atoms;
  RuleMatrix matrix;
  DegreeVec output;
  PossibilityDistribution distribution;
  bool input_normalized = true;  // every aggregated pair normalized
};

struct FactRecord {
  std::string attribute;
  PossibilityDistribution distribution;
  bool defaulted = false;  // true when filled in as total ignorance
};

// Full replayable consultation trace.
struct Consultation {
  std::vector<FactRecord> facts;     // inputs, authored order then defaulted
  std::vector<GroupRecord> groups;   // evaluation order (by layer)

  const GroupRecord* group_for(const std::string& attribute) const;
  const FactRecord* fact_for(const std::string& attribute) const;
  // Derived distribution if the attribute is concluded, else the fact.
  const PossibilityDistribution* distribution_for(
      const std::string& attribute) const;
};

// Evaluates every rule group in dependency order; conclusions of one layer
// serve as facts for the next. Missing condition attributes default to total
// ignorance. Rules with fuzzy conclusions are decomposed, complementary
// pairs are expected to be folded already (see ruleio). Throws on cyclic
// dependencies and on conclusion-domain disagreements.
Consultation run_layers(const std::vector<UncertainRule>& rules,
                        const FactMap& facts);

}  // namespace whynot
