#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "whynot/core.hpp"
#include "whynot/engine.hpp"
#include "whynot/solver.hpp"

namespace whynot {

// Every question below is answered from a finished Consultation, so the same
// code paths work on a live run and on a replayed trace. Lookups throw
// std::invalid_argument on unknown attributes, elements or rules.

// One side of one rule held responsible for a degree. fact_side picks
// between the matching degree of the condition (how well the facts fit) and
// the rule's own uncertainty parameter (s on the lambda side, r on rho).
struct Contributor {
  std::string rule_id;
  RuleMatrix::Side side = RuleMatrix::Side::lambda;
  bool fact_side = true;
  Degree value = Degree::zero();
};

bool operator==(const Contributor& a, const Contributor& b);

// Condensed "mainly because" answer for one element's degree: the terms of
// its atom row that attain the minimum, split into fact and rule sides.
struct BlameSet {
  std::string attribute;
  std::string element;
  std::size_t atom_index = 0;
  Degree achieved = Degree::zero();   // value in the reported distribution
  Degree row_value = Degree::zero();  // matrix-row view of the same value
  bool unconstrained = false;         // degree 1; nothing holds it down
  bool approximate = false;           // subnormal input, row view inexact
  std::vector<Contributor> contributors;
};

BlameSet explain_mainly(const Consultation& c, const std::string& attribute,
                        const std::string& element);

// Which inputs would have to reach which levels for the element's degree to
// reach / fall to the threshold. Bounds refer to matrix columns.
struct ThresholdExplanation {
  std::string attribute;
  std::string element;
  std::size_t atom_index = 0;
  Degree threshold;
  Degree achieved;
  bool already = false;       // the degree is on the requested side now
  bool approximate = false;
  ThresholdConstraint constraint;
};

ThresholdExplanation explain_why_at_least(const Consultation& c,
                                          const std::string& attribute,
                                          const std::string& element,
                                          Degree threshold);

ThresholdExplanation explain_why_at_most(const Consultation& c,
                                         const std::string& attribute,
                                         const std::string& element,
                                         Degree threshold);

// How far the best conclusion is from competing ones. top_elements carry the
// maximal degree (height); necessity = 1 - strongest degree outside them.
// Competitors are the atoms that keep the necessity down, strongest first,
// each with the blame for its own degree.
struct CertaintyCompetitor {
  std::size_t atom_index = 0;
  std::string element;  // representative member
  Degree value = Degree::zero();
  BlameSet blame;
};

struct CertaintyView {
  std::string attribute;
  std::vector<std::string> top_elements;
  Degree height = Degree::one();
  Degree necessity = Degree::zero();
  std::vector<CertaintyCompetitor> competitors;
  bool approximate = false;
};

CertaintyView certainty_view(const Consultation& c,
                             const std::string& attribute);

// Degree of surprise of a reported belief: 1 - consistency between the
// belief and the concluded distribution. The witness element realizes the
// consistency; its blame says what capped it.
struct SurpriseView {
  std::string attribute;
  Degree consistency = Degree::one();
  Degree surprise = Degree::zero();
  std::string witness_element;
  BlameSet blame;
};

SurpriseView surprise_view(const Consultation& c, const std::string& attribute,
                           const FuzzySubset& belief);

// Why the conclusion fails to single out one alternative.
//  - partial_matches: condition matches strictly between impossible and
//    certain; the facts do not decide the rules (fact-side contributors of
//    the competitor atoms).
//  - vacuous_rules: rules whose condition match carries no information at
//    all (lambda = rho = 1).
//  - conflict_terms: when no element is fully possible, the terms capping
//    the best atoms (the rules pull against each other).
//  - rule_slack: exception levels of the rules themselves that keep
//    competitors open regardless of the facts.
struct ImprecisionDiagnosis {
  std::string attribute;
  Degree height = Degree::one();
  Degree necessity = Degree::zero();
  bool precise = false;  // single best atom, no competitors above necessity
  std::vector<Contributor> partial_matches;
  std::vector<std::string> vacuous_rules;
  std::vector<Contributor> conflict_terms;
  std::vector<Contributor> rule_slack;
  bool approximate = false;
};

ImprecisionDiagnosis diagnose_imprecision(const Consultation& c,
                                          const std::string& attribute);

// Full derivation view of one concluded attribute: the group record plus the
// facts its conditions consumed, flagged when themselves derived.
struct HowSource {
  std::string attribute;
  const PossibilityDistribution* distribution = nullptr;
  bool derived = false;   // concluded by an earlier group
  bool defaulted = false; // unknown, filled in as ignorance
};

struct HowTrace {
  const GroupRecord* group = nullptr;
  std::vector<HowSource> sources;  // first-use order
};

HowTrace trace_how(const Consultation& c, const std::string& attribute);

// Response curve of one element's degree when one rule-side input (lambda or
// rho column) is swept, all else fixed.
struct SensitivityView {
  std::string attribute;
  std::string element;
  std::string rule_id;
  RuleMatrix::Side side = RuleMatrix::Side::lambda;
  std::size_t atom_index = 0;
  std::size_t column = 0;
  Degree current_input = Degree::one();
  Degree current_value = Degree::one();
  SensitivityCurve curve;
  bool approximate = false;
};

SensitivityView sensitivity_view(const Consultation& c,
                                 const std::string& attribute,
                                 const std::string& element,
                                 const std::string& rule_id,
                                 RuleMatrix::Side side);

// Rendering helper shared by the answers above: the condition context a
// matrix column stands for, using the rule's own phrase when present and a
// neutral fallback otherwise.
std::string column_phrase(const GroupRecord& group, std::size_t rule_index,
                          RuleMatrix::Side side);

}  // namespace whynot
