#include "whynot/explain.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace whynot {

bool operator==(const Contributor& a, const Contributor& b) {
  return a.rule_id == b.rule_id && a.side == b.side &&
         a.fact_side == b.fact_side && a.value == b.value;
}

namespace {

const GroupRecord& need_group(const Consultation& c,
                              const std::string& attribute) {
  const GroupRecord* g = c.group_for(attribute);
  if (!g)
    throw std::invalid_argument("no rule concludes attribute '" + attribute +
                                "'");
  return *g;
}

std::size_t need_element(const GroupRecord& g, const std::string& element) {
  auto idx = g.distribution.domain()->index_of(element);
  if (!idx)
    throw std::invalid_argument("'" + element + "' is not in the domain of '" +
                                g.attribute + "'");
  return *idx;
}

std::size_t atom_of(const GroupRecord& g, std::size_t element_index) {
  for (std::size_t k = 0; k < g.atoms.size(); ++k) {
    const auto& m = g.atoms[k].members;
    if (std::find(m.begin(), m.end(), element_index) != m.end()) return k;
  }
  throw std::logic_error("element missing from every atom");
}

std::size_t need_rule(const GroupRecord& g, const std::string& rule_id) {
  for (std::size_t i = 0; i < g.rules.size(); ++i)
    if (g.rules[i].rule.id == rule_id) return i;
  throw std::invalid_argument("rule '" + rule_id +
                              "' does not conclude attribute '" + g.attribute +
                              "'");
}

DegreeVec group_input(const GroupRecord& g) {
  std::vector<MatchPair> pairs;
  pairs.reserve(g.rules.size());
  for (const RuleRecord& r : g.rules) pairs.push_back(r.match);
  return flatten_input(pairs);
}

// Binding terms of one matrix row: every column whose max(entry, input)
// attains the row minimum, each split into the attained sides.
std::vector<Contributor> binding_terms(const GroupRecord& g, std::size_t atom,
                                       const DegreeVec& v, Degree row_value) {
  std::vector<Contributor> out;
  const DegreeVec& row = g.matrix.rows[atom];
  for (std::size_t j = 0; j < row.size(); ++j) {
    if (max(row[j], v[j]) != row_value) continue;
    const RuleMatrix::Column& col = g.matrix.columns[j];
    if (v[j] >= row[j])
      out.push_back(Contributor{col.rule_id, col.side, true, v[j]});
    if (row[j] >= v[j])
      out.push_back(Contributor{col.rule_id, col.side, false, row[j]});
  }
  return out;
}

BlameSet blame_atom(const GroupRecord& g, std::size_t atom,
                    std::size_t element_index) {
  BlameSet b;
  b.attribute = g.attribute;
  b.element = g.distribution.domain()->elements()[element_index];
  b.atom_index = atom;
  b.achieved = g.distribution.at(element_index);
  DegreeVec v = group_input(g);
  b.row_value = eval_minmax_row(g.matrix.rows[atom], v);
  b.approximate = !g.input_normalized;
  if (b.row_value == Degree::one()) {
    b.unconstrained = true;
    return b;
  }
  b.contributors = binding_terms(g, atom, v, b.row_value);
  return b;
}

void push_unique(std::vector<Contributor>& out, const Contributor& c) {
  if (std::find(out.begin(), out.end(), c) == out.end()) out.push_back(c);
}

bool strictly_inside(Degree d) {
  return d > Degree::zero() && d < Degree::one();
}

}  // namespace

BlameSet explain_mainly(const Consultation& c, const std::string& attribute,
                        const std::string& element) {
  const GroupRecord& g = need_group(c, attribute);
  std::size_t ei = need_element(g, element);
  return blame_atom(g, atom_of(g, ei), ei);
}

ThresholdExplanation explain_why_at_least(const Consultation& c,
                                          const std::string& attribute,
                                          const std::string& element,
                                          Degree threshold) {
  const GroupRecord& g = need_group(c, attribute);
  std::size_t ei = need_element(g, element);
  std::size_t k = atom_of(g, ei);
  ThresholdExplanation e{attribute, element, k, threshold,
                         g.distribution.at(ei)};
  e.already = e.achieved >= threshold;
  e.approximate = !g.input_normalized;
  e.constraint = apply_couplings(require_at_least(g.matrix.rows[k], threshold),
                                 rule_couplings(g.rules.size()));
  return e;
}

ThresholdExplanation explain_why_at_most(const Consultation& c,
                                         const std::string& attribute,
                                         const std::string& element,
                                         Degree threshold) {
  const GroupRecord& g = need_group(c, attribute);
  std::size_t ei = need_element(g, element);
  std::size_t k = atom_of(g, ei);
  ThresholdExplanation e{attribute, element, k, threshold,
                         g.distribution.at(ei)};
  e.already = e.achieved <= threshold;
  e.approximate = !g.input_normalized;
  e.constraint = apply_couplings(require_at_most(g.matrix.rows[k], threshold),
                                 rule_couplings(g.rules.size()));
  return e;
}

CertaintyView certainty_view(const Consultation& c,
                             const std::string& attribute) {
  const GroupRecord& g = need_group(c, attribute);
  CertaintyView view;
  view.attribute = attribute;
  view.approximate = !g.input_normalized;
  view.height = g.distribution.height();

  const auto& elements = g.distribution.domain()->elements();
  std::set<std::size_t> top_atoms;
  for (std::size_t k = 0; k < g.atoms.size(); ++k)
    if (g.output[k] == view.height) top_atoms.insert(k);
  for (std::size_t u = 0; u < elements.size(); ++u)
    if (g.distribution.at(u) == view.height)
      view.top_elements.push_back(elements[u]);

  Degree strongest = Degree::zero();
  for (std::size_t k = 0; k < g.atoms.size(); ++k)
    if (!top_atoms.count(k)) strongest = max(strongest, g.output[k]);
  view.necessity = strongest.complement();

  // The atoms that keep the necessity down: everything at the strongest
  // competing level plus anything above the necessity itself.
  std::vector<std::size_t> comp;
  for (std::size_t k = 0; k < g.atoms.size(); ++k) {
    if (top_atoms.count(k)) continue;
    if (g.output[k] == Degree::zero()) continue;  // ruled out, not competing
    if (g.output[k] == strongest || g.output[k] > view.necessity)
      comp.push_back(k);
  }
  std::stable_sort(comp.begin(), comp.end(), [&](std::size_t a, std::size_t b) {
    return g.output[a] > g.output[b];
  });
  for (std::size_t k : comp) {
    std::size_t member = g.atoms[k].members.front();
    view.competitors.push_back(CertaintyCompetitor{
        k, elements[member], g.output[k], blame_atom(g, k, member)});
  }
  return view;
}

SurpriseView surprise_view(const Consultation& c, const std::string& attribute,
                           const FuzzySubset& belief) {
  const GroupRecord& g = need_group(c, attribute);
  if (!same_domain(belief.domain(), g.distribution.domain()))
    throw std::invalid_argument("belief for '" + attribute +
                                "' is on a different domain");
  SurpriseView view;
  view.attribute = attribute;
  Degree best = Degree::zero();
  std::size_t witness = 0;
  for (std::size_t u = 0; u < belief.mu().size(); ++u) {
    Degree m = min(belief.at(u), g.distribution.at(u));
    if (m > best) {
      best = m;
      witness = u;
    }
  }
  view.consistency = best;
  view.surprise = best.complement();
  view.witness_element = g.distribution.domain()->elements()[witness];
  view.blame = blame_atom(g, atom_of(g, witness), witness);
  return view;
}

ImprecisionDiagnosis diagnose_imprecision(const Consultation& c,
                                          const std::string& attribute) {
  const GroupRecord& g = need_group(c, attribute);
  CertaintyView cv = certainty_view(c, attribute);
  ImprecisionDiagnosis d;
  d.attribute = attribute;
  d.height = cv.height;
  d.necessity = cv.necessity;
  d.approximate = cv.approximate;

  std::size_t top_atom_count = 0;
  for (Degree x : g.output)
    if (x == cv.height) ++top_atom_count;
  d.precise = cv.competitors.empty() && top_atom_count == 1;

  for (const CertaintyCompetitor& comp : cv.competitors)
    for (const Contributor& t : comp.blame.contributors) {
      if (t.fact_side && strictly_inside(t.value))
        push_unique(d.partial_matches, t);
      if (!t.fact_side && strictly_inside(t.value))
        push_unique(d.rule_slack, t);
    }

  for (const RuleRecord& r : g.rules)
    if (r.match.pos == Degree::one() && r.match.neg == Degree::one())
      d.vacuous_rules.push_back(r.rule.id);

  if (cv.height < Degree::one()) {
    DegreeVec v = group_input(g);
    for (std::size_t k = 0; k < g.atoms.size(); ++k) {
      if (g.output[k] != cv.height) continue;
      Degree row_value = eval_minmax_row(g.matrix.rows[k], v);
      for (const Contributor& t : binding_terms(g, k, v, row_value))
        push_unique(d.conflict_terms, t);
    }
  }
  return d;
}

HowTrace trace_how(const Consultation& c, const std::string& attribute) {
  const GroupRecord& g = need_group(c, attribute);
  HowTrace trace;
  trace.group = &g;
  std::set<std::string> seen;
  for (const RuleRecord& r : g.rules)
    for (const ElementaryRecord& part : r.parts) {
      if (!seen.insert(part.attribute).second) continue;
      HowSource src;
      src.attribute = part.attribute;
      if (const GroupRecord* dep = c.group_for(part.attribute)) {
        src.distribution = &dep->distribution;
        src.derived = true;
      } else if (const FactRecord* fact = c.fact_for(part.attribute)) {
        src.distribution = &fact->distribution;
        src.defaulted = fact->defaulted;
      } else {
        throw std::invalid_argument("consultation records no value for '" +
                                    part.attribute + "'");
      }
      trace.sources.push_back(std::move(src));
    }
  return trace;
}

SensitivityView sensitivity_view(const Consultation& c,
                                 const std::string& attribute,
                                 const std::string& element,
                                 const std::string& rule_id,
                                 RuleMatrix::Side side) {
  const GroupRecord& g = need_group(c, attribute);
  std::size_t ei = need_element(g, element);
  std::size_t k = atom_of(g, ei);
  std::size_t ri = need_rule(g, rule_id);
  SensitivityView view;
  view.attribute = attribute;
  view.element = element;
  view.rule_id = rule_id;
  view.side = side;
  view.atom_index = k;
  view.column = 2 * ri + (side == RuleMatrix::Side::rho ? 1 : 0);
  DegreeVec v = group_input(g);
  view.current_input = v[view.column];
  view.current_value = g.distribution.at(ei);
  view.curve = sensitivity_curve(g.matrix.rows[k], v, view.column);
  view.approximate = !g.input_normalized;
  return view;
}

std::string column_phrase(const GroupRecord& group, std::size_t rule_index,
                          RuleMatrix::Side side) {
  const UncertainRule& rule = group.rules.at(rule_index).rule;
  if (side == RuleMatrix::Side::lambda)
    return rule.phrase_pos.empty()
               ? "the condition of rule " + rule.id + " holds"
               : rule.phrase_pos;
  return rule.phrase_neg.empty()
             ? "the condition of rule " + rule.id + " fails"
             : rule.phrase_neg;
}

}  // namespace whynot
