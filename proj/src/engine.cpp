#include "whynot/engine.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <stdexcept>

namespace whynot {

Propagation propagate(const UncertainRule& rule, const MatchPair& match) {
  Degree alpha = max(match.pos, min(rule.s, match.neg));
  Degree beta = max(min(rule.r, match.pos), match.neg);
  return Propagation{alpha, beta};
}

PossibilityDistribution induce(const FuzzySubset& e, Degree alpha, Degree beta) {
  std::vector<Degree> pi;
  pi.reserve(e.mu().size());
  for (Degree m : e.mu())
    pi.push_back(min(max(m, beta), max(m.complement(), alpha)));
  return PossibilityDistribution(e.domain(), std::move(pi));
}

namespace {

void check_group(const std::vector<UncertainRule>& rules) {
  if (rules.empty()) throw std::invalid_argument("empty rule group");
  const FuzzySubset& first = rules.front().conclusion;
  for (const UncertainRule& r : rules) {
    if (!r.conclusion.is_crisp())
      throw std::invalid_argument(
          "rule " + r.id + ": fuzzy conclusion must be decomposed first");
    if (r.conclusion_attribute != rules.front().conclusion_attribute)
      throw std::invalid_argument("rule group mixes conclusion attributes");
    if (!same_domain(r.conclusion.domain(), first.domain()))
      throw std::invalid_argument("rule group mixes conclusion domains");
  }
}

}  // namespace

std::vector<Atom> build_atoms(const std::vector<UncertainRule>& rules) {
  check_group(rules);
  const DomainPtr& domain = rules.front().conclusion.domain();
  std::vector<Atom> atoms;
  std::vector<bool> placed(domain->size(), false);
  for (std::size_t u = 0; u < domain->size(); ++u) {
    if (placed[u]) continue;
    Atom atom;
    for (const UncertainRule& r : rules)
      atom.in_conclusion.push_back(r.conclusion.at(u) == Degree::one());
    for (std::size_t w = u; w < domain->size(); ++w) {
      if (placed[w]) continue;
      bool same = true;
      for (std::size_t i = 0; i < rules.size() && same; ++i)
        same = (rules[i].conclusion.at(w) == Degree::one()) ==
               atom.in_conclusion[i];
      if (same) {
        atom.members.push_back(w);
        placed[w] = true;
      }
    }
    atoms.push_back(std::move(atom));
  }
  return atoms;
}

GroupResult combine_group(const std::vector<UncertainRule>& rules,
                          const std::vector<MatchPair>& input) {
  check_group(rules);
  if (input.size() != rules.size())
    throw std::invalid_argument("combine: one match pair per rule required");
  GroupResult res{build_atoms(rules), {}, PossibilityDistribution::ignorance(
                                              rules.front().conclusion.domain())};
  std::vector<Propagation> props;
  props.reserve(rules.size());
  for (std::size_t i = 0; i < rules.size(); ++i)
    props.push_back(propagate(rules[i], input[i]));

  std::vector<Degree> pi(res.distribution.pi().size(), Degree::one());
  for (const Atom& atom : res.atoms) {
    Degree x = Degree::one();
    for (std::size_t i = 0; i < rules.size(); ++i)
      x = min(x, atom.in_conclusion[i] ? props[i].alpha : props[i].beta);
    res.output.push_back(x);
    for (std::size_t u : atom.members) pi[u] = x;
  }
  res.distribution =
      PossibilityDistribution(rules.front().conclusion.domain(), std::move(pi));
  return res;
}

RuleMatrix build_rule_matrix(const std::vector<UncertainRule>& rules,
                             const std::vector<Atom>& atoms) {
  check_group(rules);
  RuleMatrix m;
  for (const UncertainRule& r : rules) {
    m.columns.push_back({r.id, RuleMatrix::Side::lambda});
    m.columns.push_back({r.id, RuleMatrix::Side::rho});
  }
  for (const Atom& atom : atoms) {
    DegreeVec row;
    row.reserve(rules.size() * 2);
    for (std::size_t i = 0; i < rules.size(); ++i) {
      if (atom.in_conclusion[i]) {
        row.push_back(rules[i].s);
        row.push_back(Degree::one());
      } else {
        row.push_back(Degree::one());
        row.push_back(rules[i].r);
      }
    }
    m.rows.push_back(std::move(row));
  }
  return m;
}

DegreeVec flatten_input(const std::vector<MatchPair>& input) {
  DegreeVec v;
  v.reserve(input.size() * 2);
  for (const MatchPair& p : input) {
    v.push_back(p.pos);
    v.push_back(p.neg);
  }
  return v;
}

std::vector<ColumnCoupling> rule_couplings(std::size_t rule_count) {
  std::vector<ColumnCoupling> out;
  out.reserve(rule_count);
  for (std::size_t i = 0; i < rule_count; ++i)
    out.push_back(ColumnCoupling{2 * i, 2 * i + 1});
  return out;
}

std::vector<UncertainRule> decompose_fuzzy_conclusion(const UncertainRule& rule,
                                                      Degree base_r) {
  if (rule.conclusion.is_crisp()) return {rule};
  std::vector<Degree> levels;  // distinct positive memberships, descending
  for (Degree m : rule.conclusion.mu())
    if (m > Degree::zero()) levels.push_back(m);
  std::sort(levels.begin(), levels.end(), std::greater<>());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  if (levels.empty() || levels.front() != Degree::one())
    throw std::invalid_argument(
        "rule " + rule.id + ": fuzzy conclusion must reach membership 1");

  std::vector<UncertainRule> out;
  for (std::size_t j = 0; j < levels.size(); ++j) {
    UncertainRule cut = rule;
    cut.id = rule.id + "#" + std::to_string(j + 1);
    cut.decomposed_from = rule.id;
    std::vector<Degree> mu;
    mu.reserve(rule.conclusion.mu().size());
    for (Degree m : rule.conclusion.mu())
      mu.push_back(m >= levels[j] ? Degree::one() : Degree::zero());
    cut.conclusion = FuzzySubset(rule.conclusion.domain(), std::move(mu));
    Degree next = j + 1 < levels.size() ? levels[j + 1] : Degree::zero();
    cut.r = max(next, base_r);
    out.push_back(std::move(cut));
  }
  return out;
}

const GroupRecord* Consultation::group_for(const std::string& attribute) const {
  for (const GroupRecord& g : groups)
    if (g.attribute == attribute) return &g;
  return nullptr;
}

const FactRecord* Consultation::fact_for(const std::string& attribute) const {
  for (const FactRecord& f : facts)
    if (f.attribute == attribute) return &f;
  return nullptr;
}

const PossibilityDistribution* Consultation::distribution_for(
    const std::string& attribute) const {
  if (const GroupRecord* g = group_for(attribute)) return &g->distribution;
  if (const FactRecord* f = fact_for(attribute)) return &f->distribution;
  return nullptr;
}

namespace {

// Longest-path layer assignment over the attribute dependency graph; throws
// on cycles (ruleio rejects them earlier, this guards direct engine use).
std::map<std::string, int> assign_layers(
    const std::map<std::string, std::vector<const UncertainRule*>>& groups) {
  std::map<std::string, int> layer;
  std::set<std::string> visiting;
  // 0 = plain fact; concluded attributes start at 1.
  std::function<int(const std::string&)> depth = [&](const std::string& attr) {
    auto done = layer.find(attr);
    if (done != layer.end()) return done->second;
    auto g = groups.find(attr);
    if (g == groups.end()) return 0;
    if (!visiting.insert(attr).second)
      throw std::invalid_argument("cyclic attribute dependencies at " + attr);
    int deepest = 0;
    for (const UncertainRule* r : g->second)
      for (const ConditionPart& part : r->condition.parts)
        deepest = std::max(deepest, depth(part.attribute));
    visiting.erase(attr);
    layer[attr] = deepest + 1;
    return deepest + 1;
  };
  for (const auto& [attr, rules] : groups) {
    (void)rules;
    depth(attr);
  }
  return layer;
}

}  // namespace

Consultation run_layers(const std::vector<UncertainRule>& rules,
                        const FactMap& facts) {
  // Group by conclusion attribute, preserving rule order; decompose fuzzy
  // conclusions in place.
  std::vector<std::string> group_order;
  std::map<std::string, std::vector<UncertainRule>> grouped;
  for (const UncertainRule& r : rules) {
    auto [it, inserted] = grouped.try_emplace(r.conclusion_attribute);
    if (inserted) group_order.push_back(r.conclusion_attribute);
    for (UncertainRule& cut : decompose_fuzzy_conclusion(r, r.r))
      it->second.push_back(std::move(cut));
  }

  std::map<std::string, std::vector<const UncertainRule*>> group_ptrs;
  for (const auto& [attr, group] : grouped) {
    auto& v = group_ptrs[attr];
    for (const UncertainRule& r : group) v.push_back(&r);
  }
  std::map<std::string, int> layers = assign_layers(group_ptrs);

  std::stable_sort(group_order.begin(), group_order.end(),
                   [&](const std::string& a, const std::string& b) {
                     return layers.at(a) < layers.at(b);
                   });

  Consultation out;
  FactMap working = facts;
  std::set<std::string> fact_recorded;
  for (const auto& [attr, dist] : facts) {
    out.facts.push_back(FactRecord{attr, dist, false});
    fact_recorded.insert(attr);
  }

  for (const std::string& attr : group_order) {
    const std::vector<UncertainRule>& group = grouped.at(attr);
    if (working.count(attr))
      throw std::invalid_argument("fact supplied for concluded attribute " +
                                  attr);
    GroupRecord rec;
    rec.attribute = attr;
    rec.layer = layers.at(attr);

    std::vector<MatchPair> input;
    for (const UncertainRule& rule : group) {
      RuleRecord rr;
      rr.rule = rule;
      ConditionMatch cm = match_condition(rule.condition, working);
      for (std::size_t i = 0; i < rule.condition.parts.size(); ++i) {
        const ConditionPart& part = rule.condition.parts[i];
        // Condition attributes that are neither facts nor conclusions enter
        // as total ignorance; record them so the trace stays replayable.
        if (!working.count(part.attribute)) {
          if (!fact_recorded.count(part.attribute) &&
              grouped.find(part.attribute) == grouped.end()) {
            out.facts.push_back(FactRecord{
                part.attribute,
                PossibilityDistribution::ignorance(part.pattern.domain()),
                true});
            fact_recorded.insert(part.attribute);
          }
        }
        rr.parts.push_back(ElementaryRecord{part.attribute, part.term,
                                            part.negated, part.weight,
                                            cm.elementary[i]});
      }
      rr.match = cm.aggregated;
      Propagation p = propagate(rule, rr.match);
      rr.alpha = p.alpha;
      rr.beta = p.beta;
      input.push_back(rr.match);
      rec.input_normalized = rec.input_normalized && rr.match.normalized();
      rec.rules.push_back(std::move(rr));
    }

    GroupResult combined = combine_group(group, input);
    rec.atoms = std::move(combined.atoms);
    rec.output = std::move(combined.output);
    rec.distribution = std::move(combined.distribution);
    rec.matrix = build_rule_matrix(group, rec.atoms);

    working.emplace(attr, rec.distribution);
    out.groups.push_back(std::move(rec));
  }
  return out;
}

}  // namespace whynot
