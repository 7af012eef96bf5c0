#include "whynot/cli.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"
#include "json.hpp"

#include "whynot/explain.hpp"
#include "whynot/ruleio.hpp"

namespace whynot {

namespace {

using json = nlohmann::ordered_json;

// --- Trace building ------------------------------------------------------

const char* side_name(RuleMatrix::Side s) {
  return s == RuleMatrix::Side::lambda ? "lambda" : "rho";
}

json subset_json(const FuzzySubset& f) {
  json over = json::array();
  const auto& elements = f.domain()->elements();
  for (std::size_t i = 0; i < elements.size(); ++i)
    over.push_back(json::array({elements[i], f.at(i).str()}));
  return json{{"domain", f.domain()->name()}, {"over", std::move(over)}};
}

json dist_json(const PossibilityDistribution& p) {
  json over = json::array();
  const auto& elements = p.domain()->elements();
  for (std::size_t i = 0; i < elements.size(); ++i)
    over.push_back(json::array({elements[i], p.at(i).str()}));
  return json{{"domain", p.domain()->name()}, {"over", std::move(over)}};
}

json match_json(const MatchPair& m) {
  return json{{"pos", m.pos.str()},
              {"neg", m.neg.str()},
              {"fact_normalized", m.fact_normalized}};
}

json rule_json(const UncertainRule& r) {
  json parts = json::array();
  for (const ConditionPart& p : r.condition.parts)
    parts.push_back(json{{"attribute", p.attribute},
                         {"term", p.term},
                         {"negated", p.negated},
                         {"weight", p.weight.str()},
                         {"pattern", subset_json(p.pattern)}});
  return json{
      {"id", r.id},
      {"merged_from", r.merged_from},
      {"decomposed_from", r.decomposed_from},
      {"connective",
       r.condition.connective == Connective::disjunction ? "or" : "and"},
      {"parts", std::move(parts)},
      {"conclusion_attribute", r.conclusion_attribute},
      {"conclusion", subset_json(r.conclusion)},
      {"s", r.s.str()},
      {"r", r.r.str()},
      {"phrase", r.phrase_pos},
      {"phrase_not", r.phrase_neg}};
}

json group_json(const GroupRecord& g) {
  json rules = json::array();
  for (const RuleRecord& rr : g.rules) {
    json pairs = json::array();
    for (const ElementaryRecord& part : rr.parts)
      pairs.push_back(match_json(part.pair));
    rules.push_back(json{{"rule", rule_json(rr.rule)},
                         {"pairs", std::move(pairs)},
                         {"match", match_json(rr.match)},
                         {"alpha", rr.alpha.str()},
                         {"beta", rr.beta.str()}});
  }
  const auto& elements = g.distribution.domain()->elements();
  json atoms = json::array();
  for (const Atom& a : g.atoms) {
    json members = json::array();
    for (std::size_t m : a.members) members.push_back(elements[m]);
    json inside = json::array();
    for (bool b : a.in_conclusion) inside.push_back(b);
    atoms.push_back(
        json{{"members", std::move(members)}, {"in_conclusion", std::move(inside)}});
  }
  json columns = json::array();
  for (const RuleMatrix::Column& c : g.matrix.columns)
    columns.push_back(json{{"rule", c.rule_id}, {"side", side_name(c.side)}});
  json rows = json::array();
  for (const DegreeVec& row : g.matrix.rows) {
    json r = json::array();
    for (Degree d : row) r.push_back(d.str());
    rows.push_back(std::move(r));
  }
  json output = json::array();
  for (Degree d : g.output) output.push_back(d.str());
  return json{{"attribute", g.attribute},
              {"layer", g.layer},
              {"input_normalized", g.input_normalized},
              {"rules", std::move(rules)},
              {"atoms", std::move(atoms)},
              {"matrix",
               json{{"columns", std::move(columns)}, {"rows", std::move(rows)}}},
              {"output", std::move(output)},
              {"distribution", dist_json(g.distribution)}};
}

// --- Trace reading -------------------------------------------------------

[[noreturn]] void bad_trace(const std::string& what) {
  throw std::invalid_argument("trace: " + what);
}

const json& need(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !j.is_object()) bad_trace(std::string("missing '") + key + "'");
  return *it;
}

std::string need_str(const json& j, const char* key) {
  const json& v = need(j, key);
  if (!v.is_string()) bad_trace(std::string("'") + key + "' must be a string");
  return v.get<std::string>();
}

bool need_bool(const json& j, const char* key) {
  const json& v = need(j, key);
  if (!v.is_boolean()) bad_trace(std::string("'") + key + "' must be a boolean");
  return v.get<bool>();
}

int need_int(const json& j, const char* key) {
  const json& v = need(j, key);
  if (!v.is_number_integer())
    bad_trace(std::string("'") + key + "' must be an integer");
  return v.get<int>();
}

Degree degree_from(const json& v) {
  if (!v.is_string()) bad_trace("degree must be a decimal string");
  auto d = Degree::parse(v.get<std::string>());
  if (!d) bad_trace("bad degree '" + v.get<std::string>() + "'");
  return *d;
}

Degree need_degree(const json& j, const char* key) {
  return degree_from(need(j, key));
}

const json& need_array(const json& j, const char* key) {
  const json& v = need(j, key);
  if (!v.is_array()) bad_trace(std::string("'") + key + "' must be an array");
  return v;
}

FuzzySubset subset_from(const json& j) {
  std::string name = need_str(j, "domain");
  const json& over = need_array(j, "over");
  std::vector<std::string> elements;
  std::vector<Degree> mu;
  for (const json& pair : over) {
    if (!pair.is_array() || pair.size() != 2 || !pair[0].is_string())
      bad_trace("'over' entries must be [element, degree] pairs");
    elements.push_back(pair[0].get<std::string>());
    mu.push_back(degree_from(pair[1]));
  }
  try {
    return FuzzySubset(Domain::make(std::move(name), std::move(elements)),
                       std::move(mu));
  } catch (const std::invalid_argument& e) {
    bad_trace(e.what());
  }
}

PossibilityDistribution dist_from(const json& j) {
  FuzzySubset f = subset_from(j);
  return PossibilityDistribution(f.domain(), f.mu());
}

MatchPair match_from(const json& j) {
  return MatchPair{need_degree(j, "pos"), need_degree(j, "neg"),
                   need_bool(j, "fact_normalized")};
}

UncertainRule rule_from(const json& j) {
  UncertainRule r;
  r.id = need_str(j, "id");
  r.merged_from = need_str(j, "merged_from");
  r.decomposed_from = need_str(j, "decomposed_from");
  std::string conn = need_str(j, "connective");
  if (conn != "and" && conn != "or") bad_trace("connective must be and/or");
  r.condition.connective =
      conn == "or" ? Connective::disjunction : Connective::conjunction;
  for (const json& p : need_array(j, "parts"))
    r.condition.parts.push_back(ConditionPart{
        need_str(p, "attribute"), need_str(p, "term"), need_bool(p, "negated"),
        subset_from(need(p, "pattern")), need_degree(p, "weight")});
  r.conclusion_attribute = need_str(j, "conclusion_attribute");
  r.conclusion = subset_from(need(j, "conclusion"));
  r.s = need_degree(j, "s");
  r.r = need_degree(j, "r");
  r.phrase_pos = need_str(j, "phrase");
  r.phrase_neg = need_str(j, "phrase_not");
  return r;
}

GroupRecord group_from(const json& j) {
  GroupRecord g{};
  g.attribute = need_str(j, "attribute");
  g.layer = need_int(j, "layer");
  g.input_normalized = need_bool(j, "input_normalized");
  g.distribution = dist_from(need(j, "distribution"));
  const DomainPtr& domain = g.distribution.domain();

  for (const json& jr : need_array(j, "rules")) {
    RuleRecord rr{rule_from(need(jr, "rule")),
                  {},
                  match_from(need(jr, "match")),
                  need_degree(jr, "alpha"),
                  need_degree(jr, "beta")};
    const json& pairs = need_array(jr, "pairs");
    if (pairs.size() != rr.rule.condition.parts.size())
      bad_trace("rule '" + rr.rule.id + "': pairs do not line up with parts");
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const ConditionPart& p = rr.rule.condition.parts[i];
      rr.parts.push_back(ElementaryRecord{p.attribute, p.term, p.negated,
                                          p.weight, match_from(pairs[i])});
    }
    g.rules.push_back(std::move(rr));
  }
  if (g.rules.empty()) bad_trace("group '" + g.attribute + "' has no rules");

  for (const json& ja : need_array(j, "atoms")) {
    Atom atom;
    for (const json& m : need_array(ja, "members")) {
      if (!m.is_string()) bad_trace("atom members must be element names");
      auto idx = domain->index_of(m.get<std::string>());
      if (!idx) bad_trace("atom member '" + m.get<std::string>() +
                          "' is not in the conclusion domain");
      atom.members.push_back(*idx);
    }
    for (const json& b : need_array(ja, "in_conclusion")) {
      if (!b.is_boolean()) bad_trace("in_conclusion must hold booleans");
      atom.in_conclusion.push_back(b.get<bool>());
    }
    if (atom.in_conclusion.size() != g.rules.size())
      bad_trace("atom signs do not line up with the rules");
    g.atoms.push_back(std::move(atom));
  }

  const json& jm = need(j, "matrix");
  for (const json& jc : need_array(jm, "columns")) {
    std::string side = need_str(jc, "side");
    if (side != "lambda" && side != "rho") bad_trace("column side must be lambda/rho");
    g.matrix.columns.push_back(RuleMatrix::Column{
        need_str(jc, "rule"),
        side == "lambda" ? RuleMatrix::Side::lambda : RuleMatrix::Side::rho});
  }
  for (const json& jrow : need_array(jm, "rows")) {
    if (!jrow.is_array()) bad_trace("matrix rows must be arrays");
    DegreeVec row;
    for (const json& v : jrow) row.push_back(degree_from(v));
    g.matrix.rows.push_back(std::move(row));
  }
  for (const json& v : need_array(j, "output")) g.output.push_back(degree_from(v));
  return g;
}

void validate_group(const GroupRecord& g) {
  const std::string& a = g.attribute;
  std::size_t n = g.rules.size();
  if (g.atoms.empty()) bad_trace("group '" + a + "' has no atoms");
  if (g.matrix.columns.size() != 2 * n)
    bad_trace("group '" + a + "' needs two matrix columns per rule");
  for (std::size_t i = 0; i < n; ++i) {
    if (g.matrix.columns[2 * i].rule_id != g.rules[i].rule.id ||
        g.matrix.columns[2 * i].side != RuleMatrix::Side::lambda ||
        g.matrix.columns[2 * i + 1].rule_id != g.rules[i].rule.id ||
        g.matrix.columns[2 * i + 1].side != RuleMatrix::Side::rho)
      bad_trace("group '" + a + "' matrix columns out of order");
  }
  if (g.matrix.rows.size() != g.atoms.size())
    bad_trace("group '" + a + "' needs one matrix row per atom");
  for (const DegreeVec& row : g.matrix.rows)
    if (row.size() != 2 * n)
      bad_trace("group '" + a + "' has a ragged matrix row");
  if (g.output.size() != g.atoms.size())
    bad_trace("group '" + a + "' output does not line up with the atoms");
  std::vector<bool> covered(g.distribution.domain()->size(), false);
  for (const Atom& atom : g.atoms) {
    if (atom.members.empty()) bad_trace("group '" + a + "' has an empty atom");
    for (std::size_t m : atom.members) {
      if (covered[m]) bad_trace("group '" + a + "' atoms overlap");
      covered[m] = true;
    }
  }
  if (std::find(covered.begin(), covered.end(), false) != covered.end())
    bad_trace("group '" + a + "' atoms do not cover the domain");
}

}  // namespace

std::string consultation_to_trace(const Consultation& c) {
  json facts = json::array();
  for (const FactRecord& f : c.facts)
    facts.push_back(json{{"attribute", f.attribute},
                         {"defaulted", f.defaulted},
                         {"value", dist_json(f.distribution)}});
  json groups = json::array();
  for (const GroupRecord& g : c.groups) groups.push_back(group_json(g));
  json trace{{"trace_version", 1},
             {"facts", std::move(facts)},
             {"groups", std::move(groups)}};
  return trace.dump(2) + "\n";
}

Consultation consultation_from_trace(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    bad_trace(std::string("not valid JSON: ") + e.what());
  }
  if (!j.is_object()) bad_trace("top level must be an object");
  if (need_int(j, "trace_version") != 1) bad_trace("unsupported trace_version");
  Consultation c;
  for (const json& jf : need_array(j, "facts"))
    c.facts.push_back(FactRecord{need_str(jf, "attribute"),
                                 dist_from(need(jf, "value")),
                                 need_bool(jf, "defaulted")});
  std::vector<std::string> seen;
  for (const json& jg : need_array(j, "groups")) {
    GroupRecord g = group_from(jg);
    validate_group(g);
    if (std::find(seen.begin(), seen.end(), g.attribute) != seen.end())
      bad_trace("two groups conclude '" + g.attribute + "'");
    seen.push_back(g.attribute);
    c.groups.push_back(std::move(g));
  }
  return c;
}

// --- Rendering -----------------------------------------------------------

namespace {

std::string dist_line(const PossibilityDistribution& p) {
  std::ostringstream os;
  const auto& elements = p.domain()->elements();
  for (std::size_t i = 0; i < elements.size(); ++i) {
    if (i) os << ' ';
    os << elements[i] << '=' << p.at(i).str();
  }
  return os.str();
}

std::size_t rule_index_of(const GroupRecord& g, const std::string& id) {
  for (std::size_t i = 0; i < g.rules.size(); ++i)
    if (g.rules[i].rule.id == id) return i;
  throw std::invalid_argument("rule '" + id + "' is not in the group");
}

std::string contributor_text(const GroupRecord& g, const Contributor& t) {
  std::size_t ri = rule_index_of(g, t.rule_id);
  std::ostringstream os;
  if (t.fact_side) {
    os << "possibility " << t.value.str() << " that "
       << column_phrase(g, ri, t.side) << " [rule " << t.rule_id << ", condition "
       << (t.side == RuleMatrix::Side::lambda ? "holds" : "fails") << "]";
  } else if (t.side == RuleMatrix::Side::lambda) {
    os << "rule " << t.rule_id << " grants only " << t.value.str()
       << " through its fallback context [level s]";
  } else {
    os << "rule " << t.rule_id << " admits exceptions at " << t.value.str()
       << " [level r]";
  }
  return os.str();
}

json contributor_json(const GroupRecord& g, const Contributor& t) {
  return json{{"rule", t.rule_id},
              {"side", side_name(t.side)},
              {"source", t.fact_side ? "fact" : "rule"},
              {"value", t.value.str()},
              {"text", contributor_text(g, t)}};
}

json blame_json(const GroupRecord& g, const BlameSet& b) {
  json contributors = json::array();
  for (const Contributor& t : b.contributors)
    contributors.push_back(contributor_json(g, t));
  return json{{"attribute", b.attribute},
              {"element", b.element},
              {"achieved", b.achieved.str()},
              {"row_value", b.row_value.str()},
              {"unconstrained", b.unconstrained},
              {"approximate", b.approximate},
              {"contributors", std::move(contributors)}};
}

std::string bound_text(const GroupRecord& g, const AtomicBound& b) {
  std::size_t ri = b.column / 2;
  RuleMatrix::Side side =
      b.column % 2 ? RuleMatrix::Side::rho : RuleMatrix::Side::lambda;
  std::ostringstream os;
  os << (b.lower ? "raise" : "lower") << " the possibility that "
     << column_phrase(g, ri, side) << " to " << (b.lower ? "at least " : "at most ")
     << b.bound.str() << " [rule " << g.rules[ri].rule.id << ", condition "
     << (side == RuleMatrix::Side::lambda ? "holds" : "fails") << "]";
  return os.str();
}

json bound_json(const GroupRecord& g, const AtomicBound& b) {
  std::size_t ri = b.column / 2;
  RuleMatrix::Side side =
      b.column % 2 ? RuleMatrix::Side::rho : RuleMatrix::Side::lambda;
  return json{{"rule", g.rules[ri].rule.id},
              {"side", side_name(side)},
              {"lower", b.lower},
              {"bound", b.bound.str()},
              {"text", bound_text(g, b)}};
}

void render_approx_note(std::ostream& out, bool approximate) {
  if (approximate)
    out << "note: some inputs are subnormal; the matrix reading is approximate\n";
}

void render_facts(std::ostream& out, const Consultation& c) {
  for (const FactRecord& f : c.facts) {
    out << "fact " << f.attribute << ": " << dist_line(f.distribution);
    if (f.defaulted) out << " (unknown, assumed)";
    out << '\n';
  }
}

void render_distribution(std::ostream& out, const PossibilityDistribution& p,
                         const std::string& indent) {
  const auto& elements = p.domain()->elements();
  std::size_t width = 0;
  for (const std::string& e : elements) width = std::max(width, e.size());
  for (std::size_t i = 0; i < elements.size(); ++i) {
    out << indent << elements[i]
        << std::string(width - elements[i].size() + 1, ' ') << p.at(i).str()
        << '\n';
  }
}

void render_atoms(std::ostream& out, const GroupRecord& g,
                  const std::string& indent) {
  const auto& elements = g.distribution.domain()->elements();
  out << indent << "atoms\n";
  for (std::size_t k = 0; k < g.atoms.size(); ++k) {
    out << indent << "  [";
    for (std::size_t i = 0; i < g.atoms[k].members.size(); ++i) {
      if (i) out << ' ';
      out << elements[g.atoms[k].members[i]];
    }
    out << "] " << g.output[k].str() << '\n';
  }
}

void render_group(std::ostream& out, const GroupRecord& g, bool atoms) {
  out << g.attribute << " (layer " << g.layer << ")\n";
  render_distribution(out, g.distribution, "  ");
  if (atoms) render_atoms(out, g, "  ");
}

void render_rule_block(std::ostream& out, const GroupRecord& g,
                       const RuleRecord& rr) {
  out << "  rule " << rr.rule.id;
  if (!rr.rule.merged_from.empty())
    out << " [folded with " << rr.rule.merged_from << "]";
  if (!rr.rule.decomposed_from.empty())
    out << " [level of " << rr.rule.decomposed_from << "]";
  out << '\n';
  for (std::size_t i = 0; i < rr.parts.size(); ++i) {
    const ElementaryRecord& p = rr.parts[i];
    out << "    "
        << (i == 0 ? "if"
                   : rr.rule.condition.connective == Connective::disjunction
                         ? "or"
                         : "and")
        << ' ' << p.attribute << " IS " << (p.negated ? "NOT " : "") << p.term;
    if (p.weight != Degree::one()) out << " (weight " << p.weight.str() << ")";
    out << ": holds " << p.pair.pos.str() << ", fails " << p.pair.neg.str()
        << '\n';
  }
  out << "    condition: holds " << rr.match.pos.str() << ", fails "
      << rr.match.neg.str() << '\n';
  out << "    then " << rr.rule.conclusion_attribute << " in [";
  const auto& elements = rr.rule.conclusion.domain()->elements();
  bool first = true;
  for (std::size_t i = 0; i < elements.size(); ++i) {
    if (rr.rule.conclusion.at(i) == Degree::zero()) continue;
    if (!first) out << ' ';
    out << elements[i];
    if (rr.rule.conclusion.at(i) != Degree::one())
      out << ':' << rr.rule.conclusion.at(i).str();
    first = false;
  }
  out << "] with s=" << rr.rule.s.str() << " r=" << rr.rule.r.str() << '\n';
  out << "    conclusion possible at " << rr.alpha.str()
      << ", alternatives at " << rr.beta.str() << '\n';
  (void)g;
}

// --- Command execution ---------------------------------------------------

struct Options {
  std::string kb_path;
  std::string facts_path;
  std::string replay_path;
  std::string belief_path;
  std::string format = "human";
  bool permissive = false;
  bool atoms = false;
  std::string threshold;
};

std::optional<std::string> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void print_diagnostics(std::ostream& err, const std::vector<Diagnostic>& ds) {
  for (const Diagnostic& d : ds)
    err << (d.warning ? "warning: " : "error: ") << d.str() << '\n';
}

// 0 on success, else the exit code. kb stays empty in replay mode.
int load_consultation(const Options& o, std::ostream& err,
                      std::optional<KnowledgeBaseFile>& kb, Consultation& c) {
  if (!o.replay_path.empty()) {
    if (!o.kb_path.empty() || !o.facts_path.empty()) {
      err << "whynot: use either --replay or --kb/--facts, not both\n";
      return 2;
    }
    auto text = read_file(o.replay_path);
    if (!text) {
      err << "whynot: cannot read '" << o.replay_path << "'\n";
      return 1;
    }
    try {
      c = consultation_from_trace(*text);
    } catch (const std::exception& e) {
      err << "whynot: " << e.what() << '\n';
      return 1;
    }
    return 0;
  }
  if (o.kb_path.empty() || o.facts_path.empty()) {
    err << "whynot: --kb and --facts are required (or --replay)\n";
    return 2;
  }
  auto kb_text = read_file(o.kb_path);
  if (!kb_text) {
    err << "whynot: cannot read '" << o.kb_path << "'\n";
    return 1;
  }
  KbParse kp = parse_kb(*kb_text, o.kb_path);
  print_diagnostics(err, kp.diagnostics);
  if (!kp.ok()) return 1;
  auto facts_text = read_file(o.facts_path);
  if (!facts_text) {
    err << "whynot: cannot read '" << o.facts_path << "'\n";
    return 1;
  }
  FactsParse fp = parse_facts(*facts_text, o.facts_path, *kp.kb, o.permissive);
  print_diagnostics(err, fp.diagnostics);
  if (!fp.ok()) return 1;
  try {
    c = run_layers(kp.kb->compiled, fp.facts->map());
  } catch (const std::exception& e) {
    err << "whynot: " << e.what() << '\n';
    return 1;
  }
  kb = std::move(kp.kb);
  return 0;
}

bool structured(const Options& o) { return o.format == "structured"; }

void emit(std::ostream& out, const json& j) { out << j.dump(2) << '\n'; }

int cmd_consult(const Options& o, std::ostream& out, std::ostream& err) {
  std::optional<KnowledgeBaseFile> kb;
  Consultation c;
  if (int rc = load_consultation(o, err, kb, c)) return rc;
  if (structured(o)) {
    out << consultation_to_trace(c);
    return 0;
  }
  render_facts(out, c);
  for (const GroupRecord& g : c.groups) {
    out << '\n';
    render_group(out, g, o.atoms);
  }
  return 0;
}

int cmd_how(const Options& o, const std::string& attribute, std::ostream& out,
            std::ostream& err) {
  std::optional<KnowledgeBaseFile> kb;
  Consultation c;
  if (int rc = load_consultation(o, err, kb, c)) return rc;
  std::optional<Degree> prune;
  if (!o.threshold.empty()) {
    prune = Degree::parse(o.threshold);
    if (!prune) {
      err << "whynot: bad --threshold '" << o.threshold << "'\n";
      return 2;
    }
  }
  try {
    HowTrace t = trace_how(c, attribute);
    const GroupRecord& g = *t.group;
    if (structured(o)) {
      json sources = json::array();
      for (const HowSource& s : t.sources)
        sources.push_back(json{{"attribute", s.attribute},
                               {"derived", s.derived},
                               {"defaulted", s.defaulted},
                               {"value", dist_json(*s.distribution)}});
      emit(out, json{{"kind", "how"},
                     {"attribute", attribute},
                     {"sources", std::move(sources)},
                     {"group", group_json(g)}});
      return 0;
    }
    out << "how " << attribute << " was concluded (layer " << g.layer << ")\n";
    out << "  inputs\n";
    for (const HowSource& s : t.sources) {
      out << "    " << s.attribute << ": " << dist_line(*s.distribution);
      if (s.derived) out << " (derived)";
      if (s.defaulted) out << " (unknown, assumed)";
      out << '\n';
    }
    std::size_t hidden = 0;
    for (const RuleRecord& rr : g.rules) {
      if (prune && min(rr.alpha, rr.beta) >= *prune) {
        ++hidden;
        continue;
      }
      render_rule_block(out, g, rr);
    }
    if (hidden)
      out << "  (" << hidden << " rule" << (hidden == 1 ? "" : "s")
          << " hidden: nothing constrained below " << prune->str() << ")\n";
    out << "  combined\n";
    render_distribution(out, g.distribution, "    ");
    if (o.atoms) render_atoms(out, g, "  ");
    render_approx_note(out, !g.input_normalized);
    return 0;
  } catch (const std::invalid_argument& e) {
    err << "whynot: " << e.what() << '\n';
    return 1;
  }
}

int cmd_mainly(const Options& o, const std::string& attribute,
               const std::string& element, std::ostream& out,
               std::ostream& err) {
  std::optional<KnowledgeBaseFile> kb;
  Consultation c;
  if (int rc = load_consultation(o, err, kb, c)) return rc;
  try {
    BlameSet b = explain_mainly(c, attribute, element);
    const GroupRecord& g = *c.group_for(attribute);
    if (structured(o)) {
      json j{{"kind", "mainly"}};
      j.update(blame_json(g, b));
      emit(out, j);
      return 0;
    }
    out << attribute << " = " << element << " is possible at "
        << b.achieved.str() << '\n';
    if (b.unconstrained) {
      out << "nothing holds it below 1\n";
    } else {
      out << "mainly because\n";
      for (const Contributor& t : b.contributors)
        out << "  - " << contributor_text(g, t) << '\n';
    }
    render_approx_note(out, b.approximate);
    return 0;
  } catch (const std::invalid_argument& e) {
    err << "whynot: " << e.what() << '\n';
    return 1;
  }
}

int cmd_threshold(const Options& o, bool at_least, const std::string& attribute,
                  const std::string& element, const std::string& degree_text,
                  std::ostream& out, std::ostream& err) {
  std::optional<KnowledgeBaseFile> kb;
  Consultation c;
  auto threshold = Degree::parse(degree_text);
  if (!threshold) {
    err << "whynot: bad degree '" << degree_text << "'\n";
    return 2;
  }
  if (int rc = load_consultation(o, err, kb, c)) return rc;
  try {
    ThresholdExplanation e =
        at_least ? explain_why_at_least(c, attribute, element, *threshold)
                 : explain_why_at_most(c, attribute, element, *threshold);
    const GroupRecord& g = *c.group_for(attribute);
    const char* kind = at_least ? "why-at-least" : "why-at-most";
    if (structured(o)) {
      json disjuncts = json::array();
      for (const auto& conj : e.constraint.disjuncts) {
        json bounds = json::array();
        for (const AtomicBound& b : conj) bounds.push_back(bound_json(g, b));
        disjuncts.push_back(std::move(bounds));
      }
      json j{{"kind", kind},
             {"attribute", attribute},
             {"element", element},
             {"threshold", e.threshold.str()},
             {"achieved", e.achieved.str()},
             {"already", e.already},
             {"infeasible", e.constraint.infeasible},
             {"approximate", e.approximate},
             {"requirements", std::move(disjuncts)}};
      if (e.constraint.floor) j["floor"] = e.constraint.floor->str();
      emit(out, j);
      return 0;
    }
    out << attribute << " = " << element << " is possible at "
        << e.achieved.str() << "; requested " << (at_least ? "at least " : "at most ")
        << e.threshold.str() << '\n';
    if (e.already)
      out << "already on the requested side; the conditions below keep it there\n";
    if (e.constraint.infeasible) {
      out << "infeasible: the rules alone keep it at "
          << e.constraint.floor->str() << " or more\n";
    } else if (at_least) {
      const auto& conj = e.constraint.disjuncts.front();
      if (conj.empty())
        out << "nothing required: the rules alone guarantee it\n";
      else {
        out << "requires all of\n";
        for (const AtomicBound& b : conj)
          out << "  - " << bound_text(g, b) << '\n';
      }
    } else {
      out << "requires one of\n";
      for (const auto& conj : e.constraint.disjuncts)
        for (const AtomicBound& b : conj)
          out << "  - " << bound_text(g, b) << '\n';
    }
    render_approx_note(out, e.approximate);
    return 0;
  } catch (const std::invalid_argument& e) {
    err << "whynot: " << e.what() << '\n';
    return 1;
  }
}

int cmd_certainty(const Options& o, const std::string& attribute,
                  std::ostream& out, std::ostream& err) {
  std::optional<KnowledgeBaseFile> kb;
  Consultation c;
  if (int rc = load_consultation(o, err, kb, c)) return rc;
  try {
    CertaintyView v = certainty_view(c, attribute);
    ImprecisionDiagnosis d = diagnose_imprecision(c, attribute);
    const GroupRecord& g = *c.group_for(attribute);
    if (structured(o)) {
      json top = json::array();
      for (const std::string& e : v.top_elements) top.push_back(e);
      json competitors = json::array();
      for (const CertaintyCompetitor& comp : v.competitors) {
        json members = json::array();
        const auto& elements = g.distribution.domain()->elements();
        for (std::size_t m : g.atoms[comp.atom_index].members)
          members.push_back(elements[m]);
        competitors.push_back(json{{"element", comp.element},
                                   {"members", std::move(members)},
                                   {"value", comp.value.str()},
                                   {"blame", blame_json(g, comp.blame)}});
      }
      auto contributors = [&](const std::vector<Contributor>& ts) {
        json arr = json::array();
        for (const Contributor& t : ts) arr.push_back(contributor_json(g, t));
        return arr;
      };
      json vacuous = json::array();
      for (const std::string& id : d.vacuous_rules) vacuous.push_back(id);
      emit(out,
           json{{"kind", "certainty"},
                {"attribute", attribute},
                {"top", std::move(top)},
                {"height", v.height.str()},
                {"necessity", v.necessity.str()},
                {"competitors", std::move(competitors)},
                {"diagnosis",
                 json{{"precise", d.precise},
                      {"partial_matches", contributors(d.partial_matches)},
                      {"vacuous_rules", std::move(vacuous)},
                      {"conflict_terms", contributors(d.conflict_terms)},
                      {"rule_slack", contributors(d.rule_slack)}}},
                {"approximate", v.approximate}});
      return 0;
    }
    out << attribute << ": best supported ";
    for (std::size_t i = 0; i < v.top_elements.size(); ++i) {
      if (i) out << ", ";
      out << v.top_elements[i];
    }
    out << " (possible at " << v.height.str() << ")\n";
    out << "certainty (necessity) " << v.necessity.str() << '\n';
    if (!v.competitors.empty()) {
      out << "kept open by\n";
      for (const CertaintyCompetitor& comp : v.competitors) {
        out << "  - " << comp.element << " possible at " << comp.value.str();
        if (!comp.blame.contributors.empty()) {
          out << ": " << contributor_text(g, comp.blame.contributors.front());
        }
        out << '\n';
      }
    }
    if (d.precise) {
      out << "the conclusion is precise: one alternative, no competitor left open\n";
    } else {
      out << "diagnosis\n";
      if (!d.partial_matches.empty()) {
        out << "  the facts only partially decide\n";
        for (const Contributor& t : d.partial_matches)
          out << "    - " << contributor_text(g, t) << '\n';
      }
      if (!d.vacuous_rules.empty()) {
        out << "  rules with no information from the facts\n";
        for (const std::string& id : d.vacuous_rules)
          out << "    - rule " << id << " (condition fully unknown)\n";
      }
      if (!d.rule_slack.empty()) {
        out << "  the rules themselves leave room\n";
        for (const Contributor& t : d.rule_slack)
          out << "    - " << contributor_text(g, t) << '\n';
      }
      if (v.height < Degree::one()) {
        out << "  no alternative is fully possible (height " << v.height.str()
            << "); the rules pull against each other\n";
        for (const Contributor& t : d.conflict_terms)
          out << "    - " << contributor_text(g, t) << '\n';
      }
    }
    render_approx_note(out, v.approximate);
    return 0;
  } catch (const std::invalid_argument& e) {
    err << "whynot: " << e.what() << '\n';
    return 1;
  }
}

int cmd_surprise(const Options& o, const std::string& attribute,
                 std::ostream& out, std::ostream& err) {
  std::optional<KnowledgeBaseFile> kb;
  Consultation c;
  if (o.belief_path.empty()) {
    err << "whynot: explain surprise needs --belief\n";
    return 2;
  }
  if (int rc = load_consultation(o, err, kb, c)) return rc;
  auto text = read_file(o.belief_path);
  if (!text) {
    err << "whynot: cannot read '" << o.belief_path << "'\n";
    return 1;
  }
  BeliefParse bp;
  if (kb) {
    bp = parse_belief(*text, o.belief_path, *kb);
  } else {
    bp = parse_belief(*text, o.belief_path, [&c](const std::string& attr) {
      const PossibilityDistribution* d = c.distribution_for(attr);
      return d ? d->domain() : DomainPtr{};
    });
  }
  print_diagnostics(err, bp.diagnostics);
  if (!bp.ok()) return 1;
  const BeliefEntry* entry = bp.belief->entry(attribute);
  if (!entry) {
    err << "whynot: '" << o.belief_path << "' has no belief about '"
        << attribute << "'\n";
    return 1;
  }
  try {
    SurpriseView v = surprise_view(c, attribute, entry->belief);
    const GroupRecord& g = *c.group_for(attribute);
    if (structured(o)) {
      emit(out, json{{"kind", "surprise"},
                     {"attribute", attribute},
                     {"consistency", v.consistency.str()},
                     {"surprise", v.surprise.str()},
                     {"witness", v.witness_element},
                     {"blame", blame_json(g, v.blame)}});
      return 0;
    }
    out << "the belief about " << attribute << " is surprising at "
        << v.surprise.str() << " (consistency " << v.consistency.str() << ")\n";
    if (v.surprise == Degree::zero()) {
      out << "fully compatible with the conclusions\n";
      return 0;
    }
    out << "its best supported element is " << v.witness_element
        << ", possible at " << v.blame.achieved.str() << '\n';
    if (!v.blame.contributors.empty()) {
      out << "because\n";
      for (const Contributor& t : v.blame.contributors)
        out << "  - " << contributor_text(g, t) << '\n';
    }
    render_approx_note(out, v.blame.approximate);
    return 0;
  } catch (const std::invalid_argument& e) {
    err << "whynot: " << e.what() << '\n';
    return 1;
  }
}

int cmd_sensitivity(const Options& o, const std::string& attribute,
                    const std::string& element, const std::string& rule,
                    const std::string& side_text, std::ostream& out,
                    std::ostream& err) {
  RuleMatrix::Side side;
  if (side_text == "lambda" || side_text == "holds")
    side = RuleMatrix::Side::lambda;
  else if (side_text == "rho" || side_text == "fails")
    side = RuleMatrix::Side::rho;
  else {
    err << "whynot: side must be holds/fails (or lambda/rho), got '"
        << side_text << "'\n";
    return 2;
  }
  std::optional<KnowledgeBaseFile> kb;
  Consultation c;
  if (int rc = load_consultation(o, err, kb, c)) return rc;
  try {
    SensitivityView v = sensitivity_view(c, attribute, element, rule, side);
    const GroupRecord& g = *c.group_for(attribute);
    std::string formula;
    if (v.curve.constant()) {
      formula = v.curve.cap.str();
    } else if (v.curve.cap == Degree::one() && v.curve.entry == Degree::zero()) {
      formula = "x";
    } else if (v.curve.cap == Degree::one()) {
      formula = "max(" + v.curve.entry.str() + ", x)";
    } else if (v.curve.entry == Degree::zero()) {
      formula = "min(x, " + v.curve.cap.str() + ")";
    } else {
      formula = "min(max(" + v.curve.entry.str() + ", x), " + v.curve.cap.str() + ")";
    }
    if (structured(o)) {
      json breaks = json::array();
      for (Degree b : v.curve.breakpoints()) breaks.push_back(b.str());
      emit(out, json{{"kind", "sensitivity"},
                     {"attribute", attribute},
                     {"element", element},
                     {"rule", rule},
                     {"side", side_name(side)},
                     {"current_input", v.current_input.str()},
                     {"current_value", v.current_value.str()},
                     {"entry", v.curve.entry.str()},
                     {"cap", v.curve.cap.str()},
                     {"breakpoints", std::move(breaks)},
                     {"formula", formula},
                     {"approximate", v.approximate}});
      return 0;
    }
    std::size_t ri = rule_index_of(g, rule);
    out << attribute << " = " << element << " against rule " << rule
        << ", condition " << (side == RuleMatrix::Side::lambda ? "holds" : "fails")
        << '\n';
    out << "  (" << column_phrase(g, ri, side) << ")\n";
    out << "  current input " << v.current_input.str() << ", current value "
        << v.current_value.str() << '\n';
    out << "  value(x) = " << formula << '\n';
    if (v.curve.constant()) {
      out << "  the other constraints pin the value; this input cannot move it\n";
    } else {
      auto breaks = v.curve.breakpoints();
      if (!breaks.empty()) {
        out << "  breakpoints at ";
        for (std::size_t i = 0; i < breaks.size(); ++i) {
          if (i) out << " and ";
          out << breaks[i].str();
        }
        out << '\n';
      }
    }
    render_approx_note(out, v.approximate);
    return 0;
  } catch (const std::invalid_argument& e) {
    err << "whynot: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace

int run_cli(std::vector<std::string> args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"possibilistic rule consultation with explanations", "whynot"};
  app.require_subcommand(1);

  Options o;
  std::string attribute, element, degree_text, rule, side_text;

  auto add_common = [&o](CLI::App* cmd) {
    cmd->add_option("--kb", o.kb_path, "knowledge base file");
    cmd->add_option("--facts", o.facts_path, "facts file");
    cmd->add_option("--replay", o.replay_path,
                    "recorded trace to answer from instead of --kb/--facts");
    cmd->add_flag("--permissive", o.permissive,
                  "accept subnormal facts with a warning");
    cmd->add_option("--format", o.format, "human or structured")
        ->check(CLI::IsMember({"human", "structured"}));
  };

  CLI::App* consult = app.add_subcommand("consult", "evaluate the rules");
  add_common(consult);
  consult->add_flag("--atoms", o.atoms, "also show the grouped alternatives");

  CLI::App* explain = app.add_subcommand("explain", "answer questions about a consultation");
  explain->require_subcommand(1);

  CLI::App* how = explain->add_subcommand("how", "full derivation of one attribute");
  add_common(how);
  how->add_flag("--atoms", o.atoms, "also show the grouped alternatives");
  how->add_option("--threshold", o.threshold,
                  "hide rules constraining nothing below this degree");
  how->add_option("attribute", attribute, "concluded attribute")->required();

  CLI::App* mainly = explain->add_subcommand("mainly", "main reasons for one degree");
  add_common(mainly);
  mainly->add_option("attribute", attribute, "concluded attribute")->required();
  mainly->add_option("element", element, "domain element")->required();

  CLI::App* at_least = explain->add_subcommand("why-at-least",
                                               "what it takes to reach a degree");
  add_common(at_least);
  at_least->add_option("attribute", attribute, "concluded attribute")->required();
  at_least->add_option("element", element, "domain element")->required();
  at_least->add_option("degree", degree_text, "target degree")->required();

  CLI::App* at_most = explain->add_subcommand("why-at-most",
                                              "what it takes to fall to a degree");
  add_common(at_most);
  at_most->add_option("attribute", attribute, "concluded attribute")->required();
  at_most->add_option("element", element, "domain element")->required();
  at_most->add_option("degree", degree_text, "target degree")->required();

  CLI::App* certainty = explain->add_subcommand("certainty",
                                                "how settled the best conclusion is");
  add_common(certainty);
  certainty->add_option("attribute", attribute, "concluded attribute")->required();

  CLI::App* surprise = explain->add_subcommand("surprise",
                                               "how surprising a reported belief is");
  add_common(surprise);
  surprise->add_option("--belief", o.belief_path, "belief file")->required();
  surprise->add_option("attribute", attribute, "concluded attribute")->required();

  CLI::App* sensitivity = app.add_subcommand("sensitivity",
                                             "response curve against one rule side");
  add_common(sensitivity);
  sensitivity->add_option("attribute", attribute, "concluded attribute")->required();
  sensitivity->add_option("element", element, "domain element")->required();
  sensitivity->add_option("rule", rule, "rule id")->required();
  sensitivity->add_option("side", side_text, "holds or fails")->required();

  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return 0;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }

  if (consult->parsed()) return cmd_consult(o, out, err);
  if (how->parsed()) return cmd_how(o, attribute, out, err);
  if (mainly->parsed()) return cmd_mainly(o, attribute, element, out, err);
  if (at_least->parsed())
    return cmd_threshold(o, true, attribute, element, degree_text, out, err);
  if (at_most->parsed())
    return cmd_threshold(o, false, attribute, element, degree_text, out, err);
  if (certainty->parsed()) return cmd_certainty(o, attribute, out, err);
  if (surprise->parsed()) return cmd_surprise(o, attribute, out, err);
  if (sensitivity->parsed())
    return cmd_sensitivity(o, attribute, element, rule, side_text, out, err);
  err << "whynot: no command\n";
  return 2;
}

}  // namespace whynot
