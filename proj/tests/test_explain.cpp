#include "whynot/explain.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "whynot/cli.hpp"
#include "whynot/ruleio.hpp"
#include "doctest.h"

using namespace whynot;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE_MESSAGE(in.good(), "cannot open " << path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string data_path(const char* name) {
  return std::string(WHYNOT_DATA_DIR) + "/" + name;
}

// The shipped career-advice consultation; every explanation test below
// checks hand-computed values for it.
Consultation advice() {
  KbParse kb = parse_kb(slurp(data_path("professions.kb")), "professions.kb");
  REQUIRE(kb.ok());
  FactsParse facts =
      parse_facts(slurp(data_path("peter.facts")), "peter.facts", *kb.kb);
  REQUIRE(facts.ok());
  return run_layers(kb.kb->compiled, facts.facts->map());
}

bool has_contrib(const std::vector<Contributor>& cs, const std::string& rule,
                 RuleMatrix::Side side, bool fact_side, Degree value) {
  return std::find(cs.begin(), cs.end(),
                   Contributor{rule, side, fact_side, value}) != cs.end();
}

}  // namespace

TEST_CASE("consultation distribution, the reference career case") {
  Consultation c = advice();
  const auto* prof = c.distribution_for("profession");
  REQUIRE(prof);
  const auto& dom = *prof->domain();
  auto deg = [&](const char* e) { return prof->at(*dom.index_of(e)); };
  CHECK(deg("professor") == Degree::one());
  CHECK(deg("business_man") == Degree(600));
  CHECK(deg("lawyer") == Degree(600));
  CHECK(deg("doctor") == Degree(600));
  CHECK(deg("researcher") == Degree(200));
  CHECK(deg("engineer") == Degree(200));
  CHECK(deg("architect") == Degree(200));
  CHECK(deg("others") == Degree(500));

  const GroupRecord* g = c.group_for("profession");
  REQUIRE(g);
  CHECK(g->input_normalized);
  REQUIRE(g->atoms.size() == 5);
  CHECK(g->output == DegreeVec{Degree::one(), Degree(600), Degree(200),
                               Degree(200), Degree(500)});

  // aggregated matches: r1 (1, 0.5), r2 (0.2, 1), r3 (1, 0.6)
  REQUIRE(g->rules.size() == 3);
  CHECK(g->rules[0].match == MatchPair{Degree::one(), Degree(500), true});
  CHECK(g->rules[1].match == MatchPair{Degree(200), Degree::one(), true});
  CHECK(g->rules[2].match == MatchPair{Degree::one(), Degree(600), true});
}

TEST_CASE("mainly: the capping terms, fact side vs rule side") {
  Consultation c = advice();

  SUBCASE("business_man is held at 0.6 by the third rule's condition") {
    BlameSet b = explain_mainly(c, "profession", "business_man");
    CHECK(b.achieved == Degree(600));
    CHECK(b.row_value == Degree(600));
    CHECK_FALSE(b.unconstrained);
    CHECK_FALSE(b.approximate);
    REQUIRE(b.contributors.size() == 1);
    CHECK(has_contrib(b.contributors, "r3", RuleMatrix::Side::rho, true,
                      Degree(600)));
  }
  SUBCASE("researcher at 0.2 is a tie between the facts and rule two's s") {
    BlameSet b = explain_mainly(c, "profession", "researcher");
    CHECK(b.achieved == Degree(200));
    REQUIRE(b.contributors.size() == 2);
    CHECK(has_contrib(b.contributors, "r2", RuleMatrix::Side::lambda, true,
                      Degree(200)));
    CHECK(has_contrib(b.contributors, "r2", RuleMatrix::Side::lambda, false,
                      Degree(200)));
  }
  SUBCASE("professor at 1 is unconstrained") {
    BlameSet b = explain_mainly(c, "profession", "professor");
    CHECK(b.unconstrained);
    CHECK(b.contributors.empty());
  }
  SUBCASE("others at 0.5 comes from the first rule's condition") {
    BlameSet b = explain_mainly(c, "profession", "others");
    REQUIRE(b.contributors.size() == 1);
    CHECK(has_contrib(b.contributors, "r1", RuleMatrix::Side::rho, true,
                      Degree(500)));
  }
  SUBCASE("unknown names throw") {
    CHECK_THROWS_AS(explain_mainly(c, "profession", "plumber"),
                    std::invalid_argument);
    CHECK_THROWS_AS(explain_mainly(c, "age", "professor"),
                    std::invalid_argument);
  }
}

TEST_CASE("why-at-least: exact raise set for researcher to 0.8") {
  Consultation c = advice();
  ThresholdExplanation e =
      explain_why_at_least(c, "profession", "researcher", Degree(800));
  CHECK(e.achieved == Degree(200));
  CHECK_FALSE(e.already);
  CHECK_FALSE(e.constraint.infeasible);
  REQUIRE(e.constraint.disjuncts.size() == 1);
  const auto& need = e.constraint.disjuncts[0];
  // exactly: rho_1 >= 0.8 (column 1) and lambda_2 >= 0.8 (column 2)
  REQUIRE(need.size() == 2);
  CHECK(std::find(need.begin(), need.end(),
                  AtomicBound{1, true, Degree(800)}) != need.end());
  CHECK(std::find(need.begin(), need.end(),
                  AtomicBound{2, true, Degree(800)}) != need.end());
}

TEST_CASE("why-at-least reports an already-satisfied threshold") {
  Consultation c = advice();
  ThresholdExplanation e =
      explain_why_at_least(c, "profession", "professor", Degree(700));
  CHECK(e.already);
  CHECK(e.achieved == Degree::one());
}

TEST_CASE("why-at-most: business_man cannot drop to 0.2, floor 0.3") {
  Consultation c = advice();
  ThresholdExplanation e =
      explain_why_at_most(c, "profession", "business_man", Degree(200));
  CHECK(e.achieved == Degree(600));
  CHECK_FALSE(e.already);
  CHECK(e.constraint.infeasible);
  REQUIRE(e.constraint.floor.has_value());
  CHECK(*e.constraint.floor == Degree(300));
}

TEST_CASE("why-at-most with a reachable target lists the single-column ways") {
  Consultation c = advice();
  ThresholdExplanation e =
      explain_why_at_most(c, "profession", "business_man", Degree(300));
  CHECK_FALSE(e.constraint.infeasible);
  // row (1, 1, 1, 0.4, 1, 0.3): entries <= 0.3 sit at column 5 only
  // (rho_3; the 0.4 at rho_2 exceeds t), so one way: v[5] <= 0.3
  REQUIRE(e.constraint.disjuncts.size() == 1);
  REQUIRE(e.constraint.disjuncts[0].size() == 1);
  CHECK(e.constraint.disjuncts[0][0] == AtomicBound{5, false, Degree(300)});
}

TEST_CASE("certainty: professor leads, business_man keeps necessity at 0.4") {
  Consultation c = advice();
  CertaintyView v = certainty_view(c, "profession");
  CHECK(v.attribute == "profession");
  REQUIRE(v.top_elements.size() == 1);
  CHECK(v.top_elements[0] == "professor");
  CHECK(v.height == Degree::one());
  CHECK(v.necessity == Degree(400));
  REQUIRE(v.competitors.size() == 2);
  CHECK(v.competitors[0].value == Degree(600));
  CHECK(v.competitors[0].element == "business_man");
  CHECK(has_contrib(v.competitors[0].blame.contributors, "r3",
                    RuleMatrix::Side::rho, true, Degree(600)));
  CHECK(v.competitors[1].value == Degree(500));
  CHECK(v.competitors[1].element == "others");
}

TEST_CASE("imprecision diagnosis: partial matches keep the verdict vague") {
  Consultation c = advice();
  ImprecisionDiagnosis d = diagnose_imprecision(c, "profession");
  CHECK_FALSE(d.precise);
  CHECK(d.height == Degree::one());
  CHECK(d.necessity == Degree(400));
  // the vagueness comes from conditions matching strictly between 0 and 1
  REQUIRE(d.partial_matches.size() == 2);
  CHECK(has_contrib(d.partial_matches, "r3", RuleMatrix::Side::rho, true,
                    Degree(600)));
  CHECK(has_contrib(d.partial_matches, "r1", RuleMatrix::Side::rho, true,
                    Degree(500)));
  CHECK(d.vacuous_rules.empty());
  CHECK(d.conflict_terms.empty());
  CHECK(d.rule_slack.empty());
}

TEST_CASE("imprecision diagnosis: vacuous rules and rule slack show up") {
  // one rule with an unknown condition (vacuous) and one with high r
  const char* kb_text = R"(DOMAIN yesno yes no
DOMAIN jobs a b c
ATTRIBUTE known yesno CLOSED
ATTRIBUTE mystery yesno CLOSED
ATTRIBUTE job jobs CLOSED
TERM yes known yes=1
TERM yes mystery yes=1
RULE sure
  IF known IS yes
  THEN job IN a
  WITH r=0.7
END
RULE foggy
  IF mystery IS yes
  THEN job IN b
  WITH r=0.2
END
)";
  KbParse kb = parse_kb(kb_text, "t.kb");
  REQUIRE(kb.ok());
  FactsParse facts = parse_facts("FACT known yes=1\n", "f", *kb.kb);
  REQUIRE(facts.ok());
  Consultation c = run_layers(kb.kb->compiled, facts.facts->map());

  // job: a = 1, b = c = 0.7, all capped by sure's exception level; foggy
  // contributes nothing because its condition is entirely unknown
  ImprecisionDiagnosis d = diagnose_imprecision(c, "job");
  CHECK_FALSE(d.precise);
  REQUIRE(d.vacuous_rules.size() == 1);
  CHECK(d.vacuous_rules[0] == "foggy");
  CHECK(has_contrib(d.rule_slack, "sure", RuleMatrix::Side::rho, false,
                    Degree(700)));
}

TEST_CASE("a crisp certain conclusion diagnoses as precise") {
  const char* kb_text = R"(DOMAIN yesno yes no
DOMAIN jobs a b
ATTRIBUTE known yesno CLOSED
ATTRIBUTE job jobs CLOSED
TERM yes known yes=1
RULE sure
  IF known IS yes
  THEN job IN a
END
)";
  KbParse kb = parse_kb(kb_text, "t.kb");
  REQUIRE(kb.ok());
  FactsParse facts = parse_facts("FACT known yes=1\n", "f", *kb.kb);
  REQUIRE(facts.ok());
  Consultation c = run_layers(kb.kb->compiled, facts.facts->map());
  ImprecisionDiagnosis d = diagnose_imprecision(c, "job");
  CHECK(d.precise);
  CHECK(d.necessity == Degree::one());
}

TEST_CASE("surprise against a stated belief") {
  Consultation c = advice();
  KbParse kb = parse_kb(slurp(data_path("professions.kb")), "professions.kb");
  REQUIRE(kb.ok());
  BeliefParse b =
      parse_belief(slurp(data_path("peter.belief")), "peter.belief", *kb.kb);
  REQUIRE(b.ok());

  SurpriseView v =
      surprise_view(c, "profession", b.belief->entry("profession")->belief);
  CHECK(v.consistency == Degree(200));
  CHECK(v.surprise == Degree(800));
  CHECK(v.witness_element == "researcher");
  CHECK(v.blame.achieved == Degree(200));

  // believing the top element is not surprising at all
  auto dom = c.distribution_for("profession")->domain();
  SurpriseView calm =
      surprise_view(c, "profession", FuzzySubset::crisp(dom, {"professor"}));
  CHECK(calm.surprise == Degree::zero());

  // mismatched domain throws
  auto other = Domain::make("other", {"x"});
  CHECK_THROWS_AS(
      surprise_view(c, "profession", FuzzySubset::crisp(other, {"x"})),
      std::invalid_argument);
}

TEST_CASE("how-trace collects the group and its sources in first-use order") {
  Consultation c = advice();
  HowTrace t = trace_how(c, "profession");
  REQUIRE(t.group);
  CHECK(t.group->attribute == "profession");
  REQUIRE(t.sources.size() == 4);
  CHECK(t.sources[0].attribute == "likes_meeting_people");
  CHECK(t.sources[1].attribute == "fond_of_creation");
  CHECK(t.sources[2].attribute == "job_security");
  CHECK(t.sources[3].attribute == "intellectual_speculation");
  for (const HowSource& s : t.sources) {
    CHECK_FALSE(s.derived);
    CHECK_FALSE(s.defaulted);
    REQUIRE(s.distribution);
  }
  CHECK_THROWS_AS(trace_how(c, "job_security"), std::invalid_argument);
}

TEST_CASE("sensitivity: response curves for the reference case") {
  Consultation c = advice();

  SUBCASE("professor against rule two failing is max(0.4, x)") {
    SensitivityView v = sensitivity_view(c, "profession", "professor", "r2",
                                         RuleMatrix::Side::rho);
    CHECK(v.column == 3);
    CHECK(v.current_input == Degree::one());
    CHECK(v.current_value == Degree::one());
    CHECK(v.curve.entry == Degree(400));
    CHECK(v.curve.cap == Degree::one());
    CHECK(v.curve.at(Degree::zero()) == Degree(400));
    CHECK(v.curve.at(Degree(700)) == Degree(700));
  }
  SUBCASE("researcher against rule two holding saturates at 0.5") {
    SensitivityView v = sensitivity_view(c, "profession", "researcher", "r2",
                                         RuleMatrix::Side::lambda);
    CHECK(v.column == 2);
    CHECK(v.current_input == Degree(200));
    CHECK(v.current_value == Degree(200));
    CHECK(v.curve.entry == Degree(200));
    CHECK(v.curve.cap == Degree(500));
    CHECK(v.curve.breakpoints() ==
          std::vector<Degree>{Degree(200), Degree(500)});
  }
  SUBCASE("unknown rule throws") {
    CHECK_THROWS_AS(sensitivity_view(c, "profession", "professor", "nope",
                                     RuleMatrix::Side::rho),
                    std::invalid_argument);
  }
}

TEST_CASE("column phrases use the authored wording") {
  Consultation c = advice();
  const GroupRecord* g = c.group_for("profession");
  REQUIRE(g);
  CHECK(column_phrase(*g, 0, RuleMatrix::Side::lambda) ==
        "the person likes meeting people");
  CHECK(column_phrase(*g, 0, RuleMatrix::Side::rho) ==
        "the person does not like meeting people");
}

TEST_CASE("every explanation survives the serialize-replay round trip") {
  Consultation live = advice();
  Consultation replayed = consultation_from_trace(consultation_to_trace(live));

  // identical traces byte for byte
  CHECK(consultation_to_trace(replayed) == consultation_to_trace(live));

  // and identical answers
  BlameSet b1 = explain_mainly(live, "profession", "business_man");
  BlameSet b2 = explain_mainly(replayed, "profession", "business_man");
  CHECK(b1.contributors == b2.contributors);
  CHECK(b1.achieved == b2.achieved);

  ThresholdExplanation t1 =
      explain_why_at_least(live, "profession", "researcher", Degree(800));
  ThresholdExplanation t2 =
      explain_why_at_least(replayed, "profession", "researcher", Degree(800));
  CHECK(t1.constraint.disjuncts == t2.constraint.disjuncts);

  CertaintyView v1 = certainty_view(live, "profession");
  CertaintyView v2 = certainty_view(replayed, "profession");
  CHECK(v1.necessity == v2.necessity);
  REQUIRE(v1.competitors.size() == v2.competitors.size());
  for (std::size_t i = 0; i < v1.competitors.size(); ++i) {
    CHECK(v1.competitors[i].element == v2.competitors[i].element);
    CHECK(v1.competitors[i].value == v2.competitors[i].value);
  }

  SensitivityView s1 = sensitivity_view(live, "profession", "researcher", "r2",
                                        RuleMatrix::Side::lambda);
  SensitivityView s2 = sensitivity_view(replayed, "profession", "researcher",
                                        "r2", RuleMatrix::Side::lambda);
  CHECK(s1.curve.entry == s2.curve.entry);
  CHECK(s1.curve.cap == s2.curve.cap);
}
