#include "whynot/ruleio.hpp"

#include <fstream>
#include <sstream>
#include <string>

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

bool has_code(const std::vector<Diagnostic>& diags, std::string_view code) {
  for (const Diagnostic& d : diags)
    if (d.code == code) return true;
  return false;
}

const char* tiny_kb = R"(DOMAIN yesno yes no
ATTRIBUTE flag yesno CLOSED
ATTRIBUTE verdict yesno CLOSED
TERM yes flag yes=1
RULE main
  IF flag IS yes
  THEN verdict IN yes
  WITH r=0.2
END
)";

}  // namespace

TEST_CASE("shipped knowledge base loads, folds the complementary pair") {
  KbParse p = parse_kb(slurp(data_path("professions.kb")), "professions.kb");
  REQUIRE(p.ok());
  const KnowledgeBaseFile& kb = *p.kb;

  CHECK(kb.declared_domains.size() == 2);
  CHECK(kb.attributes.size() == 5);
  CHECK(kb.rules.size() == 4);  // authored, pre-fold
  REQUIRE(kb.compiled.size() == 3);

  const AttributeDef* prof = kb.attribute("profession");
  REQUIRE(prof);
  CHECK(prof->open_world);
  CHECK(prof->domain->size() == 8);  // seven declared + catch-all
  CHECK(prof->domain->elements().back() == std::string(catch_all_element));

  const AttributeDef* meet = kb.attribute("likes_meeting_people");
  REQUIRE(meet);
  CHECK_FALSE(meet->open_world);
  CHECK(meet->domain->size() == 2);

  // folded pair: the include rule absorbs its exclude partner's r as s
  const UncertainRule& r2 = kb.compiled[1];
  CHECK(r2.id == "r2");
  CHECK(r2.merged_from == "r2_prime");
  CHECK(r2.s == Degree(200));
  CHECK(r2.r == Degree(400));

  const UncertainRule& r1 = kb.compiled[0];
  CHECK(r1.id == "r1");
  CHECK(r1.merged_from.empty());
  CHECK(r1.s == Degree::one());
  CHECK(r1.r == Degree(300));
  CHECK(r1.conclusion.support().size() == 4);

  const UncertainRule& r3 = kb.compiled[2];
  CHECK(r3.condition.parts.size() == 2);
  CHECK(r3.condition.connective == Connective::conjunction);

  CHECK(kb.concludes("profession"));
  CHECK_FALSE(kb.concludes("job_security"));
}

TEST_CASE("shipped facts load and map") {
  KbParse p = parse_kb(slurp(data_path("professions.kb")), "professions.kb");
  REQUIRE(p.ok());
  FactsParse f =
      parse_facts(slurp(data_path("peter.facts")), "peter.facts", *p.kb);
  REQUIRE(f.ok());
  CHECK(f.facts->entries.size() == 4);
  FactMap m = f.facts->map();
  auto it = m.find("fond_of_creation");
  REQUIRE(it != m.end());
  CHECK(it->second.pi() == std::vector<Degree>{Degree(200), Degree::one()});
}

TEST_CASE("kb parse round trip: serialize then parse is structurally identical") {
  KbParse p1 = parse_kb(slurp(data_path("professions.kb")), "professions.kb");
  REQUIRE(p1.ok());
  std::string canon = serialize(*p1.kb);
  KbParse p2 = parse_kb(canon, "canon.kb");
  REQUIRE(p2.ok());
  CHECK(*p1.kb == *p2.kb);
  // serialization is a fixed point
  CHECK(serialize(*p2.kb) == canon);
}

TEST_CASE("facts and beliefs round trip the same way") {
  KbParse p = parse_kb(slurp(data_path("professions.kb")), "professions.kb");
  REQUIRE(p.ok());

  FactsParse f1 =
      parse_facts(slurp(data_path("peter.facts")), "peter.facts", *p.kb);
  REQUIRE(f1.ok());
  std::string canon = serialize(*f1.facts);
  FactsParse f2 = parse_facts(canon, "canon.facts", *p.kb);
  REQUIRE(f2.ok());
  CHECK(*f1.facts == *f2.facts);
  CHECK(serialize(*f2.facts) == canon);

  BeliefParse b1 =
      parse_belief(slurp(data_path("peter.belief")), "peter.belief", *p.kb);
  REQUIRE(b1.ok());
  REQUIRE(b1.belief->entries.size() == 1);
  CHECK(b1.belief->entries[0].attribute == "profession");
  std::string bcanon = serialize(*b1.belief);
  BeliefParse b2 = parse_belief(bcanon, "canon.belief", *p.kb);
  REQUIRE(b2.ok());
  CHECK(serialize(*b2.belief) == bcanon);
}

TEST_CASE("minimal kb accepted, basics compiled") {
  KbParse p = parse_kb(tiny_kb, "tiny.kb");
  REQUIRE(p.ok());
  REQUIRE(p.kb->compiled.size() == 1);
  const UncertainRule& r = p.kb->compiled[0];
  CHECK(r.s == Degree::one());
  CHECK(r.r == Degree(200));
  REQUIRE(r.condition.parts.size() == 1);
  CHECK(r.condition.parts[0].pattern ==
        FuzzySubset::crisp(p.kb->attribute("flag")->domain, {"yes"}));
}

TEST_CASE("OTHERWISE is sugar for s on the same rule") {
  const char* text = R"(DOMAIN yesno yes no
ATTRIBUTE flag yesno CLOSED
ATTRIBUTE verdict yesno CLOSED
TERM yes flag yes=1
RULE main
  IF flag IS yes
  THEN verdict IN yes
  WITH r=0.2
  OTHERWISE r=0.6
END
)";
  KbParse p = parse_kb(text, "t.kb");
  REQUIRE(p.ok());
  REQUIRE(p.kb->compiled.size() == 1);
  CHECK(p.kb->compiled[0].s == Degree(600));
  CHECK(p.kb->compiled[0].r == Degree(200));
  // normalization rewrites the sugar as plain s=
  CHECK(serialize(*p.kb).find("OTHERWISE") == std::string::npos);
  CHECK(serialize(*p.kb).find("s=0.6") != std::string::npos);
}

TEST_CASE("diagnostics carry file, line and column") {
  KbParse p = parse_kb("DOMAIN d a a\n", "bad.kb");
  CHECK_FALSE(p.ok());
  REQUIRE_FALSE(p.diagnostics.empty());
  const Diagnostic& d = p.diagnostics[0];
  CHECK(d.file == "bad.kb");
  CHECK(d.line == 1);
  CHECK(d.col == 12);
  CHECK(d.code == "dup-name");
  CHECK(d.str() == "bad.kb:1:12: dup-name duplicate element 'a'");
}

TEST_CASE("each rejection has its own diagnostic code") {
  auto diag_for = [](std::string text) {
    KbParse p = parse_kb(text, "t.kb");
    REQUIRE_FALSE(p.diagnostics.empty());
    return p.diagnostics;
  };
  std::string prelude = R"(DOMAIN yesno yes no
ATTRIBUTE flag yesno CLOSED
ATTRIBUTE verdict yesno CLOSED
TERM yes flag yes=1
)";

  SUBCASE("syntax") {
    CHECK(has_code(diag_for("DOMAIN\n"), "syntax"));
    CHECK(has_code(diag_for(prelude + "RULE r\n  IF flag yes\nEND\n"),
                   "syntax"));
  }
  SUBCASE("unknown-name") {
    CHECK(has_code(diag_for("ATTRIBUTE a nowhere CLOSED\n"), "unknown-name"));
    CHECK(has_code(diag_for(prelude + "TERM t missing yes=1\n"),
                   "unknown-name"));
    CHECK(has_code(
        diag_for(prelude + "RULE r\n  IF missing IS yes\n  THEN verdict IN yes\nEND\n"),
        "unknown-name"));
  }
  SUBCASE("dup-name") {
    CHECK(has_code(diag_for("DOMAIN d x y\nDOMAIN d x\n"), "dup-name"));
    CHECK(has_code(
        diag_for("DOMAIN d x\nATTRIBUTE a d CLOSED\nATTRIBUTE a d CLOSED\n"),
        "dup-name"));
  }
  SUBCASE("reserved-element") {
    CHECK(has_code(diag_for("DOMAIN d others x\n"), "reserved-element"));
    CHECK(has_code(
        diag_for(prelude +
                 "ATTRIBUTE job yesno OPEN\nRULE r\n  IF flag IS yes\n  THEN job IN others\nEND\n"),
        "reserved-element"));
  }
  SUBCASE("bad-degree") {
    CHECK(has_code(diag_for(prelude + "TERM t flag yes=1.5\n"), "bad-degree"));
  }
  SUBCASE("bad-weights") {
    CHECK(has_code(
        diag_for(prelude +
                 "RULE r\n  IF flag IS yes WEIGHT 0.4\n  THEN verdict IN yes\nEND\n"),
        "bad-weights"));
  }
  SUBCASE("mixed-connective") {
    std::string text = prelude +
                       "RULE r\n  IF flag IS yes\n  AND flag IS yes\n  OR flag IS yes\n"
                       "  THEN verdict IN yes\nEND\n";
    CHECK(has_code(diag_for(text), "mixed-connective"));
  }
  SUBCASE("incomplete-rule") {
    CHECK(has_code(diag_for(prelude + "RULE r\n  IF flag IS yes\nEND\n"),
                   "incomplete-rule"));
    CHECK(has_code(diag_for(prelude + "RULE r\n  THEN verdict IN yes\nEND\n"),
                   "incomplete-rule"));
  }
  SUBCASE("conflicting-uncertainty") {
    std::string text = prelude +
                       "RULE r\n  IF flag IS yes\n  THEN verdict IN yes\n"
                       "  WITH s=0.5\n  OTHERWISE r=0.6\nEND\n";
    CHECK(has_code(diag_for(text), "conflicting-uncertainty"));
  }
  SUBCASE("misplaced") {
    CHECK(has_code(diag_for("FACT flag yes=1\n"), "misplaced"));
  }
  SUBCASE("subnormal-conclusion") {
    // a term capped below 1 can never be concluded
    std::string low_term = prelude +
                           "TERM weak verdict yes=0.5\n"
                           "RULE r\n  IF flag IS yes\n  THEN verdict IS weak\nEND\n";
    CHECK(has_code(diag_for(low_term), "subnormal-conclusion"));
    // concluding the entire domain says nothing and caps everything
    std::string whole = prelude +
                        "RULE r\n  IF flag IS yes\n  THEN verdict IN yes no\nEND\n";
    CHECK(has_code(diag_for(whole), "subnormal-conclusion"));
    std::string none = prelude +
                       "RULE r\n  IF flag IS yes\n  THEN verdict NOT_IN yes no\nEND\n";
    CHECK(has_code(diag_for(none), "subnormal-conclusion"));
  }
}

TEST_CASE("folding requires exact complementarity") {
  std::string prelude = R"(DOMAIN yesno yes no
DOMAIN jobs a b c
ATTRIBUTE flag yesno CLOSED
ATTRIBUTE job jobs CLOSED
TERM yes flag yes=1
)";

  SUBCASE("complementary pair folds") {
    std::string text = prelude + R"(RULE inc
  IF flag IS yes
  THEN job IN a b
  WITH r=0.3
END
RULE exc
  IF flag IS NOT yes
  THEN job NOT_IN a b
  WITH r=0.1
END
)";
    KbParse p = parse_kb(text, "t.kb");
    REQUIRE(p.ok());
    REQUIRE(p.kb->compiled.size() == 1);
    CHECK(p.kb->compiled[0].id == "inc");
    CHECK(p.kb->compiled[0].merged_from == "exc");
    CHECK(p.kb->compiled[0].s == Degree(100));
    CHECK(p.kb->compiled[0].r == Degree(300));
  }
  SUBCASE("different element sets do not fold") {
    std::string text = prelude + R"(RULE inc
  IF flag IS yes
  THEN job IN a b
END
RULE exc
  IF flag IS NOT yes
  THEN job NOT_IN a
END
)";
    KbParse p = parse_kb(text, "t.kb");
    REQUIRE(p.ok());
    CHECK(p.kb->compiled.size() == 2);
  }
  SUBCASE("same polarity does not fold") {
    std::string text = prelude + R"(RULE inc
  IF flag IS yes
  THEN job IN a b
END
RULE exc
  IF flag IS yes
  THEN job NOT_IN a b
END
)";
    KbParse p = parse_kb(text, "t.kb");
    REQUIRE(p.ok());
    CHECK(p.kb->compiled.size() == 2);
  }
  SUBCASE("explicit s fighting the partner's r is flagged") {
    std::string text = prelude + R"(RULE inc
  IF flag IS yes
  THEN job IN a b
  WITH s=0.9 r=0.3
END
RULE exc
  IF flag IS NOT yes
  THEN job NOT_IN a b
  WITH r=0.1
END
)";
    KbParse p = parse_kb(text, "t.kb");
    CHECK_FALSE(p.ok());
    CHECK(has_code(p.diagnostics, "conflicting-uncertainty"));
  }
  SUBCASE("element order inside the conclusion does not matter") {
    std::string text = prelude + R"(RULE inc
  IF flag IS yes
  THEN job IN a b
  WITH r=0.3
END
RULE exc
  IF flag IS NOT yes
  THEN job NOT_IN b a
  WITH r=0.1
END
)";
    KbParse p = parse_kb(text, "t.kb");
    REQUIRE(p.ok());
    CHECK(p.kb->compiled.size() == 1);
    CHECK(p.kb->compiled[0].s == Degree(100));
  }
}

TEST_CASE("standalone exclude rules compile against the complement") {
  std::string text = R"(DOMAIN yesno yes no
DOMAIN jobs a b c
ATTRIBUTE flag yesno CLOSED
ATTRIBUTE job jobs CLOSED
TERM yes flag yes=1
RULE exc
  IF flag IS yes
  THEN job NOT_IN a
  WITH r=0.2
END
)";
  KbParse p = parse_kb(text, "t.kb");
  REQUIRE(p.ok());
  REQUIRE(p.kb->compiled.size() == 1);
  const UncertainRule& r = p.kb->compiled[0];
  CHECK(r.conclusion.support() == std::vector<std::size_t>{1, 2});
  CHECK(r.r == Degree(200));
}

TEST_CASE("facts validation") {
  KbParse p = parse_kb(tiny_kb, "tiny.kb");
  REQUIRE(p.ok());

  SUBCASE("unknown attribute") {
    FactsParse f = parse_facts("FACT missing yes=1\n", "f", *p.kb);
    CHECK_FALSE(f.ok());
    CHECK(has_code(f.diagnostics, "unknown-name"));
  }
  SUBCASE("unknown element") {
    FactsParse f = parse_facts("FACT flag maybe=1\n", "f", *p.kb);
    CHECK_FALSE(f.ok());
    CHECK(has_code(f.diagnostics, "unknown-name"));
  }
  SUBCASE("concluded attributes cannot be asserted") {
    FactsParse f = parse_facts("FACT verdict yes=1\n", "f", *p.kb);
    CHECK_FALSE(f.ok());
    CHECK(has_code(f.diagnostics, "fact-for-derived"));
  }
  SUBCASE("duplicate fact") {
    FactsParse f = parse_facts("FACT flag yes=1\nFACT flag no=1\n", "f", *p.kb);
    CHECK_FALSE(f.ok());
    CHECK(has_code(f.diagnostics, "dup-name"));
  }
  SUBCASE("subnormal fact is an error by default, a warning when permissive") {
    FactsParse strict = parse_facts("FACT flag yes=0.5\n", "f", *p.kb);
    CHECK_FALSE(strict.ok());
    CHECK(has_code(strict.diagnostics, "subnormal-fact"));

    FactsParse loose = parse_facts("FACT flag yes=0.5\n", "f", *p.kb, true);
    CHECK(loose.ok());
    REQUIRE(loose.diagnostics.size() == 1);
    CHECK(loose.diagnostics[0].warning);
    CHECK(loose.diagnostics[0].code == "subnormal-fact");
  }
  SUBCASE("UNKNOWN form and omitted elements") {
    FactsParse f = parse_facts("FACT flag UNKNOWN\n", "f", *p.kb);
    REQUIRE(f.ok());
    CHECK(f.facts->entries[0].unknown_form);
    CHECK(f.facts->entries[0].distribution ==
          PossibilityDistribution::ignorance(p.kb->attribute("flag")->domain));

    // unlisted elements default to possibility zero
    FactsParse g = parse_facts("FACT flag yes=1\n", "f", *p.kb);
    REQUIRE(g.ok());
    CHECK(g.facts->entries[0].distribution.pi() ==
          std::vector<Degree>{Degree::one(), Degree::zero()});
  }
  SUBCASE("rule text inside a facts file") {
    FactsParse f = parse_facts("RULE r\n", "f", *p.kb);
    CHECK_FALSE(f.ok());
    CHECK(has_code(f.diagnostics, "misplaced"));
  }
}

TEST_CASE("belief files must be normalized fuzzy events") {
  KbParse p = parse_kb(tiny_kb, "tiny.kb");
  REQUIRE(p.ok());
  BeliefParse ok = parse_belief("BELIEF flag yes=1 no=0.3\n", "b", *p.kb);
  REQUIRE(ok.ok());
  CHECK(ok.belief->entry("flag")->belief.mu() ==
        std::vector<Degree>{Degree::one(), Degree(300)});

  BeliefParse bad = parse_belief("BELIEF flag yes=0.4\n", "b", *p.kb);
  CHECK_FALSE(bad.ok());
  CHECK(has_code(bad.diagnostics, "bad-belief"));
}

TEST_CASE("comments and blank lines are ignored everywhere") {
  std::string text = R"(# header comment
DOMAIN yesno yes no   # trailing comment

ATTRIBUTE flag yesno CLOSED
ATTRIBUTE verdict yesno CLOSED
TERM yes flag yes=1
RULE main
  # inside a rule
  IF flag IS yes
  THEN verdict IN yes
END
)";
  KbParse p = parse_kb(text, "t.kb");
  CHECK(p.ok());
}

TEST_CASE("names must be declared before use") {
  std::string text = R"(ATTRIBUTE flag yesno CLOSED
DOMAIN yesno yes no
)";
  KbParse p = parse_kb(text, "t.kb");
  CHECK_FALSE(p.ok());
  CHECK(has_code(p.diagnostics, "unknown-name"));
}

TEST_CASE("cyclic attribute dependencies are a parse-time error") {
  std::string text = R"(DOMAIN yesno yes no
ATTRIBUTE p yesno CLOSED
ATTRIBUTE q yesno CLOSED
TERM yes p yes=1
TERM yes q yes=1
RULE a
  IF p IS yes
  THEN q IN yes
END
RULE b
  IF q IS yes
  THEN p IN yes
END
)";
  KbParse p = parse_kb(text, "t.kb");
  CHECK_FALSE(p.ok());
  CHECK(has_code(p.diagnostics, "cycle"));
}
