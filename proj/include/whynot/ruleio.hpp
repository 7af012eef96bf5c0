#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "whynot/core.hpp"
#include "whynot/engine.hpp"

namespace whynot {

// Reserved catch-all element appended to every open-world attribute domain.
inline constexpr std::string_view catch_all_element = "others";

// Positioned message from parsing or validation. Errors abort loading;
// warnings (permissive subnormal facts) do not.
struct Diagnostic {
  std::string file;
  int line = 0;
  int col = 0;
  std::string code;
  std::string message;
  bool warning = false;

  std::string str() const;  // "file:line:col: code message"
};

bool has_errors(const std::vector<Diagnostic>& diagnostics);

// --- Authored knowledge-base structures --------------------------------

struct AttributeDef {
  std::string name;
  std::string domain_name;
  bool open_world = true;
  DomainPtr domain;  // effective domain (catch-all appended when open)
};

struct TermDef {
  std::string name;
  std::string attribute;
  FuzzySubset pattern;  // on the attribute's effective domain
};

enum class ConclusionKind { include, exclude, term };

struct RulePart {
  std::string attribute;
  std::string term;
  bool negated = false;
  Degree weight = Degree::one();
};

struct RuleDef {
  std::string id;
  std::vector<RulePart> parts;
  Connective connective = Connective::conjunction;
  std::string conclusion_attribute;
  ConclusionKind kind = ConclusionKind::include;
  std::vector<std::string> conclusion_elements;  // include / exclude
  std::string conclusion_term;                   // kind == term
  Degree s = Degree::one();
  Degree r = Degree::zero();
  std::string phrase_pos;
  std::string phrase_neg;
  int line = 0;  // source position, not part of identity
};

bool operator==(const RulePart& a, const RulePart& b);
bool operator==(const RuleDef& a, const RuleDef& b);

struct KnowledgeBaseFile {
  std::vector<DomainPtr> declared_domains;
  std::vector<AttributeDef> attributes;
  std::vector<TermDef> terms;
  std::vector<RuleDef> rules;

  // Folded and resolved rules ready for the engine: complementary pairs
  // merged into one two-context rule, patterns substituted. Derived from the
  // authored rules, excluded from equality.
  std::vector<UncertainRule> compiled;

  const AttributeDef* attribute(std::string_view name) const;
  const TermDef* term(std::string_view attribute, std::string_view name) const;
  bool concludes(std::string_view attribute) const;
};

bool operator==(const KnowledgeBaseFile& a, const KnowledgeBaseFile& b);

struct KbParse {
  std::optional<KnowledgeBaseFile> kb;
  std::vector<Diagnostic> diagnostics;
  bool ok() const { return kb.has_value() && !has_errors(diagnostics); }
};

KbParse parse_kb(std::string_view text, const std::string& filename);

// --- Facts and beliefs ---------------------------------------------------

struct FactEntry {
  std::string attribute;
  PossibilityDistribution distribution;
  bool unknown_form = false;  // authored as UNKNOWN
};

struct FactsFile {
  std::vector<FactEntry> entries;
  FactMap map() const;
};

bool operator==(const FactsFile& a, const FactsFile& b);

struct FactsParse {
  std::optional<FactsFile> facts;
  std::vector<Diagnostic> diagnostics;
  bool ok() const { return facts.has_value() && !has_errors(diagnostics); }
};

// Facts are rejected when subnormal unless permissive (then flagged by a
// warning) and when their attribute is concluded by a rule.
FactsParse parse_facts(std::string_view text, const std::string& filename,
                       const KnowledgeBaseFile& kb, bool permissive = false);

struct BeliefEntry {
  std::string attribute;
  FuzzySubset belief;  // normalized
};

struct BeliefFile {
  std::vector<BeliefEntry> entries;
  const BeliefEntry* entry(std::string_view attribute) const;
};

struct BeliefParse {
  std::optional<BeliefFile> belief;
  std::vector<Diagnostic> diagnostics;
  bool ok() const { return belief.has_value() && !has_errors(diagnostics); }
};

BeliefParse parse_belief(std::string_view text, const std::string& filename,
                         const KnowledgeBaseFile& kb);

// Domain resolver variant, used when replaying a recorded consultation
// without the knowledge base at hand.
using DomainLookup = std::function<DomainPtr(const std::string& attribute)>;
BeliefParse parse_belief(std::string_view text, const std::string& filename,
                         const DomainLookup& lookup);

// --- Canonical serialization --------------------------------------------

// Byte-deterministic canonical text. parse(serialize(x)) == x structurally;
// author sugar (OTHERWISE clauses, omitted defaults) is normalized away.
std::string serialize(const KnowledgeBaseFile& kb);
std::string serialize(const FactsFile& facts);
std::string serialize(const BeliefFile& belief);

}  // namespace whynot
