#include "whynot/ruleio.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <sstream>

namespace whynot {

std::string Diagnostic::str() const {
  std::ostringstream os;
  os << file << ':' << line << ':' << col << ": " << code << ' ' << message;
  return os.str();
}

bool has_errors(const std::vector<Diagnostic>& diagnostics) {
  return std::any_of(diagnostics.begin(), diagnostics.end(),
                     [](const Diagnostic& d) { return !d.warning; });
}

bool operator==(const RulePart& a, const RulePart& b) {
  return a.attribute == b.attribute && a.term == b.term &&
         a.negated == b.negated && a.weight == b.weight;
}

bool operator==(const RuleDef& a, const RuleDef& b) {
  return a.id == b.id && a.parts == b.parts && a.connective == b.connective &&
         a.conclusion_attribute == b.conclusion_attribute && a.kind == b.kind &&
         a.conclusion_elements == b.conclusion_elements &&
         a.conclusion_term == b.conclusion_term && a.s == b.s && a.r == b.r &&
         a.phrase_pos == b.phrase_pos && a.phrase_neg == b.phrase_neg;
}

const AttributeDef* KnowledgeBaseFile::attribute(std::string_view name) const {
  for (const AttributeDef& a : attributes)
    if (a.name == name) return &a;
  return nullptr;
}

const TermDef* KnowledgeBaseFile::term(std::string_view attribute,
                                       std::string_view name) const {
  for (const TermDef& t : terms)
    if (t.attribute == attribute && t.name == name) return &t;
  return nullptr;
}

bool KnowledgeBaseFile::concludes(std::string_view attribute) const {
  for (const UncertainRule& r : compiled)
    if (r.conclusion_attribute == attribute) return true;
  return false;
}

bool operator==(const KnowledgeBaseFile& a, const KnowledgeBaseFile& b) {
  if (a.declared_domains.size() != b.declared_domains.size()) return false;
  for (std::size_t i = 0; i < a.declared_domains.size(); ++i)
    if (!(*a.declared_domains[i] == *b.declared_domains[i])) return false;
  if (a.attributes.size() != b.attributes.size()) return false;
  for (std::size_t i = 0; i < a.attributes.size(); ++i) {
    const AttributeDef& x = a.attributes[i];
    const AttributeDef& y = b.attributes[i];
    if (x.name != y.name || x.domain_name != y.domain_name ||
        x.open_world != y.open_world || !(*x.domain == *y.domain))
      return false;
  }
  if (a.terms.size() != b.terms.size()) return false;
  for (std::size_t i = 0; i < a.terms.size(); ++i) {
    const TermDef& x = a.terms[i];
    const TermDef& y = b.terms[i];
    if (x.name != y.name || x.attribute != y.attribute ||
        !(x.pattern == y.pattern))
      return false;
  }
  return a.rules == b.rules;
}

FactMap FactsFile::map() const {
  FactMap m;
  for (const FactEntry& e : entries) m.emplace(e.attribute, e.distribution);
  return m;
}

bool operator==(const FactsFile& a, const FactsFile& b) {
  if (a.entries.size() != b.entries.size()) return false;
  for (std::size_t i = 0; i < a.entries.size(); ++i) {
    if (a.entries[i].attribute != b.entries[i].attribute) return false;
    if (!(a.entries[i].distribution == b.entries[i].distribution)) return false;
  }
  return true;
}

const BeliefEntry* BeliefFile::entry(std::string_view attribute) const {
  for (const BeliefEntry& e : entries)
    if (e.attribute == attribute) return &e;
  return nullptr;
}

// --- Tokenizer -----------------------------------------------------------

namespace {

struct Token {
  std::string text;
  int col = 0;  // 1-based
  bool quoted = false;
};

bool ident_ok(std::string_view s) {
  if (s.empty()) return false;
  if (!std::isalpha(static_cast<unsigned char>(s[0])) && s[0] != '_')
    return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  });
}

class Emitter {
 public:
  Emitter(std::string file, std::vector<Diagnostic>& diags)
      : file_(std::move(file)), diags_(diags) {}

  void error(int line, int col, std::string code, std::string message) {
    diags_.push_back(Diagnostic{file_, line, col, std::move(code),
                                std::move(message), false});
  }
  void warn(int line, int col, std::string code, std::string message) {
    diags_.push_back(Diagnostic{file_, line, col, std::move(code),
                                std::move(message), true});
  }

 private:
  std::string file_;
  std::vector<Diagnostic>& diags_;
};

// Splits one line into tokens; quoted strings become single tokens, '#'
// outside quotes starts a comment. Returns false on lexical trouble.
bool tokenize(const std::string& line, int lineno, Emitter& em,
              std::vector<Token>& out) {
  out.clear();
  std::size_t i = 0;
  while (i < line.size()) {
    char c = line[i];
    if (c == ' ' || c == '\t' || c == '\r') {
      ++i;
      continue;
    }
    if (c == '#') break;
    int col = static_cast<int>(i) + 1;
    if (c == '"') {
      std::size_t close = line.find('"', i + 1);
      if (close == std::string::npos) {
        em.error(lineno, col, "syntax", "unterminated string");
        return false;
      }
      out.push_back(Token{line.substr(i + 1, close - i - 1), col, true});
      i = close + 1;
      continue;
    }
    std::size_t end = i;
    while (end < line.size() && !std::isspace(static_cast<unsigned char>(line[end])) &&
           line[end] != '#' && line[end] != '"')
      ++end;
    out.push_back(Token{line.substr(i, end - i), col, false});
    i = end;
  }
  return true;
}

// elem=degree assignments
struct Assignment {
  std::string key;
  Degree value;
  int col = 0;
};

std::optional<Assignment> parse_assignment(const Token& tok, int lineno,
                                           Emitter& em) {
  auto eq = tok.text.find('=');
  if (eq == std::string::npos || tok.quoted) {
    em.error(lineno, tok.col, "syntax",
             "expected name=degree, got '" + tok.text + "'");
    return std::nullopt;
  }
  std::string key = tok.text.substr(0, eq);
  std::string val = tok.text.substr(eq + 1);
  if (!ident_ok(key)) {
    em.error(lineno, tok.col, "syntax", "bad name in assignment '" + tok.text + "'");
    return std::nullopt;
  }
  auto d = Degree::parse(val);
  if (!d) {
    em.error(lineno, tok.col + static_cast<int>(eq) + 1, "bad-degree",
             "degree '" + val + "' is not a decimal in [0,1] with at most "
             "three fractional digits");
    return std::nullopt;
  }
  return Assignment{std::move(key), *d, tok.col};
}

// --- Raw rule block ------------------------------------------------------

struct RawRule {
  std::string id;
  int line = 0;
  std::vector<RulePart> parts;
  std::vector<int> part_lines;
  bool has_or = false, has_and = false;
  bool seen_then = false;
  std::string conclusion_attribute;
  ConclusionKind kind = ConclusionKind::include;
  std::vector<std::string> conclusion_elements;
  std::string conclusion_term;
  int then_line = 0, then_col = 0;
  std::optional<Degree> s, r, otherwise_s;
  int with_line = 0;
  std::string phrase_pos, phrase_neg;
  bool broken = false;  // parse errors inside the block
};

class KbParser {
 public:
  KbParser(const std::string& filename, std::vector<Diagnostic>& diags)
      : em_(filename, diags) {}

  void feed(const std::string& line, int lineno) {
    std::vector<Token> toks;
    if (!tokenize(line, lineno, em_, toks)) {
      if (rule_) rule_->broken = true;
      return;
    }
    if (toks.empty()) return;
    const std::string& head = toks[0].text;
    if (rule_) {
      rule_line(toks, lineno);
      return;
    }
    if (head == "DOMAIN") parse_domain(toks, lineno);
    else if (head == "ATTRIBUTE") parse_attribute(toks, lineno);
    else if (head == "TERM") parse_term(toks, lineno);
    else if (head == "RULE") open_rule(toks, lineno);
    else if (head == "FACT" || head == "BELIEF")
      em_.error(lineno, toks[0].col, "misplaced",
                head + " lines belong in a separate file, not the knowledge base");
    else if (head == "END")
      em_.error(lineno, toks[0].col, "syntax", "END outside a RULE block");
    else
      em_.error(lineno, toks[0].col, "syntax", "unknown directive '" + head + "'");
  }

  void finish(int last_line) {
    if (rule_) {
      em_.error(rule_->line, 1, "incomplete-rule",
                "RULE " + rule_->id + " has no END");
      (void)last_line;
      rule_.reset();
    }
    fold_and_compile();
    check_cycles();
  }

  KnowledgeBaseFile take() { return std::move(kb_); }

 private:
  Emitter em_;
  KnowledgeBaseFile kb_;
  std::optional<RawRule> rule_;
  std::vector<RawRule> raw_rules_;

  DomainPtr find_domain(std::string_view name) {
    for (const DomainPtr& d : kb_.declared_domains)
      if (d->name() == name) return d;
    return nullptr;
  }

  bool check_ident(const Token& t, int lineno, const char* what) {
    if (ident_ok(t.text)) return true;
    em_.error(lineno, t.col, "syntax",
              std::string("bad ") + what + " name '" + t.text + "'");
    return false;
  }

  void parse_domain(const std::vector<Token>& toks, int lineno) {
    if (toks.size() < 3) {
      em_.error(lineno, toks[0].col, "syntax",
                "DOMAIN needs a name and at least one element");
      return;
    }
    if (!check_ident(toks[1], lineno, "domain")) return;
    if (find_domain(toks[1].text)) {
      em_.error(lineno, toks[1].col, "dup-name",
                "domain '" + toks[1].text + "' already declared");
      return;
    }
    std::vector<std::string> elements;
    std::set<std::string> seen;
    bool bad = false;
    for (std::size_t i = 2; i < toks.size(); ++i) {
      if (!check_ident(toks[i], lineno, "element")) { bad = true; continue; }
      if (toks[i].text == catch_all_element) {
        em_.error(lineno, toks[i].col, "reserved-element",
                  "'" + std::string(catch_all_element) +
                      "' is reserved for the open-world catch-all");
        bad = true;
        continue;
      }
      if (!seen.insert(toks[i].text).second) {
        em_.error(lineno, toks[i].col, "dup-name",
                  "duplicate element '" + toks[i].text + "'");
        bad = true;
        continue;
      }
      elements.push_back(toks[i].text);
    }
    if (bad || elements.empty()) return;
    kb_.declared_domains.push_back(Domain::make(toks[1].text, std::move(elements)));
  }

  void parse_attribute(const std::vector<Token>& toks, int lineno) {
    if (toks.size() < 3 || toks.size() > 4) {
      em_.error(lineno, toks[0].col, "syntax",
                "ATTRIBUTE needs a name, a domain, and optionally OPEN or CLOSED");
      return;
    }
    if (!check_ident(toks[1], lineno, "attribute")) return;
    if (kb_.attribute(toks[1].text)) {
      em_.error(lineno, toks[1].col, "dup-name",
                "attribute '" + toks[1].text + "' already declared");
      return;
    }
    DomainPtr base = find_domain(toks[2].text);
    if (!base) {
      em_.error(lineno, toks[2].col, "unknown-name",
                "unknown domain '" + toks[2].text + "'");
      return;
    }
    bool open = true;
    if (toks.size() == 4) {
      if (toks[3].text == "OPEN") open = true;
      else if (toks[3].text == "CLOSED") open = false;
      else {
        em_.error(lineno, toks[3].col, "syntax",
                  "expected OPEN or CLOSED, got '" + toks[3].text + "'");
        return;
      }
    }
    DomainPtr effective = base;
    if (open) {
      std::vector<std::string> elems = base->elements();
      elems.emplace_back(catch_all_element);
      effective = Domain::make(base->name(), std::move(elems));
    }
    kb_.attributes.push_back(AttributeDef{toks[1].text, toks[2].text, open,
                                          std::move(effective)});
  }

  // Resolves assignment lists over a domain; missing elements get zero.
  std::optional<FuzzySubset> membership(const std::vector<Token>& toks,
                                        std::size_t first, int lineno,
                                        const DomainPtr& domain) {
    std::vector<Degree> mu(domain->size(), Degree::zero());
    std::set<std::string> seen;
    bool bad = false;
    for (std::size_t i = first; i < toks.size(); ++i) {
      auto asg = parse_assignment(toks[i], lineno, em_);
      if (!asg) { bad = true; continue; }
      auto idx = domain->index_of(asg->key);
      if (!idx) {
        em_.error(lineno, asg->col, "unknown-name",
                  "element '" + asg->key + "' is not in domain '" +
                      domain->name() + "'");
        bad = true;
        continue;
      }
      if (!seen.insert(asg->key).second) {
        em_.error(lineno, asg->col, "dup-name",
                  "element '" + asg->key + "' assigned twice");
        bad = true;
        continue;
      }
      mu[*idx] = asg->value;
    }
    if (bad) return std::nullopt;
    return FuzzySubset(domain, std::move(mu));
  }

  void parse_term(const std::vector<Token>& toks, int lineno) {
    if (toks.size() < 3) {
      em_.error(lineno, toks[0].col, "syntax",
                "TERM needs a name and an attribute");
      return;
    }
    if (!check_ident(toks[1], lineno, "term")) return;
    const AttributeDef* attr = kb_.attribute(toks[2].text);
    if (!attr) {
      em_.error(lineno, toks[2].col, "unknown-name",
                "unknown attribute '" + toks[2].text + "'");
      return;
    }
    if (kb_.term(attr->name, toks[1].text)) {
      em_.error(lineno, toks[1].col, "dup-name",
                "term '" + toks[1].text + "' already declared for attribute '" +
                    attr->name + "'");
      return;
    }
    auto pattern = membership(toks, 3, lineno, attr->domain);
    if (!pattern) return;
    kb_.terms.push_back(TermDef{toks[1].text, attr->name, std::move(*pattern)});
  }

  void open_rule(const std::vector<Token>& toks, int lineno) {
    if (toks.size() != 2 || !ident_ok(toks[1].text)) {
      em_.error(lineno, toks[0].col, "syntax", "RULE needs one identifier");
      return;
    }
    for (const RawRule& r : raw_rules_)
      if (r.id == toks[1].text) {
        em_.error(lineno, toks[1].col, "dup-name",
                  "rule '" + toks[1].text + "' already declared");
        break;
      }
    rule_.emplace();
    rule_->id = toks[1].text;
    rule_->line = lineno;
  }

  void rule_line(const std::vector<Token>& toks, int lineno) {
    const std::string& head = toks[0].text;
    if (head == "END") {
      close_rule(lineno);
      return;
    }
    if (head == "IF" || head == "AND" || head == "OR") parse_if(toks, lineno);
    else if (head == "THEN") parse_then(toks, lineno);
    else if (head == "WITH") parse_with(toks, lineno);
    else if (head == "OTHERWISE") parse_otherwise(toks, lineno);
    else if (head == "PHRASE" || head == "PHRASE_NOT") parse_phrase(toks, lineno);
    else {
      em_.error(lineno, toks[0].col, "syntax",
                "unexpected '" + head + "' inside RULE " + rule_->id);
      rule_->broken = true;
    }
  }

  void parse_if(const std::vector<Token>& toks, int lineno) {
    RawRule& r = *rule_;
    const std::string& head = toks[0].text;
    if (head == "IF" && !r.parts.empty()) {
      em_.error(lineno, toks[0].col, "syntax", "second IF in one rule");
      r.broken = true;
      return;
    }
    if (head != "IF" && r.parts.empty()) {
      em_.error(lineno, toks[0].col, "syntax", head + " before IF");
      r.broken = true;
      return;
    }
    if (head == "AND") r.has_and = true;
    if (head == "OR") r.has_or = true;
    if (r.has_and && r.has_or) {
      em_.error(lineno, toks[0].col, "mixed-connective",
                "rule " + r.id + " mixes AND and OR");
      r.broken = true;
      return;
    }
    // <head> attr IS [NOT] term [WEIGHT degree]
    std::size_t i = 1;
    if (toks.size() < i + 3 || toks[i + 1].text != "IS") {
      em_.error(lineno, toks[0].col, "syntax",
                head + " expects: " + head + " <attribute> IS [NOT] <term> "
                "[WEIGHT <degree>]");
      r.broken = true;
      return;
    }
    RulePart part;
    part.attribute = toks[i].text;
    std::size_t term_at = i + 2;
    if (toks[term_at].text == "NOT") {
      part.negated = true;
      ++term_at;
    }
    if (term_at >= toks.size()) {
      em_.error(lineno, toks[0].col, "syntax", "missing term name");
      r.broken = true;
      return;
    }
    part.term = toks[term_at].text;
    std::size_t rest = term_at + 1;
    if (rest < toks.size()) {
      if (toks[rest].text != "WEIGHT" || rest + 1 >= toks.size()) {
        em_.error(lineno, toks[rest].col, "syntax",
                  "unexpected '" + toks[rest].text + "' after term");
        r.broken = true;
        return;
      }
      auto w = Degree::parse(toks[rest + 1].text);
      if (!w) {
        em_.error(lineno, toks[rest + 1].col, "bad-degree",
                  "weight '" + toks[rest + 1].text + "' is not a decimal in [0,1]");
        r.broken = true;
        return;
      }
      part.weight = *w;
      if (rest + 2 < toks.size()) {
        em_.error(lineno, toks[rest + 2].col, "syntax", "trailing tokens");
        r.broken = true;
        return;
      }
    }
    const AttributeDef* attr = kb_.attribute(part.attribute);
    if (!attr) {
      em_.error(lineno, toks[i].col, "unknown-name",
                "unknown attribute '" + part.attribute + "'");
      r.broken = true;
      return;
    }
    if (!kb_.term(part.attribute, part.term)) {
      em_.error(lineno, toks[term_at].col, "unknown-name",
                "attribute '" + part.attribute + "' has no term '" + part.term +
                    "'");
      r.broken = true;
      return;
    }
    r.parts.push_back(std::move(part));
    r.part_lines.push_back(lineno);
  }

  void parse_then(const std::vector<Token>& toks, int lineno) {
    RawRule& r = *rule_;
    if (r.seen_then) {
      em_.error(lineno, toks[0].col, "syntax", "second THEN in one rule");
      r.broken = true;
      return;
    }
    if (toks.size() < 4) {
      em_.error(lineno, toks[0].col, "syntax",
                "THEN expects: THEN <attribute> IN|NOT_IN <elements> or THEN "
                "<attribute> IS <term>");
      r.broken = true;
      return;
    }
    r.seen_then = true;
    r.then_line = lineno;
    r.then_col = toks[1].col;
    r.conclusion_attribute = toks[1].text;
    const AttributeDef* attr = kb_.attribute(r.conclusion_attribute);
    if (!attr) {
      em_.error(lineno, toks[1].col, "unknown-name",
                "unknown attribute '" + r.conclusion_attribute + "'");
      r.broken = true;
      return;
    }
    const std::string& mode = toks[2].text;
    if (mode == "IS") {
      if (toks.size() != 4) {
        em_.error(lineno, toks[3].col, "syntax", "THEN ... IS expects one term");
        r.broken = true;
        return;
      }
      r.kind = ConclusionKind::term;
      r.conclusion_term = toks[3].text;
      if (!kb_.term(r.conclusion_attribute, r.conclusion_term)) {
        em_.error(lineno, toks[3].col, "unknown-name",
                  "attribute '" + r.conclusion_attribute + "' has no term '" +
                      r.conclusion_term + "'");
        r.broken = true;
      }
      return;
    }
    if (mode != "IN" && mode != "NOT_IN") {
      em_.error(lineno, toks[2].col, "syntax",
                "expected IN, NOT_IN or IS, got '" + mode + "'");
      r.broken = true;
      return;
    }
    r.kind = mode == "IN" ? ConclusionKind::include : ConclusionKind::exclude;
    std::set<std::string> seen;
    for (std::size_t i = 3; i < toks.size(); ++i) {
      const Token& t = toks[i];
      if (t.text == catch_all_element) {
        em_.error(lineno, t.col, "reserved-element",
                  "the catch-all element cannot be recommended or excluded "
                  "explicitly");
        r.broken = true;
        continue;
      }
      if (!attr->domain->index_of(t.text)) {
        em_.error(lineno, t.col, "unknown-name",
                  "element '" + t.text + "' is not in domain '" +
                      attr->domain->name() + "'");
        r.broken = true;
        continue;
      }
      if (!seen.insert(t.text).second) {
        em_.error(lineno, t.col, "dup-name", "element '" + t.text + "' listed twice");
        r.broken = true;
        continue;
      }
      r.conclusion_elements.push_back(t.text);
    }
  }

  void parse_with(const std::vector<Token>& toks, int lineno) {
    RawRule& r = *rule_;
    r.with_line = lineno;
    if (toks.size() < 2) {
      em_.error(lineno, toks[0].col, "syntax", "WITH expects s=<degree> r=<degree>");
      r.broken = true;
      return;
    }
    for (std::size_t i = 1; i < toks.size(); ++i) {
      auto asg = parse_assignment(toks[i], lineno, em_);
      if (!asg) { r.broken = true; continue; }
      std::optional<Degree>* slot = nullptr;
      if (asg->key == "s") slot = &r.s;
      else if (asg->key == "r") slot = &r.r;
      else {
        em_.error(lineno, asg->col, "syntax",
                  "WITH only takes s= and r=, got '" + asg->key + "'");
        r.broken = true;
        continue;
      }
      if (slot->has_value()) {
        em_.error(lineno, asg->col, "conflicting-uncertainty",
                  "'" + asg->key + "' given twice");
        r.broken = true;
        continue;
      }
      *slot = asg->value;
    }
  }

  void parse_otherwise(const std::vector<Token>& toks, int lineno) {
    RawRule& r = *rule_;
    if (toks.size() != 2) {
      em_.error(lineno, toks[0].col, "syntax", "OTHERWISE expects r=<degree>");
      r.broken = true;
      return;
    }
    auto asg = parse_assignment(toks[1], lineno, em_);
    if (!asg) { r.broken = true; return; }
    if (asg->key != "r") {
      em_.error(lineno, asg->col, "syntax",
                "OTHERWISE states the exception level of the complementary "
                "context: OTHERWISE r=<degree>");
      r.broken = true;
      return;
    }
    if (r.otherwise_s.has_value()) {
      em_.error(lineno, toks[0].col, "conflicting-uncertainty",
                "second OTHERWISE clause");
      r.broken = true;
      return;
    }
    r.otherwise_s = asg->value;
  }

  void parse_phrase(const std::vector<Token>& toks, int lineno) {
    RawRule& r = *rule_;
    bool neg = toks[0].text == "PHRASE_NOT";
    if (toks.size() != 2 || !toks[1].quoted) {
      em_.error(lineno, toks[0].col, "syntax",
                toks[0].text + " expects one quoted string");
      r.broken = true;
      return;
    }
    std::string& slot = neg ? r.phrase_neg : r.phrase_pos;
    if (!slot.empty()) {
      em_.error(lineno, toks[0].col, "dup-name",
                toks[0].text + " given twice");
      r.broken = true;
      return;
    }
    slot = toks[1].text;
  }

  void close_rule(int lineno) {
    RawRule r = std::move(*rule_);
    rule_.reset();
    if (r.parts.empty()) {
      em_.error(r.line, 1, "incomplete-rule", "RULE " + r.id + " has no IF");
      return;
    }
    if (!r.seen_then) {
      em_.error(r.line, 1, "incomplete-rule", "RULE " + r.id + " has no THEN");
      return;
    }
    if (r.kind != ConclusionKind::term && r.conclusion_elements.empty() &&
        !r.broken) {
      em_.error(r.then_line, r.then_col, "syntax", "empty conclusion list");
      r.broken = true;
    }
    if (r.otherwise_s && r.s) {
      em_.error(r.with_line ? r.with_line : r.line, 1, "conflicting-uncertainty",
                "rule " + r.id + " states s both in WITH and via OTHERWISE");
      r.broken = true;
    }
    Degree top = Degree::zero();
    for (const RulePart& p : r.parts) top = max(top, p.weight);
    if (top != Degree::one()) {
      em_.error(r.line, 1, "bad-weights",
                "rule " + r.id + ": condition weights must reach 1");
      r.broken = true;
    }
    if (r.broken) return;
    (void)lineno;

    // Degenerate conclusions cap every alternative at once: a term that
    // never reaches membership 1, or a crisp set equal to the whole domain
    // (or, excluded, to nothing). Such a rule cannot discriminate and makes
    // the combined distribution subnormal whenever its contexts are < 1.
    const AttributeDef* cattr = kb_.attribute(r.conclusion_attribute);
    if (r.kind == ConclusionKind::term) {
      const TermDef* t = kb_.term(r.conclusion_attribute, r.conclusion_term);
      Degree h = Degree::zero();
      for (Degree d : t->pattern.mu()) h = max(h, d);
      if (h != Degree::one()) {
        em_.error(r.then_line, r.then_col, "subnormal-conclusion",
                  "term '" + r.conclusion_term +
                      "' never reaches membership 1; concluding it would cap "
                      "every alternative");
        return;
      }
    } else if (r.conclusion_elements.size() == cattr->domain->size()) {
      em_.error(r.then_line, r.then_col, "subnormal-conclusion",
                r.kind == ConclusionKind::include
                    ? "the conclusion covers the whole domain"
                    : "the conclusion excludes the whole domain");
      return;
    }

    RuleDef def;
    def.id = r.id;
    def.parts = std::move(r.parts);
    def.connective = r.has_or ? Connective::disjunction : Connective::conjunction;
    def.conclusion_attribute = std::move(r.conclusion_attribute);
    def.kind = r.kind;
    def.conclusion_elements = std::move(r.conclusion_elements);
    def.conclusion_term = std::move(r.conclusion_term);
    if (r.otherwise_s) def.s = *r.otherwise_s;
    else if (r.s) def.s = *r.s;
    if (r.r) def.r = *r.r;
    def.phrase_pos = std::move(r.phrase_pos);
    def.phrase_neg = std::move(r.phrase_neg);
    def.line = r.line;
    raw_meta_.push_back(RawMeta{r.s.has_value(), r.r.has_value(),
                                r.otherwise_s.has_value()});
    kb_.rules.push_back(std::move(def));
  }

  struct RawMeta {
    bool explicit_s = false;
    bool explicit_r = false;
    bool from_otherwise = false;
  };
  std::vector<RawMeta> raw_meta_;

  // Conclusion set of a rule as a fuzzy subset of the effective domain.
  FuzzySubset conclusion_subset(const RuleDef& def) {
    const AttributeDef* attr = kb_.attribute(def.conclusion_attribute);
    if (def.kind == ConclusionKind::term)
      return kb_.term(def.conclusion_attribute, def.conclusion_term)->pattern;
    FuzzySubset crisp = FuzzySubset::crisp(attr->domain, def.conclusion_elements);
    return def.kind == ConclusionKind::include ? crisp : complement(crisp);
  }

  UncertainRule compile_one(const RuleDef& def) {
    UncertainRule rule;
    rule.id = def.id;
    for (const RulePart& p : def.parts) {
      const TermDef* term = kb_.term(p.attribute, p.term);
      FuzzySubset pattern = p.negated ? complement(term->pattern) : term->pattern;
      rule.condition.parts.push_back(ConditionPart{
          p.attribute, p.term, p.negated, std::move(pattern), p.weight});
    }
    rule.condition.connective = def.connective;
    rule.conclusion_attribute = def.conclusion_attribute;
    rule.conclusion = conclusion_subset(def);
    rule.s = def.s;
    rule.r = def.r;
    rule.phrase_pos = def.phrase_pos;
    rule.phrase_neg = def.phrase_neg;
    return rule;
  }

  // True when q's condition is the De Morgan complement of p's.
  static bool complementary_conditions(const RuleDef& p, const RuleDef& q) {
    if (p.parts.size() != q.parts.size()) return false;
    for (std::size_t k = 0; k < p.parts.size(); ++k) {
      const RulePart& a = p.parts[k];
      const RulePart& b = q.parts[k];
      if (a.attribute != b.attribute || a.term != b.term ||
          a.negated == b.negated || a.weight != b.weight)
        return false;
    }
    if (p.parts.size() > 1 && p.connective == q.connective) return false;
    return true;
  }

  static bool same_element_set(const std::vector<std::string>& a,
                               const std::vector<std::string>& b) {
    return std::set<std::string>(a.begin(), a.end()) ==
           std::set<std::string>(b.begin(), b.end());
  }

  void fold_and_compile() {
    std::vector<bool> consumed(kb_.rules.size(), false);
    for (std::size_t i = 0; i < kb_.rules.size(); ++i) {
      if (consumed[i]) continue;
      const RuleDef& p = kb_.rules[i];
      if (p.kind != ConclusionKind::include) {
        kb_.compiled.push_back(compile_one(p));
        consumed[i] = true;
        continue;
      }
      // Rules already carrying an OTHERWISE context are complete; only plain
      // include-kind rules look for an exclude-kind partner.
      std::size_t partner = kb_.rules.size();
      if (!raw_meta_[i].from_otherwise) {
        for (std::size_t j = 0; j < kb_.rules.size(); ++j) {
          if (j == i || consumed[j]) continue;
          const RuleDef& q = kb_.rules[j];
          if (q.kind != ConclusionKind::exclude) continue;
          if (raw_meta_[j].from_otherwise) continue;
          if (q.conclusion_attribute != p.conclusion_attribute) continue;
          if (!same_element_set(p.conclusion_elements, q.conclusion_elements))
            continue;
          if (!complementary_conditions(p, q)) continue;
          partner = j;
          break;
        }
      }
      UncertainRule rule = compile_one(p);
      if (partner < kb_.rules.size()) {
        const RuleDef& q = kb_.rules[partner];
        if (raw_meta_[i].explicit_s && p.s != q.r)
          em_.error(q.line, 1, "conflicting-uncertainty",
                    "rules " + p.id + " and " + q.id +
                        " disagree on the complementary context");
        if (raw_meta_[partner].explicit_s && q.s != p.r)
          em_.error(q.line, 1, "conflicting-uncertainty",
                    "rules " + p.id + " and " + q.id +
                        " disagree on the direct context");
        rule.s = q.r;
        rule.merged_from = q.id;
        if (rule.phrase_pos.empty()) rule.phrase_pos = q.phrase_neg;
        if (rule.phrase_neg.empty()) rule.phrase_neg = q.phrase_pos;
        consumed[partner] = true;
      }
      kb_.compiled.push_back(std::move(rule));
      consumed[i] = true;
    }
  }

  void check_cycles() {
    // Attribute dependency graph: condition attribute -> conclusion attribute.
    std::map<std::string, std::set<std::string>> deps;  // conclusion -> conditions
    std::map<std::string, int> rule_line;
    for (const RuleDef& def : kb_.rules) {
      for (const RulePart& p : def.parts)
        deps[def.conclusion_attribute].insert(p.attribute);
      if (!rule_line.count(def.conclusion_attribute))
        rule_line[def.conclusion_attribute] = def.line;
    }
    std::set<std::string> done, visiting;
    std::function<bool(const std::string&)> visit =
        [&](const std::string& attr) -> bool {
      if (done.count(attr)) return true;
      if (!visiting.insert(attr).second) return false;
      auto it = deps.find(attr);
      if (it != deps.end())
        for (const std::string& d : it->second)
          if (!visit(d)) return false;
      visiting.erase(attr);
      done.insert(attr);
      return true;
    };
    for (const auto& [attr, unused] : deps) {
      (void)unused;
      if (!visit(attr)) {
        em_.error(rule_line[attr], 1, "cycle",
                  "attribute '" + attr + "' depends on itself through the rules");
        return;
      }
    }
  }
};

}  // namespace

KbParse parse_kb(std::string_view text, const std::string& filename) {
  KbParse out;
  KbParser parser(filename, out.diagnostics);
  std::string line;
  int lineno = 0;
  std::istringstream in{std::string(text)};
  while (std::getline(in, line)) parser.feed(line, ++lineno);
  parser.finish(lineno);
  if (!has_errors(out.diagnostics)) out.kb = parser.take();
  return out;
}

// --- Facts ---------------------------------------------------------------

FactsParse parse_facts(std::string_view text, const std::string& filename,
                       const KnowledgeBaseFile& kb, bool permissive) {
  FactsParse out;
  Emitter em(filename, out.diagnostics);
  FactsFile facts;
  std::set<std::string> seen;
  std::string line;
  int lineno = 0;
  std::istringstream in{std::string(text)};
  while (std::getline(in, line)) {
    ++lineno;
    std::vector<Token> toks;
    if (!tokenize(line, lineno, em, toks)) continue;
    if (toks.empty()) continue;
    if (toks[0].text != "FACT") {
      em.error(lineno, toks[0].col, "misplaced",
               "facts files only contain FACT lines, got '" + toks[0].text + "'");
      continue;
    }
    if (toks.size() < 2) {
      em.error(lineno, toks[0].col, "syntax", "FACT needs an attribute");
      continue;
    }
    const AttributeDef* attr = kb.attribute(toks[1].text);
    if (!attr) {
      em.error(lineno, toks[1].col, "unknown-name",
               "unknown attribute '" + toks[1].text + "'");
      continue;
    }
    if (!seen.insert(attr->name).second) {
      em.error(lineno, toks[1].col, "dup-name",
               "attribute '" + attr->name + "' already has a fact");
      continue;
    }
    if (kb.concludes(attr->name)) {
      em.error(lineno, toks[1].col, "fact-for-derived",
               "attribute '" + attr->name +
                   "' is concluded by the rules; its fact would be ignored");
      continue;
    }
    if (toks.size() == 3 && toks[2].text == "UNKNOWN" && !toks[2].quoted) {
      facts.entries.push_back(FactEntry{
          attr->name, PossibilityDistribution::ignorance(attr->domain), true});
      continue;
    }
    std::vector<Degree> pi(attr->domain->size(), Degree::zero());
    std::set<std::string> elems;
    bool bad = false;
    for (std::size_t i = 2; i < toks.size(); ++i) {
      auto asg = parse_assignment(toks[i], lineno, em);
      if (!asg) { bad = true; continue; }
      auto idx = attr->domain->index_of(asg->key);
      if (!idx) {
        em.error(lineno, asg->col, "unknown-name",
                 "element '" + asg->key + "' is not in domain '" +
                     attr->domain->name() + "'");
        bad = true;
        continue;
      }
      if (!elems.insert(asg->key).second) {
        em.error(lineno, asg->col, "dup-name",
                 "element '" + asg->key + "' assigned twice");
        bad = true;
        continue;
      }
      pi[*idx] = asg->value;
    }
    if (bad) continue;
    PossibilityDistribution dist(attr->domain, std::move(pi));
    if (!dist.is_normalized()) {
      if (permissive)
        em.warn(lineno, toks[1].col, "subnormal-fact",
                "fact for '" + attr->name + "' has height " +
                    dist.height().str() + " < 1");
      else {
        em.error(lineno, toks[1].col, "subnormal-fact",
                 "fact for '" + attr->name + "' has height " +
                     dist.height().str() + " < 1 (pass the permissive flag to "
                     "accept subnormal facts)");
        continue;
      }
    }
    facts.entries.push_back(FactEntry{attr->name, std::move(dist), false});
  }
  if (!has_errors(out.diagnostics)) out.facts = std::move(facts);
  return out;
}

// --- Beliefs -------------------------------------------------------------

BeliefParse parse_belief(std::string_view text, const std::string& filename,
                         const DomainLookup& lookup) {
  BeliefParse out;
  Emitter em(filename, out.diagnostics);
  BeliefFile belief;
  std::set<std::string> seen;
  std::string line;
  int lineno = 0;
  std::istringstream in{std::string(text)};
  while (std::getline(in, line)) {
    ++lineno;
    std::vector<Token> toks;
    if (!tokenize(line, lineno, em, toks)) continue;
    if (toks.empty()) continue;
    if (toks[0].text != "BELIEF") {
      em.error(lineno, toks[0].col, "misplaced",
               "belief files only contain BELIEF lines, got '" + toks[0].text +
                   "'");
      continue;
    }
    if (toks.size() < 3) {
      em.error(lineno, toks[0].col, "syntax",
               "BELIEF needs an attribute and at least one element=degree");
      continue;
    }
    DomainPtr domain = lookup(toks[1].text);
    if (!domain) {
      em.error(lineno, toks[1].col, "unknown-name",
               "unknown attribute '" + toks[1].text + "'");
      continue;
    }
    if (!seen.insert(toks[1].text).second) {
      em.error(lineno, toks[1].col, "dup-name",
               "attribute '" + toks[1].text + "' already has a belief");
      continue;
    }
    std::vector<Degree> mu(domain->size(), Degree::zero());
    std::set<std::string> elems;
    bool bad = false;
    for (std::size_t i = 2; i < toks.size(); ++i) {
      auto asg = parse_assignment(toks[i], lineno, em);
      if (!asg) { bad = true; continue; }
      auto idx = domain->index_of(asg->key);
      if (!idx) {
        em.error(lineno, asg->col, "unknown-name",
                 "element '" + asg->key + "' is not in domain '" +
                     domain->name() + "'");
        bad = true;
        continue;
      }
      if (!elems.insert(asg->key).second) {
        em.error(lineno, asg->col, "dup-name",
                 "element '" + asg->key + "' assigned twice");
        bad = true;
        continue;
      }
      mu[*idx] = asg->value;
    }
    if (bad) continue;
    FuzzySubset b(domain, std::move(mu));
    Degree h = Degree::zero();
    for (Degree d : b.mu()) h = max(h, d);
    if (h != Degree::one()) {
      em.error(lineno, toks[1].col, "bad-belief",
               "belief for '" + toks[1].text + "' must reach membership 1");
      continue;
    }
    belief.entries.push_back(BeliefEntry{toks[1].text, std::move(b)});
  }
  if (!has_errors(out.diagnostics)) out.belief = std::move(belief);
  return out;
}

BeliefParse parse_belief(std::string_view text, const std::string& filename,
                         const KnowledgeBaseFile& kb) {
  return parse_belief(text, filename, [&kb](const std::string& attr) {
    const AttributeDef* a = kb.attribute(attr);
    return a ? a->domain : DomainPtr{};
  });
}

// --- Serialization -------------------------------------------------------

namespace {

void write_membership(std::ostringstream& os, const FuzzySubset& f) {
  for (std::size_t i = 0; i < f.mu().size(); ++i)
    if (f.at(i) > Degree::zero())
      os << ' ' << f.domain()->elements()[i] << '=' << f.at(i).str();
}

}  // namespace

std::string serialize(const KnowledgeBaseFile& kb) {
  std::ostringstream os;
  for (const DomainPtr& d : kb.declared_domains) {
    os << "DOMAIN " << d->name();
    for (const std::string& e : d->elements()) os << ' ' << e;
    os << '\n';
  }
  if (!kb.declared_domains.empty() && !kb.attributes.empty()) os << '\n';
  for (const AttributeDef& a : kb.attributes)
    os << "ATTRIBUTE " << a.name << ' ' << a.domain_name << ' '
       << (a.open_world ? "OPEN" : "CLOSED") << '\n';
  if (!kb.attributes.empty() && !kb.terms.empty()) os << '\n';
  for (const TermDef& t : kb.terms) {
    os << "TERM " << t.name << ' ' << t.attribute;
    write_membership(os, t.pattern);
    os << '\n';
  }
  for (const RuleDef& rule : kb.rules) {
    os << '\n' << "RULE " << rule.id << '\n';
    for (std::size_t i = 0; i < rule.parts.size(); ++i) {
      const RulePart& p = rule.parts[i];
      os << "  "
         << (i == 0 ? "IF"
                    : rule.connective == Connective::disjunction ? "OR" : "AND")
         << ' ' << p.attribute << " IS " << (p.negated ? "NOT " : "") << p.term;
      if (p.weight != Degree::one()) os << " WEIGHT " << p.weight.str();
      os << '\n';
    }
    os << "  THEN " << rule.conclusion_attribute;
    if (rule.kind == ConclusionKind::term) {
      os << " IS " << rule.conclusion_term;
    } else {
      os << (rule.kind == ConclusionKind::include ? " IN" : " NOT_IN");
      for (const std::string& e : rule.conclusion_elements) os << ' ' << e;
    }
    os << '\n';
    // Defaults stay implicit so reparsing does not see explicit uncertainty
    // where the author left it out (an explicit s on a rule with a
    // complementary partner is checked for agreement).
    if (rule.s != Degree::one() || rule.r != Degree::zero()) {
      os << "  WITH";
      if (rule.s != Degree::one()) os << " s=" << rule.s.str();
      if (rule.r != Degree::zero()) os << " r=" << rule.r.str();
      os << '\n';
    }
    if (!rule.phrase_pos.empty())
      os << "  PHRASE \"" << rule.phrase_pos << "\"\n";
    if (!rule.phrase_neg.empty())
      os << "  PHRASE_NOT \"" << rule.phrase_neg << "\"\n";
    os << "END\n";
  }
  return os.str();
}

std::string serialize(const FactsFile& facts) {
  std::ostringstream os;
  for (const FactEntry& e : facts.entries) {
    os << "FACT " << e.attribute;
    bool all_one = true;
    for (Degree d : e.distribution.pi()) all_one = all_one && d == Degree::one();
    if (all_one) {
      os << " UNKNOWN\n";
      continue;
    }
    for (std::size_t i = 0; i < e.distribution.pi().size(); ++i)
      if (e.distribution.at(i) > Degree::zero())
        os << ' ' << e.distribution.domain()->elements()[i] << '='
           << e.distribution.at(i).str();
    os << '\n';
  }
  return os.str();
}

std::string serialize(const BeliefFile& belief) {
  std::ostringstream os;
  for (const BeliefEntry& e : belief.entries) {
    os << "BELIEF " << e.attribute;
    write_membership(os, e.belief);
    os << '\n';
  }
  return os.str();
}

}  // namespace whynot
