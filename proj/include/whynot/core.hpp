#pragma once

#include <compare>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace whynot {

// A possibility or membership degree, stored as exact thousandths of the
// unit interval. The whole calculus is min/max/1-x, so integer degrees make
// every result exact and every tie deterministic.
class Degree {
 public:
  static constexpr int scale = 1000;

  constexpr Degree() = default;
  explicit Degree(int thousandths);

  static constexpr Degree zero() { return Degree{}; }
  static Degree one() { return Degree(scale); }

  constexpr int thousandths() const { return value_; }
  Degree complement() const { return Degree(scale - value_); }

  friend constexpr auto operator<=>(Degree, Degree) = default;

  // Canonical decimal rendering: "0", "0.35", "1". At most three fractional
  // digits, trailing zeros stripped.
  std::string str() const;

  // Accepts canonical and non-canonical decimals with up to three fractional
  // digits inside [0,1]; anything else (including finer precision) is rejected.
  static std::optional<Degree> parse(std::string_view text);

 private:
  int value_ = 0;
};

constexpr Degree min(Degree a, Degree b) { return a < b ? a : b; }
constexpr Degree max(Degree a, Degree b) { return a < b ? b : a; }

// Finite ordered set of element labels. Immutable and shared; equality is
// structural (name + elements) so serialized traces can be reloaded.
class Domain {
 public:
  static std::shared_ptr<const Domain> make(std::string name,
                                            std::vector<std::string> elements);

  // Shared zero-element domain backing default-constructed fuzzy values;
  // never produced by make().
  static std::shared_ptr<const Domain> none();

  const std::string& name() const { return name_; }
  const std::vector<std::string>& elements() const { return elements_; }
  std::size_t size() const { return elements_.size(); }
  std::optional<std::size_t> index_of(std::string_view element) const;

  friend bool operator==(const Domain& a, const Domain& b) {
    return a.name_ == b.name_ && a.elements_ == b.elements_;
  }

 private:
  Domain(std::string name, std::vector<std::string> elements)
      : name_(std::move(name)), elements_(std::move(elements)) {}

  std::string name_;
  std::vector<std::string> elements_;
};

using DomainPtr = std::shared_ptr<const Domain>;

bool same_domain(const DomainPtr& a, const DomainPtr& b);

// Fuzzy subset of a domain: one membership degree per element.
class FuzzySubset {
 public:
  // Empty subset over Domain::none(); a placeholder to assign over.
  FuzzySubset() : domain_(Domain::none()) {}
  FuzzySubset(DomainPtr domain, std::vector<Degree> mu);

  static FuzzySubset zeros(DomainPtr domain);
  static FuzzySubset ones(DomainPtr domain);
  static FuzzySubset crisp(DomainPtr domain,
                           const std::vector<std::string>& members);

  const DomainPtr& domain() const { return domain_; }
  const std::vector<Degree>& mu() const { return mu_; }
  Degree at(std::size_t i) const { return mu_.at(i); }

  bool is_crisp() const;
  // Member indices, meaningful for crisp subsets.
  std::vector<std::size_t> support() const;

  friend bool operator==(const FuzzySubset& a, const FuzzySubset& b) {
    return *a.domain_ == *b.domain_ && a.mu_ == b.mu_;
  }

 private:
  DomainPtr domain_;
  std::vector<Degree> mu_;
};

// Possibility distribution over a domain. Normalized iff some element has
// possibility 1; subnormal distributions are legal values and stay as they
// are (the engine never renormalizes), they just answer is_normalized()
// false and carry a positive subnormality degree.
class PossibilityDistribution {
 public:
  // Empty distribution over Domain::none(); a placeholder to assign over.
  PossibilityDistribution() : domain_(Domain::none()) {}
  PossibilityDistribution(DomainPtr domain, std::vector<Degree> pi);

  static PossibilityDistribution ignorance(DomainPtr domain);
  static PossibilityDistribution crisp(DomainPtr domain,
                                       std::string_view element);

  const DomainPtr& domain() const { return domain_; }
  const std::vector<Degree>& pi() const { return pi_; }
  Degree at(std::size_t i) const { return pi_.at(i); }

  Degree height() const;
  bool is_normalized() const { return height() == Degree::one(); }
  Degree subnormality() const { return height().complement(); }

  friend bool operator==(const PossibilityDistribution& a,
                         const PossibilityDistribution& b) {
    return *a.domain_ == *b.domain_ && a.pi_ == b.pi_;
  }

 private:
  DomainPtr domain_;
  std::vector<Degree> pi_;
};

FuzzySubset complement(const FuzzySubset& f);

// Pointwise min; the conjunctive combination of two sources on one domain.
PossibilityDistribution min_combine(const PossibilityDistribution& a,
                                    const PossibilityDistribution& b);

// Possibility of fuzzy event f under distribution p: max_u min(mu(u), pi(u)).
Degree consistency(const FuzzySubset& f, const PossibilityDistribution& p);

// Exact scalar cardinality: sum of memberships, denominator Degree::scale.
struct Cardinality {
  long long thousandths = 0;
  std::string str() const;
  friend bool operator==(const Cardinality&, const Cardinality&) = default;
};

Cardinality cardinality(const FuzzySubset& f);

// Necessity of crisp event a under p: 1 - max of pi outside a.
// Requires a crisp; throws std::invalid_argument otherwise.
Degree necessity(const PossibilityDistribution& p, const FuzzySubset& a);

}  // namespace whynot
