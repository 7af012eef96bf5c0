#include "whynot/core.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <stdexcept>

namespace whynot {

Degree::Degree(int thousandths) : value_(thousandths) {
  if (thousandths < 0 || thousandths > scale)
    throw std::invalid_argument("degree out of [0,1]");
}

std::string Degree::str() const {
  if (value_ == 0) return "0";
  if (value_ == scale) return "1";
  std::string frac;
  int v = value_;
  // three digits, then strip trailing zeros
  frac.push_back(static_cast<char>('0' + v / 100));
  frac.push_back(static_cast<char>('0' + v / 10 % 10));
  frac.push_back(static_cast<char>('0' + v % 10));
  while (frac.back() == '0') frac.pop_back();
  return "0." + frac;
}

std::optional<Degree> Degree::parse(std::string_view text) {
  if (text.empty()) return std::nullopt;
  std::size_t i = 0;
  if (!std::isdigit(static_cast<unsigned char>(text[i]))) return std::nullopt;
  int whole = 0;
  while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
    whole = whole * 10 + (text[i] - '0');
    if (whole > 1) return std::nullopt;
    ++i;
  }
  int frac = 0, digits = 0;
  if (i < text.size()) {
    if (text[i] != '.') return std::nullopt;
    ++i;
    if (i == text.size()) return std::nullopt;  // bare "1."
    while (i < text.size()) {
      if (!std::isdigit(static_cast<unsigned char>(text[i]))) return std::nullopt;
      if (++digits > 3) return std::nullopt;  // finer than thousandths is not exact here
      frac = frac * 10 + (text[i] - '0');
      ++i;
    }
    while (digits < 3) {
      frac *= 10;
      ++digits;
    }
  }
  int value = whole * scale + frac;
  if (value > scale) return std::nullopt;
  return Degree(value);
}

DomainPtr Domain::make(std::string name, std::vector<std::string> elements) {
  if (name.empty()) throw std::invalid_argument("domain name empty");
  if (elements.empty()) throw std::invalid_argument("domain has no elements");
  std::set<std::string_view> seen;
  for (const auto& e : elements) {
    if (e.empty()) throw std::invalid_argument("empty element label");
    if (!seen.insert(e).second)
      throw std::invalid_argument("duplicate element label: " + e);
  }
  return std::shared_ptr<const Domain>(
      new Domain(std::move(name), std::move(elements)));
}

DomainPtr Domain::none() {
  static const DomainPtr d(new Domain("", {}));
  return d;
}

std::optional<std::size_t> Domain::index_of(std::string_view element) const {
  for (std::size_t i = 0; i < elements_.size(); ++i)
    if (elements_[i] == element) return i;
  return std::nullopt;
}

bool same_domain(const DomainPtr& a, const DomainPtr& b) {
  if (!a || !b) return false;
  return a == b || *a == *b;
}

FuzzySubset::FuzzySubset(DomainPtr domain, std::vector<Degree> mu)
    : domain_(std::move(domain)), mu_(std::move(mu)) {
  if (!domain_) throw std::invalid_argument("null domain");
  if (mu_.size() != domain_->size())
    throw std::invalid_argument("membership vector does not fit domain");
}

FuzzySubset FuzzySubset::zeros(DomainPtr domain) {
  std::size_t n = domain->size();
  return FuzzySubset(std::move(domain), std::vector<Degree>(n, Degree::zero()));
}

FuzzySubset FuzzySubset::ones(DomainPtr domain) {
  std::size_t n = domain->size();
  return FuzzySubset(std::move(domain), std::vector<Degree>(n, Degree::one()));
}

FuzzySubset FuzzySubset::crisp(DomainPtr domain,
                               const std::vector<std::string>& members) {
  std::vector<Degree> mu(domain->size(), Degree::zero());
  for (const auto& m : members) {
    auto idx = domain->index_of(m);
    if (!idx) throw std::invalid_argument("element not in domain: " + m);
    mu[*idx] = Degree::one();
  }
  return FuzzySubset(std::move(domain), std::move(mu));
}

bool FuzzySubset::is_crisp() const {
  return std::all_of(mu_.begin(), mu_.end(), [](Degree d) {
    return d == Degree::zero() || d == Degree::one();
  });
}

std::vector<std::size_t> FuzzySubset::support() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < mu_.size(); ++i)
    if (mu_[i] > Degree::zero()) out.push_back(i);
  return out;
}

PossibilityDistribution::PossibilityDistribution(DomainPtr domain,
                                                 std::vector<Degree> pi)
    : domain_(std::move(domain)), pi_(std::move(pi)) {
  if (!domain_) throw std::invalid_argument("null domain");
  if (pi_.size() != domain_->size())
    throw std::invalid_argument("possibility vector does not fit domain");
}

PossibilityDistribution PossibilityDistribution::ignorance(DomainPtr domain) {
  std::size_t n = domain->size();
  return PossibilityDistribution(std::move(domain),
                                 std::vector<Degree>(n, Degree::one()));
}

PossibilityDistribution PossibilityDistribution::crisp(
    DomainPtr domain, std::string_view element) {
  auto idx = domain->index_of(element);
  if (!idx)
    throw std::invalid_argument("element not in domain: " + std::string(element));
  std::vector<Degree> pi(domain->size(), Degree::zero());
  pi[*idx] = Degree::one();
  return PossibilityDistribution(std::move(domain), std::move(pi));
}

Degree PossibilityDistribution::height() const {
  Degree h = Degree::zero();
  for (Degree d : pi_) h = max(h, d);
  return h;
}

FuzzySubset complement(const FuzzySubset& f) {
  std::vector<Degree> mu;
  mu.reserve(f.mu().size());
  for (Degree d : f.mu()) mu.push_back(d.complement());
  return FuzzySubset(f.domain(), std::move(mu));
}

PossibilityDistribution min_combine(const PossibilityDistribution& a,
                                    const PossibilityDistribution& b) {
  if (!same_domain(a.domain(), b.domain()))
    throw std::invalid_argument("min_combine: domain mismatch");
  std::vector<Degree> pi;
  pi.reserve(a.pi().size());
  for (std::size_t i = 0; i < a.pi().size(); ++i)
    pi.push_back(min(a.at(i), b.at(i)));
  return PossibilityDistribution(a.domain(), std::move(pi));
}

Degree consistency(const FuzzySubset& f, const PossibilityDistribution& p) {
  if (!same_domain(f.domain(), p.domain()))
    throw std::invalid_argument("consistency: domain mismatch");
  Degree best = Degree::zero();
  for (std::size_t i = 0; i < f.mu().size(); ++i)
    best = max(best, min(f.at(i), p.at(i)));
  return best;
}

std::string Cardinality::str() const {
  long long whole = thousandths / Degree::scale;
  int frac = static_cast<int>(thousandths % Degree::scale);
  std::string s = std::to_string(whole);
  if (frac != 0) {
    std::string f;
    f.push_back(static_cast<char>('0' + frac / 100));
    f.push_back(static_cast<char>('0' + frac / 10 % 10));
    f.push_back(static_cast<char>('0' + frac % 10));
    while (f.back() == '0') f.pop_back();
    s += "." + f;
  }
  return s;
}

Cardinality cardinality(const FuzzySubset& f) {
  Cardinality c;
  for (Degree d : f.mu()) c.thousandths += d.thousandths();
  return c;
}

Degree necessity(const PossibilityDistribution& p, const FuzzySubset& a) {
  if (!same_domain(p.domain(), a.domain()))
    throw std::invalid_argument("necessity: domain mismatch");
  if (!a.is_crisp())
    throw std::invalid_argument("necessity: event must be crisp");
  Degree outside = Degree::zero();
  for (std::size_t i = 0; i < p.pi().size(); ++i)
    if (a.at(i) == Degree::zero()) outside = max(outside, p.at(i));
  return outside.complement();
}

}  // namespace whynot
