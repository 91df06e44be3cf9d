#include "bmap/sampler.hpp"

#include <numeric>

#include "bmap/errors.hpp"

namespace bmap {

DiscreteSampler::DiscreteSampler(std::span<const double> weights) {
  const std::size_t n = weights.size();
  if (n == 0) throw DomainError("DiscreteSampler: empty law");
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total > 0.0)) throw DomainError("DiscreteSampler: weights must have positive total");

  if (n <= kAliasThreshold) {
    cumulative_.resize(n);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      acc += weights[i] / total;
      cumulative_[i] = acc;
    }
    cumulative_.back() = 1.0;
    return;
  }

  prob_.assign(n, 0.0);
  alias_.assign(n, 0);
  std::vector<double> scaled(n);
  std::vector<std::size_t> small, large;
  for (std::size_t i = 0; i < n; ++i) {
    scaled[i] = weights[i] * static_cast<double>(n) / total;
    (scaled[i] < 1.0 ? small : large).push_back(i);
  }
  while (!small.empty() && !large.empty()) {
    const std::size_t s = small.back();
    small.pop_back();
    const std::size_t l = large.back();
    prob_[s] = scaled[s];
    alias_[s] = l;
    scaled[l] -= 1.0 - scaled[s];
    if (scaled[l] < 1.0) {
      large.pop_back();
      small.push_back(l);
    }
  }
  for (std::size_t i : large) prob_[i] = 1.0, alias_[i] = i;
  for (std::size_t i : small) prob_[i] = 1.0, alias_[i] = i;
}

namespace {
std::vector<double> law_weights(const DiscreteLaw& law) {
  std::vector<double> w;
  w.reserve(law.atoms.size());
  for (const auto& a : law.atoms) w.push_back(a.prob);
  return w;
}
}  // namespace

DiscreteSampler::DiscreteSampler(const DiscreteLaw& law) : DiscreteSampler(law_weights(law)) {}

std::size_t DiscreteSampler::sample_index(Rng& rng) const {
  if (!cumulative_.empty()) {
    if (cumulative_.size() == 1) return 0;
    const double u = rng.uniform();
    std::size_t i = 0;
    while (i + 1 < cumulative_.size() && u >= cumulative_[i]) ++i;
    return i;
  }
  const double u = rng.uniform() * static_cast<double>(prob_.size());
  const auto i = static_cast<std::size_t>(u);
  return (u - static_cast<double>(i)) < prob_[i] ? i : alias_[i];
}

LawSampler::LawSampler(const DiscreteLaw& law) : index_(law) {
  values_.reserve(law.atoms.size());
  for (const auto& a : law.atoms) values_.push_back(a.value);
}

}  // namespace bmap
