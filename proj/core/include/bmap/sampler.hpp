#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "bmap/model.hpp"
#include "bmap/rng.hpp"

namespace bmap {

// Draws atom indices from a finite law: linear scan for small supports,
// Walker/Vose alias table above kAliasThreshold atoms.
class DiscreteSampler {
 public:
  static constexpr std::size_t kAliasThreshold = 8;

  DiscreteSampler() = default;
  explicit DiscreteSampler(std::span<const double> weights);
  explicit DiscreteSampler(const DiscreteLaw& law);

  std::size_t sample_index(Rng& rng) const;
  bool uses_alias() const noexcept { return !alias_.empty(); }
  std::size_t size() const noexcept { return cumulative_.empty() ? prob_.size() : cumulative_.size(); }

 private:
  std::vector<double> cumulative_;  // linear scan
  std::vector<double> prob_;        // alias
  std::vector<std::size_t> alias_;
};

// Sampler that returns atom values directly.
class LawSampler {
 public:
  LawSampler() = default;
  explicit LawSampler(const DiscreteLaw& law);

  double sample(Rng& rng) const { return values_[index_.sample_index(rng)]; }
  bool trivial_zero() const noexcept { return values_.size() == 1 && values_[0] == 0.0; }

 private:
  DiscreteSampler index_;
  std::vector<double> values_;
};

}  // namespace bmap
