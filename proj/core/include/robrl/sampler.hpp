#pragma once

#include "robrl/env.hpp"
#include "robrl/rng.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace robrl {

/// Source of (x, reward, x') samples consumed by TD learning.
class TransitionSource {
 public:
  virtual ~TransitionSource() = default;
  virtual Transition next() = 0;
};

/// Cumulative rows of a row-stochastic matrix for inverse-CDF sampling.
class CategoricalRows {
 public:
  CategoricalRows() = default;
  explicit CategoricalRows(const RowMatrix& probabilities);

  std::size_t sample(std::size_t row, double u) const;
  std::size_t n_rows() const { return rows_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> cdf_;
};

/// Throws ConfigError unless `mu` is a probability vector of length n within 1e-10.
void check_distribution(const Vector& mu, std::size_t n, const char* what);

/// X_t ~ mu independently, X'_t ~ P(X_t, .). Draw order per step: state, successor, noise.
class IidSampler final : public TransitionSource {
 public:
  IidSampler(const MarkovRewardProcess& mrp, const Vector& mu, std::uint64_t seed);
  Transition next() override;

 private:
  CategoricalRows initial_;
  CategoricalRows kernel_;
  Vector reward_;
  NoiseSpec noise_;
  Rng rng_;
  std::uint64_t t_ = 0;
};

/// Single trajectory: X_1 ~ initial and X'_t = X_{t+1} ~ P(X_t, .).
class MarkovSampler final : public TransitionSource {
 public:
  MarkovSampler(const MarkovRewardProcess& mrp, const Vector& initial, std::uint64_t seed);
  /// Starts from the exact stationary distribution of `mrp`.
  MarkovSampler(const MarkovRewardProcess& mrp, std::uint64_t seed);
  Transition next() override;

 private:
  CategoricalRows kernel_;
  Vector reward_;
  NoiseSpec noise_;
  Rng rng_;
  std::size_t state_ = 0;
  std::uint64_t t_ = 0;
};

/// Replays a pre-drawn stream; throws std::out_of_range when exhausted.
class ReplaySource final : public TransitionSource {
 public:
  explicit ReplaySource(std::span<const Transition> stream) : stream_(stream) {}
  Transition next() override;

 private:
  std::span<const Transition> stream_;
  std::size_t pos_ = 0;
};

std::vector<Transition> draw(TransitionSource& source, std::size_t count);

/// FNV-1a over (x, x', reward bits) of every transition added.
class StreamChecksum {
 public:
  void add(const Transition& tr);
  std::uint64_t value() const { return hash_; }

 private:
  std::uint64_t hash_ = 0xcbf29ce484222325ULL;
};

}  // namespace robrl
