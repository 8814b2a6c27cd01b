#include "robrl/sampler.hpp"

#include "robrl/oracle.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

namespace robrl {

CategoricalRows::CategoricalRows(const RowMatrix& probabilities)
    : rows_(static_cast<std::size_t>(probabilities.rows())),
      cols_(static_cast<std::size_t>(probabilities.cols())),
      cdf_(rows_ * cols_) {
  for (std::size_t i = 0; i < rows_; ++i) {
    double acc = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t j = 0; j < cols_; ++j) {
      const double p = probabilities(i, j);
      acc += p;
      cdf_[i * cols_ + j] = acc;
      if (p > 0.0) last_positive = j;
    }
    // Rounding must never leave a gap above the last reachable column.
    for (std::size_t j = last_positive; j < cols_; ++j) cdf_[i * cols_ + j] = 1.0;
  }
}

std::size_t CategoricalRows::sample(std::size_t row, double u) const {
  return sample_from_cdf(std::span<const double>(cdf_.data() + row * cols_, cols_), u);
}

void check_distribution(const Vector& mu, std::size_t n, const char* what) {
  if (static_cast<std::size_t>(mu.size()) != n) {
    throw ConfigError(std::string(what) + ": wrong length");
  }
  if ((mu.array() < 0.0).any() || !mu.allFinite() || std::abs(mu.sum() - 1.0) > 1e-10) {
    throw ConfigError(std::string(what) + ": not a probability vector");
  }
}

namespace {

RowMatrix as_row(const Vector& mu) {
  RowMatrix row(1, mu.size());
  row.row(0) = mu.transpose();
  return row;
}

}  // namespace

IidSampler::IidSampler(const MarkovRewardProcess& mrp, const Vector& mu, std::uint64_t seed)
    : kernel_(mrp.transition), reward_(mrp.mean_reward), noise_(mrp.noise), rng_(seed) {
  check_distribution(mu, mrp.n_states(), "iid sampler distribution");
  initial_ = CategoricalRows(as_row(mu));
}

Transition IidSampler::next() {
  Transition tr;
  tr.t = ++t_;
  tr.x = initial_.sample(0, rng_.uniform());
  tr.x_next = kernel_.sample(tr.x, rng_.uniform());
  tr.reward = reward_(static_cast<Eigen::Index>(tr.x)) + sample_noise(noise_, rng_);
  return tr;
}

MarkovSampler::MarkovSampler(const MarkovRewardProcess& mrp, const Vector& initial,
                             std::uint64_t seed)
    : kernel_(mrp.transition), reward_(mrp.mean_reward), noise_(mrp.noise), rng_(seed) {
  check_distribution(initial, mrp.n_states(), "markov sampler initial distribution");
  state_ = CategoricalRows(as_row(initial)).sample(0, rng_.uniform());
}

MarkovSampler::MarkovSampler(const MarkovRewardProcess& mrp, std::uint64_t seed)
    : MarkovSampler(mrp, stationary_distribution(mrp.transition).mu, seed) {}

Transition MarkovSampler::next() {
  Transition tr;
  tr.t = ++t_;
  tr.x = state_;
  tr.x_next = kernel_.sample(state_, rng_.uniform());
  tr.reward = reward_(static_cast<Eigen::Index>(tr.x)) + sample_noise(noise_, rng_);
  state_ = tr.x_next;
  return tr;
}

Transition ReplaySource::next() {
  if (pos_ >= stream_.size()) throw std::out_of_range("replay stream exhausted");
  return stream_[pos_++];
}

std::vector<Transition> draw(TransitionSource& source, std::size_t count) {
  std::vector<Transition> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(source.next());
  return out;
}

void StreamChecksum::add(const Transition& tr) {
  const std::uint64_t words[3] = {tr.x, tr.x_next, std::bit_cast<std::uint64_t>(tr.reward)};
  for (std::uint64_t w : words) {
    for (int b = 0; b < 8; ++b) {
      hash_ ^= (w >> (8 * b)) & 0xffULL;
      hash_ *= 0x100000001b3ULL;
    }
  }
}

}  // namespace robrl
