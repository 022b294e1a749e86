#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace sdwb {

// splitmix64 finalizer; good avalanche, used for seed derivation only.
std::uint64_t mix64(std::uint64_t x);

// Derive a child seed from (base, tag, index). Stage tags keep the seed
// streams of different pipeline stages independent, so e.g. adding a
// bandwidth to a study grid does not perturb the draws of existing cells,
// and replication loops can run in any order.
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag,
                          std::uint64_t index = 0);

// Seeded generator with the handful of distributions the project needs.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double normal() { return normal_(gen_); }
  double uniform01() { return unif_(gen_); }
  double uniform(double a, double b) { return a + (b - a) * unif_(gen_); }
  std::int64_t poisson(double mean);

 private:
  std::mt19937_64 gen_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> unif_{0.0, 1.0};
};

}  // namespace sdwb
