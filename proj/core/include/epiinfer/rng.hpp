#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace epi {

// Philox4x32-10 counter-based generator. A (key, stream) pair selects an
// independent sequence; the low counter words advance with every block.
class Philox {
 public:
  using result_type = std::uint64_t;

  Philox(std::uint64_t key, std::uint64_t stream);

  result_type operator()();
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  // Jump the counter to an absolute block index (used by tests).
  void seek(std::uint64_t block);

 private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> ctr_;
  std::array<std::uint32_t, 4> out_{};
  int used_ = 4;
};

struct SeedSpec {
  std::uint64_t root = 0;
  std::uint64_t replicate = 0;
};

std::uint64_t splitmix64(std::uint64_t x);

// Convenience sampler over a Philox stream. Distinct (root, replicate,
// stream) triples give statistically independent draws.
class Rng {
 public:
  Rng(SeedSpec seed, std::uint64_t stream = 0);
  explicit Rng(std::uint64_t root, std::uint64_t replicate = 0, std::uint64_t stream = 0)
      : Rng(SeedSpec{root, replicate}, stream) {}

  double uniform();                       // (0,1), never 0 or 1
  double uniform(double lo, double hi);
  double normal();
  double exponential(double rate);
  double gamma(double shape, double rate);
  long poisson(double mean);
  long binomial(long n, double p);
  std::size_t index(std::size_t n);       // uniform on {0..n-1}

  Philox& engine() { return eng_; }

 private:
  Philox eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace epi
