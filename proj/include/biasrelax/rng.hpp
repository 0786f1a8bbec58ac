#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace biasrelax {

// Seeded random stream with explicit variate transforms, so a given
// (seed, substream) pair reproduces the same draws on any platform.
//
// Substreams back the sampler's chunked-draw contract: draw block g of a
// run uses substream(seed, g), so results do not depend on how blocks are
// distributed over worker threads.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);

  static RngStream substream(std::uint64_t seed, std::uint64_t index);

  // Uniform on [0,1) with 53 random bits.
  double uniform();

  // Standard normal, Marsaglia polar method (second variate cached).
  double normal();

  double exponential();

  // Gamma(shape, 1), Marsaglia-Tsang squeeze for shape >= 1 and the
  // U^{1/shape} boost for shape < 1.
  double gamma(double shape);

  // Binomial(n, p) by sequential CDF inversion; exact, O(n) worst case.
  std::int64_t binomial(std::int64_t n, double p);

  // Dirichlet draw with the given shape vector (normalized gammas).
  std::vector<double> dirichlet(std::span<const double> shapes);

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace biasrelax
