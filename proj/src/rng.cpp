#include "biasrelax/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace biasrelax {

namespace {

// splitmix64 (Steele, Lea & Flood 2014); used to decorrelate seeds.
std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed) {
  std::uint64_t s = seed;
  engine_.seed(splitmix64(s));
}

RngStream RngStream::substream(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t s = seed;
  std::uint64_t mixed = splitmix64(s);
  s = mixed ^ (index * 0xD6E8FEB86659FD93ULL + 0xA5A5A5A5A5A5A5A5ULL);
  return RngStream(splitmix64(s));
}

double RngStream::uniform() {
  // Top 53 bits of the 64-bit output.
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RngStream::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * f;
  have_spare_ = true;
  return u * f;
}

double RngStream::exponential() {
  double u;
  do {
    u = uniform();
  } while (u <= 0.0);
  return -std::log(u);
}

double RngStream::gamma(double shape) {
  if (!(shape > 0.0)) {
    throw std::domain_error("RngStream::gamma: shape must be positive");
  }
  if (shape < 1.0) {
    // Marsaglia-Tsang boost: G(a) = G(a+1) * U^{1/a}.
    const double g = gamma(shape + 1.0);
    double u;
    do {
      u = uniform();
    } while (u <= 0.0);
    return g * std::pow(u, 1.0 / shape);
  }
  // Marsaglia & Tsang (2000), ACM TOMS 26(3):363-372.
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform();
    if (u < 1.0 - 0.0331 * (x * x) * (x * x)) return d * v;
    if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

std::int64_t RngStream::binomial(std::int64_t n, double p) {
  if (n < 0 || !(p >= 0.0 && p <= 1.0)) {
    throw std::domain_error("RngStream::binomial: invalid parameters");
  }
  if (n == 0 || p == 0.0) return 0;
  if (p == 1.0) return n;
  // Invert the complementary case so the walk starts from the short side.
  if (p > 0.5) return n - binomial(n, 1.0 - p);

  const double u = uniform();
  const double q = 1.0 - p;
  const double ratio = p / q;
  double pmf = std::exp(static_cast<double>(n) * std::log(q));  // P(K = 0)
  double cdf = pmf;
  std::int64_t k = 0;
  while (u > cdf && k < n) {
    ++k;
    pmf *= ratio * static_cast<double>(n - k + 1) / static_cast<double>(k);
    cdf += pmf;
  }
  return k;
}

std::vector<double> RngStream::dirichlet(std::span<const double> shapes) {
  std::vector<double> g(shapes.size());
  double total = 0.0;
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    g[i] = gamma(shapes[i]);
    total += g[i];
  }
  if (total <= 0.0) {
    throw std::runtime_error("RngStream::dirichlet: degenerate draw");
  }
  for (double& v : g) v /= total;
  return g;
}

}  // namespace biasrelax
