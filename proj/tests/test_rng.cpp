#include "doctest.h"

#include <cmath>
#include <map>
#include <vector>

#include "biasrelax/rng.hpp"

using namespace biasrelax;

namespace {

struct Moments {
  double mean = 0.0;
  double var = 0.0;
};

template <typename Draw>
Moments sample_moments(RngStream& rng, std::size_t n, Draw draw) {
  double s = 0.0, ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = draw(rng);
    s += v;
    ss += v * v;
  }
  const double mean = s / static_cast<double>(n);
  return {mean, ss / static_cast<double>(n) - mean * mean};
}

}  // namespace

TEST_CASE("uniform draws live in [0,1) with mean 1/2") {
  RngStream rng(42);
  const auto m = sample_moments(rng, 200000, [](RngStream& r) { return r.uniform(); });
  CHECK(m.mean == doctest::Approx(0.5).epsilon(0.01));
  CHECK(m.var == doctest::Approx(1.0 / 12.0).epsilon(0.02));
}

TEST_CASE("normal draws have the right moments") {
  RngStream rng(7);
  const auto m = sample_moments(rng, 1000000, [](RngStream& r) { return r.normal(); });
  CHECK(std::fabs(m.mean) < 0.003);
  CHECK(m.var == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("gamma draws match shape moments") {
  RngStream rng(11);
  for (double shape : {0.3, 1.0, 3.5, 174.0}) {
    const auto m =
        sample_moments(rng, 200000, [shape](RngStream& r) { return r.gamma(shape); });
    CHECK(m.mean == doctest::Approx(shape).epsilon(0.02));
    CHECK(m.var == doctest::Approx(shape).epsilon(0.05));
  }
  CHECK_THROWS(rng.gamma(0.0));
}

TEST_CASE("binomial sampler is exact on a small case") {
  RngStream rng(13);
  // n=5, p=0.3: compare draw frequencies with the exact pmf.
  std::map<std::int64_t, int> freq;
  const int n_draws = 300000;
  for (int i = 0; i < n_draws; ++i) ++freq[rng.binomial(5, 0.3)];
  const double pmf[6] = {0.16807, 0.36015, 0.30870, 0.13230, 0.02835, 0.00243};
  for (int k = 0; k <= 5; ++k) {
    const double observed = static_cast<double>(freq[k]) / n_draws;
    CHECK(observed == doctest::Approx(pmf[k]).epsilon(0.05));
  }
}

TEST_CASE("binomial sampler moments at survey scale") {
  RngStream rng(17);
  const double p = 173.0 / 775.0;
  const auto m = sample_moments(
      rng, 100000, [p](RngStream& r) { return static_cast<double>(r.binomial(775, p)); });
  CHECK(m.mean == doctest::Approx(775 * p).epsilon(0.005));
  CHECK(m.var == doctest::Approx(775 * p * (1 - p)).epsilon(0.05));
}

TEST_CASE("dirichlet draws normalize and have conjugate means") {
  RngStream rng(19);
  const std::vector<double> shapes = {174.0, 603.0};
  double sum0 = 0.0;
  for (int i = 0; i < 200000; ++i) {
    const auto p = rng.dirichlet(shapes);
    CHECK(p[0] + p[1] == doctest::Approx(1.0).epsilon(1e-12));
    sum0 += p[0];
  }
  CHECK(sum0 / 200000 == doctest::Approx(174.0 / 777.0).epsilon(0.005));
}

TEST_CASE("substreams are deterministic and distinct") {
  RngStream a = RngStream::substream(99, 5);
  RngStream b = RngStream::substream(99, 5);
  RngStream c = RngStream::substream(99, 6);
  bool all_equal = true;
  bool any_equal_c = false;
  for (int i = 0; i < 100; ++i) {
    const double va = a.uniform();
    const double vb = b.uniform();
    const double vc = c.uniform();
    all_equal = all_equal && va == vb;
    any_equal_c = any_equal_c || va == vc;
  }
  CHECK(all_equal);
  CHECK_FALSE(any_equal_c);
}
