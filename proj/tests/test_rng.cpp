#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "fedsim/parallel.hpp"
#include "fedsim/rng.hpp"

using fedsim::RngStream;

TEST_SUITE("rng") {
  TEST_CASE("identical seeds give identical streams") {
    RngStream a(42), b(42);
    for (int i = 0; i < 1000; ++i) {
      CHECK(a.next_u64() == b.next_u64());
    }
  }

  TEST_CASE("derive separates streams by tag and ids") {
    RngStream a = RngStream::derive(7, "local", 0, 1);
    RngStream b = RngStream::derive(7, "local", 0, 2);
    RngStream c = RngStream::derive(7, "local", 1, 1);
    RngStream d = RngStream::derive(7, "split", 0, 1);
    const std::uint64_t va = a.next_u64();
    CHECK(va != b.next_u64());
    CHECK(va != c.next_u64());
    CHECK(va != d.next_u64());

    RngStream a2 = RngStream::derive(7, "local", 0, 1);
    CHECK(va == a2.next_u64());
  }

  TEST_CASE("uniform lies in [0,1) and uniform_open in (0,1)") {
    RngStream rng(1);
    for (int i = 0; i < 20000; ++i) {
      const double u = rng.uniform();
      CHECK(u >= 0.0);
      CHECK(u < 1.0);
      const double v = rng.uniform_open();
      CHECK(v > 0.0);
      CHECK(v < 1.0);
    }
  }

  TEST_CASE("normal has mean 0 and variance 1 empirically") {
    RngStream rng(3);
    const int n = 200000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double z = rng.normal();
      sum += z;
      sum2 += z * z;
    }
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    CHECK(std::abs(mean) < 0.01);
    CHECK(std::abs(var - 1.0) < 0.02);
  }

  TEST_CASE("normal consumes exactly two uniforms per call") {
    RngStream a(9), b(9);
    (void)a.normal();
    (void)b.next_u64();
    (void)b.next_u64();
    CHECK(a.next_u64() == b.next_u64());
  }

  TEST_CASE("gamma matches its mean and variance") {
    RngStream rng(5);
    const double shape = 2.5;
    const int n = 100000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double g = rng.gamma(shape);
      CHECK(g > 0.0);
      sum += g;
      sum2 += g * g;
    }
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    CHECK(mean == doctest::Approx(shape).epsilon(0.02));   // E[Gamma(k,1)] = k
    CHECK(var == doctest::Approx(shape).epsilon(0.05));    // Var = k
  }

  TEST_CASE("dirichlet draws lie on the simplex with the right mean") {
    RngStream rng(11);
    const std::vector<double> alpha{0.5, 1.5, 3.0};
    const double alpha0 = std::accumulate(alpha.begin(), alpha.end(), 0.0);
    std::vector<double> mean(3, 0.0);
    const int n = 50000;
    for (int i = 0; i < n; ++i) {
      const std::vector<double> p = rng.dirichlet(alpha);
      double s = 0.0;
      for (double v : p) {
        CHECK(v >= 0.0);
        s += v;
      }
      CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
      for (std::size_t j = 0; j < 3; ++j) mean[j] += p[j];
    }
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(mean[j] / n == doctest::Approx(alpha[j] / alpha0).epsilon(0.03));
    }
  }

  TEST_CASE("uniform_int covers inclusive bounds") {
    RngStream rng(13);
    bool saw_lo = false, saw_hi = false;
    for (int i = 0; i < 10000; ++i) {
      const std::int64_t v = rng.uniform_int(-3, 3);
      CHECK(v >= -3);
      CHECK(v <= 3);
      saw_lo = saw_lo || v == -3;
      saw_hi = saw_hi || v == 3;
    }
    CHECK(saw_lo);
    CHECK(saw_hi);
  }

  TEST_CASE("shuffle is a seeded permutation") {
    std::vector<int> v(50);
    std::iota(v.begin(), v.end(), 0);
    std::vector<int> w = v;
    RngStream a(17), b(17);
    a.shuffle(v);
    b.shuffle(w);
    CHECK(v == w);
    std::vector<int> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < 50; ++i) CHECK(sorted[static_cast<std::size_t>(i)] == i);
  }

  TEST_CASE("mix64 is a bijective-looking finalizer on a few probes") {
    CHECK(fedsim::mix64(0) != 0);
    CHECK(fedsim::mix64(1) != fedsim::mix64(2));
    CHECK(fedsim::mix64(0x12345678) == fedsim::mix64(0x12345678));
  }
}

TEST_SUITE("parallel") {
  TEST_CASE("block partition covers [0, n) exactly") {
    const std::size_t n = 3 * fedsim::par::kBlock + 17;
    const std::size_t nb = fedsim::par::num_blocks(n);
    std::size_t covered = 0;
    std::size_t expected_begin = 0;
    for (std::size_t i = 0; i < nb; ++i) {
      const auto [begin, end] = fedsim::par::block(i, n);
      CHECK(begin == expected_begin);
      CHECK(end > begin);
      covered += end - begin;
      expected_begin = end;
    }
    CHECK(covered == n);
  }

  TEST_CASE("set_threads round-trips through max_threads when OpenMP is on") {
    if (!fedsim::par::openmp_enabled()) return;
    const int before = fedsim::par::max_threads();
    fedsim::par::set_threads(2);
    CHECK(fedsim::par::max_threads() == 2);
    fedsim::par::set_threads(before);
  }
}
