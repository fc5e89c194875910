#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "fedsim/errors.hpp"
#include "fedsim/hp_space.hpp"

using namespace fedsim;

namespace {

HyperparamDim dim(std::string name, double lo, double hi, DimKind kind,
                  int grid = 0, bool log_scaled = false) {
  HyperparamDim d;
  d.name = std::move(name);
  d.raw_min = lo;
  d.raw_max = hi;
  d.kind = kind;
  d.grid_points = grid;
  d.log_scaled = log_scaled;
  return d;
}

}  // namespace

TEST_SUITE("hp_space") {
  TEST_CASE("normalize maps range endpoints to +/- scale and center to 0") {
    auto space = build_space({dim("lr", 0.1, 0.9, DimKind::continuous_positive)}, 1.0);
    CHECK(normalize_dim(space, 0, 0.1) == doctest::Approx(-1.0));
    CHECK(normalize_dim(space, 0, 0.9) == doctest::Approx(1.0));
    CHECK(normalize_dim(space, 0, 0.5) == doctest::Approx(0.0));
  }

  TEST_CASE("log-scaled dim centers on the geometric mean") {
    auto space = build_space(
        {dim("lr", 1e-4, 1e-1, DimKind::continuous_positive, 0, true)}, 1.0);
    // Geometric midpoint of [1e-4, 1e-1] is 10^(-2.5).
    const double mid = 3.1622776601683794e-03;
    CHECK(normalize_dim(space, 0, mid) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(normalize_dim(space, 0, 1e-4) == doctest::Approx(-1.0));
    CHECK(normalize_dim(space, 0, 1e-1) == doctest::Approx(1.0));

    const auto raw = to_raw_continuous(space, std::vector<double>{0.0});
    CHECK(raw[0] == doctest::Approx(mid).epsilon(1e-12));
  }

  TEST_CASE("to_raw round-trips normalize for continuous dims") {
    auto space = build_space({dim("a", 0.2, 2.0, DimKind::continuous_positive),
                              dim("b", 1e-3, 1.0, DimKind::continuous_positive, 0, true)},
                             2.0);
    const std::vector<double> raw_in{1.3, 0.05};
    std::vector<double> norm(2);
    for (std::size_t d = 0; d < 2; ++d) norm[d] = normalize_dim(space, d, raw_in[d]);
    const auto raw_out = to_raw(space, norm);
    CHECK(raw_out[0] == doctest::Approx(raw_in[0]).epsilon(1e-12));
    CHECK(raw_out[1] == doctest::Approx(raw_in[1]).epsilon(1e-12));
  }

  TEST_CASE("to_raw clips out-of-box coordinates to the range ends") {
    auto space = build_space({dim("a", 0.5, 1.5, DimKind::continuous_positive)}, 1.0);
    CHECK(to_raw(space, std::vector<double>{4.0})[0] == doctest::Approx(1.5));
    CHECK(to_raw(space, std::vector<double>{-7.0})[0] == doctest::Approx(0.5));
  }

  TEST_CASE("integer dims round to nearest and clamp to >= 1") {
    auto space = build_space({dim("li", 1, 8, DimKind::integer_count)}, 1.0);
    // normalized 0 -> raw 4.5 -> rounds away from zero to 5
    CHECK(to_raw(space, std::vector<double>{0.0})[0] == doctest::Approx(5.0));
    // continuous variant keeps the fraction
    CHECK(to_raw_continuous(space, std::vector<double>{0.0})[0] == doctest::Approx(4.5));
    // clamp below 1 even if the range were to allow it after rounding
    auto tiny = build_space({dim("li", 0.2, 3.0, DimKind::integer_count)}, 1.0);
    CHECK(to_raw(tiny, std::vector<double>{-1.0})[0] == doctest::Approx(1.0));
  }

  TEST_CASE("simplex group maps through softmax and sums to one") {
    auto space = build_space({dim("lr", 0.01, 0.1, DimKind::continuous_positive),
                              dim("aw0", 0.0, 1.0, DimKind::simplex_weight),
                              dim("aw1", 0.0, 1.0, DimKind::simplex_weight),
                              dim("aw2", 0.0, 1.0, DimKind::simplex_weight)},
                             1.0);
    CHECK(space.simplex_begin == 1);
    CHECK(space.simplex_count == 3);
    const auto raw = to_raw(space, std::vector<double>{0.0, 0.3, -0.2, 0.9});
    CHECK(raw[1] + raw[2] + raw[3] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(raw[1] > raw[2]);  // larger logit -> larger weight
    CHECK(raw[3] > raw[1]);

    // equal logits -> uniform weights
    const auto uni = to_raw(space, std::vector<double>{0.0, 0.5, 0.5, 0.5});
    CHECK(uni[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(uni[2] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  }

  TEST_CASE("softmax is shift-invariant and handles large logits") {
    const std::vector<double> a{1.0, 2.0, 3.0};
    const std::vector<double> b{1001.0, 1002.0, 1003.0};
    const auto pa = softmax(a);
    const auto pb = softmax(b);
    for (std::size_t i = 0; i < 3; ++i) CHECK(pa[i] == doctest::Approx(pb[i]).epsilon(1e-12));
    CHECK(pa[0] + pa[1] + pa[2] == doctest::Approx(1.0).epsilon(1e-12));
    // Frozen values of softmax(1,2,3).
    CHECK(pa[0] == doctest::Approx(0.09003057317038046).epsilon(1e-12));
    CHECK(pa[1] == doctest::Approx(0.24472847105479767).epsilon(1e-12));
    CHECK(pa[2] == doctest::Approx(0.6652409557748219).epsilon(1e-12));
  }

  TEST_CASE("initial params are centered with uniform sigma") {
    auto space = build_space({dim("a", 0.1, 1.0, DimKind::continuous_positive),
                              dim("b", 1, 10, DimKind::integer_count)},
                             1.0);
    const auto p = initial_params(space, 0.5);
    REQUIRE(p.mu.size() == 2);
    for (double m : p.mu) CHECK(m == doctest::Approx(0.0));
    for (double ls : p.log_sigma) CHECK(std::exp(ls) == doctest::Approx(0.5).epsilon(1e-12));
  }

  TEST_CASE("grid cardinality multiplies per-dim points") {
    auto space = build_space({dim("a", 0.1, 1.0, DimKind::continuous_positive, 8),
                              dim("b", 1, 16, DimKind::integer_count, 8),
                              dim("c", 0.5, 2.0, DimKind::continuous_positive, 5)},
                             1.0);
    CHECK(grid_cardinality(space) == 8u * 8u * 5u);
  }

  TEST_CASE("grid cardinality overflow raises the capacity error") {
    std::vector<HyperparamDim> dims;
    for (int i = 0; i < 5; ++i) {
      dims.push_back(dim("d" + std::to_string(i), 0.1, 1.0,
                         DimKind::continuous_positive, 2000000));
    }
    auto space = build_space(std::move(dims), 1.0);
    CHECK_THROWS_AS((void)grid_cardinality(space), CapacityError);
  }

  TEST_CASE("grid cardinality requires grid points on every dim") {
    auto space = build_space({dim("a", 0.1, 1.0, DimKind::continuous_positive)}, 1.0);
    CHECK_THROWS_AS((void)grid_cardinality(space), ConfigError);
  }

  TEST_CASE("build_space rejects duplicate names") {
    CHECK_THROWS_AS(build_space({dim("lr", 0.1, 1.0, DimKind::continuous_positive),
                                 dim("lr", 0.2, 2.0, DimKind::continuous_positive)},
                                1.0),
                    ConfigError);
  }

  TEST_CASE("build_space rejects inverted or empty ranges") {
    CHECK_THROWS_AS(build_space({dim("a", 1.0, 0.5, DimKind::continuous_positive)}, 1.0),
                    ConfigError);
    CHECK_THROWS_AS(build_space({dim("a", 0.7, 0.7, DimKind::continuous_positive)}, 1.0),
                    ConfigError);
  }

  TEST_CASE("build_space rejects non-positive bounds on log-scaled dims") {
    CHECK_THROWS_AS(
        build_space({dim("a", 0.0, 1.0, DimKind::continuous_positive, 0, true)}, 1.0),
        ConfigError);
    CHECK_THROWS_AS(
        build_space({dim("a", -1.0, 1.0, DimKind::continuous_positive, 0, true)}, 1.0),
        ConfigError);
  }

  TEST_CASE("build_space rejects a split simplex group") {
    CHECK_THROWS_AS(build_space({dim("aw0", 0.0, 1.0, DimKind::simplex_weight),
                                 dim("lr", 0.01, 0.1, DimKind::continuous_positive),
                                 dim("aw1", 0.0, 1.0, DimKind::simplex_weight)},
                                1.0),
                    ConfigError);
  }

  TEST_CASE("build_space rejects a non-positive scale") {
    CHECK_THROWS_AS(
        build_space({dim("a", 0.1, 1.0, DimKind::continuous_positive)}, 0.0),
        ConfigError);
    CHECK_THROWS_AS(
        build_space({dim("a", 0.1, 1.0, DimKind::continuous_positive)}, -2.0),
        ConfigError);
  }

  TEST_CASE("dim kind string round-trip") {
    CHECK(to_string(DimKind::continuous_positive) == "continuous-positive");
    CHECK(to_string(DimKind::integer_count) == "integer-count");
    CHECK(to_string(DimKind::simplex_weight) == "simplex-weight");
    CHECK(dim_kind_from_string("continuous-positive") == DimKind::continuous_positive);
    CHECK(dim_kind_from_string("integer-count") == DimKind::integer_count);
    CHECK(dim_kind_from_string("simplex-weight") == DimKind::simplex_weight);
    CHECK_THROWS_AS(dim_kind_from_string("nope"), ConfigError);
  }

  TEST_CASE("normalize_dim rejects simplex dims") {
    auto space = build_space({dim("aw0", 0.0, 1.0, DimKind::simplex_weight),
                              dim("aw1", 0.0, 1.0, DimKind::simplex_weight)},
                             1.0);
    CHECK_THROWS_AS((void)normalize_dim(space, 0, 0.5), ConfigError);
  }

  TEST_CASE("scale stretches normalized coordinates") {
    auto s1 = build_space({dim("a", 0.1, 0.9, DimKind::continuous_positive)}, 1.0);
    auto s3 = build_space({dim("a", 0.1, 0.9, DimKind::continuous_positive)}, 3.0);
    CHECK(normalize_dim(s3, 0, 0.9) == doctest::Approx(3.0));
    CHECK(normalize_dim(s3, 0, 0.5) == doctest::Approx(0.0));
    // Same raw point maps to proportionally scaled coordinates.
    CHECK(normalize_dim(s3, 0, 0.7) ==
          doctest::Approx(3.0 * normalize_dim(s1, 0, 0.7)).epsilon(1e-12));
  }
}
