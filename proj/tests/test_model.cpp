#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "volcp/volcp.hpp"

using namespace volcp;
using Catch::Approx;

TEST_CASE("garch11 filter: constant variance when alpha = beta = 0") {
  const std::vector<double> y{0.3, -2.0, 5.0, 0.1};
  const auto v = garch11_filter({1.0, 0.0, 0.0}, y, 1.0);
  for (double s : v.sigma_sq) CHECK(s == 1.0);
}

TEST_CASE("garch11 filter: hand-evaluated second step") {
  const std::vector<double> y{1.0, 0.0};
  const auto v = garch11_filter({0.1, 0.05, 0.9}, y, 1.0);
  CHECK(v.sigma_sq[0] == 1.0);
  CHECK(v.sigma_sq[1] == Approx(1.05).epsilon(1e-15));
}

TEST_CASE("garch11 filter: zero returns converge to omega/(1-beta)") {
  const std::vector<double> y(400, 0.0);
  const auto v = garch11_filter({0.1, 0.0, 0.9}, y, 2.0);
  // deviation from the fixed point shrinks by beta each step
  for (std::size_t t = 1; t < 50; ++t)
    CHECK(v.sigma_sq[t] - 1.0 == Approx(std::pow(0.9, static_cast<double>(t))).epsilon(1e-12));
  CHECK(v.sigma_sq.back() == Approx(1.0).epsilon(1e-12));
}

TEST_CASE("gjr11 filter: indicator on negative returns") {
  const AsymGarchParams p{0.1, 0.05, 0.8, 0.1};
  CHECK(gjr11_filter(p, std::vector<double>{-1.0, 0.0}, 1.0).sigma_sq[1] == Approx(1.05).epsilon(1e-15));
  CHECK(gjr11_filter(p, std::vector<double>{1.0, 0.0}, 1.0).sigma_sq[1] == Approx(0.95).epsilon(1e-15));
}

TEST_CASE("gjr11 with gamma = 0 equals garch11") {
  const auto y = sample(InnovationDist::student_t(6), 500, 3);
  const auto a = garch11_filter({0.1, 0.05, 0.9}, y, 1.7);
  const auto b = gjr11_filter({0.1, 0.05, 0.9, 0.0}, y, 1.7);
  for (std::size_t t = 0; t < y.size(); ++t) CHECK(std::abs(a.sigma_sq[t] - b.sigma_sq[t]) <= 1e-15 * a.sigma_sq[t]);
}

TEST_CASE("egarch11 filter: hand-evaluated values") {
  const double eabs = std::sqrt(2.0 / std::numbers::pi);
  const auto flat = egarch11_filter({0.0, 0.0, 0.0, 0.0}, std::vector<double>{0.4, -3.0, 2.0}, 1.0, eabs);
  for (double s : flat.sigma_sq) CHECK(s == 1.0);
  const auto v = egarch11_filter({0.0, 0.0, 0.0, 1.0}, std::vector<double>{0.5, 0.0}, 1.0, eabs);
  CHECK(v.sigma_sq[1] == Approx(std::exp(0.5)).epsilon(1e-14));
  CHECK(v.sigma_sq[1] == Approx(1.64872).epsilon(1e-5));
}

TEST_CASE("egarch11 filter: alpha = gamma = 0 gives a return-free AR(1) in log variance") {
  const double eabs = std::sqrt(2.0 / std::numbers::pi);
  const AsymGarchParams p{0.2, 0.0, 0.7, 0.0};
  const auto a = egarch11_filter(p, sample(InnovationDist::gaussian(), 50, 1), 3.0, eabs);
  const auto b = egarch11_filter(p, sample(InnovationDist::gaussian(), 50, 2), 3.0, eabs);
  double l = std::log(3.0);
  for (std::size_t t = 0; t < 50; ++t) {
    CHECK(a.sigma_sq[t] == b.sigma_sq[t]);
    CHECK(std::log(a.sigma_sq[t]) == Approx(l).epsilon(1e-13));
    l = 0.2 + 0.7 * l;
  }
}

TEST_CASE("egarch11 filter: leverage raises variance after negative shocks when gamma < 0") {
  const double eabs = std::sqrt(2.0 / std::numbers::pi);
  const AsymGarchParams p{0.0, 0.1, 0.9, -0.1};
  const double up = egarch11_filter(p, std::vector<double>{1.0, 0.0}, 1.0, eabs).sigma_sq[1];
  const double down = egarch11_filter(p, std::vector<double>{-1.0, 0.0}, 1.0, eabs).sigma_sq[1];
  CHECK(down > up);
}

TEST_CASE("garch(p,q) filter with one lag each equals garch11") {
  const auto y = sample(InnovationDist::gaussian(), 300, 9);
  const std::vector<double> a{0.05}, b{0.9};
  const auto pq = garch_pq_filter(0.1, a, b, y, 1.3);
  const auto g = garch11_filter({0.1, 0.05, 0.9}, y, 1.3);
  for (std::size_t t = 0; t < y.size(); ++t) CHECK(pq.sigma_sq[t] == Approx(g.sigma_sq[t]).epsilon(1e-14));
}

TEST_CASE("garch(2,1) filter uses a flat backcast at sigma1_sq") {
  const std::vector<double> y{1.0, 2.0, -1.0};
  const std::vector<double> a{0.1, 0.05}, b{0.8};
  const auto v = garch_pq_filter(0.2, a, b, y, 1.5);
  CHECK(v.sigma_sq[0] == 1.5);
  // t=2: y_1^2 = 1, pre-sample y_0^2 = 1.5, sigma_1^2 = 1.5
  CHECK(v.sigma_sq[1] == Approx(0.2 + 0.1 * 1.0 + 0.05 * 1.5 + 0.8 * 1.5).epsilon(1e-15));
  CHECK(v.sigma_sq[2] == Approx(0.2 + 0.1 * 4.0 + 0.05 * 1.0 + 0.8 * v.sigma_sq[1]).epsilon(1e-15));
}

TEST_CASE("filters reject bad inputs") {
  const std::vector<double> y{1.0, std::nan("")};
  CHECK_THROWS_AS(garch11_filter({0.1, 0.05, 0.9}, y, 1.0), Error);
  try {
    garch11_filter({0.1, 0.05, 0.9}, y, 1.0);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::invalid_input);
  }
  try {
    garch11_filter({0.1, 0.5, 0.6}, std::vector<double>{1.0}, 1.0);
    FAIL("expected a domain error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::domain);
  }
  CHECK_THROWS_AS(garch11_filter({-0.1, 0.05, 0.9}, std::vector<double>{1.0}, 1.0), Error);
  CHECK_THROWS_AS(garch11_filter({0.1, 0.05, 0.9}, std::vector<double>{1.0}, 0.0), Error);
  CHECK_THROWS_AS(gjr11_filter({0.1, 0.1, 0.8, 0.3}, std::vector<double>{1.0}, 1.0), Error);
  CHECK_THROWS_AS(egarch11_filter({0.1, 0.1, 1.0, 0.0}, std::vector<double>{1.0}, 1.0, 0.8), Error);
}

TEST_CASE("property: filter outputs are positive and finite for valid parameters") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double eabs = std::sqrt(2.0 / std::numbers::pi);
  for (int rep = 0; rep < 50; ++rep) {
    const double alpha = 0.3 * u(rng), beta = (0.999 - alpha) * u(rng), omega = 1e-3 + u(rng);
    const auto y = sample(InnovationDist::student_t(4.5), 300, 100 + rep);
    std::vector<double> scaled(y);
    for (double& v : scaled) v *= 5.0;
    const auto g = garch11_filter({omega, alpha, beta}, scaled, 0.5 + u(rng));
    const auto j = gjr11_filter({omega, alpha * 0.5, beta, alpha}, scaled, 0.5 + u(rng));
    const auto e = egarch11_filter({u(rng) - 0.5, u(rng), 2 * u(rng) - 1, u(rng) - 0.5}, scaled, 1.0, eabs);
    for (std::size_t t = 0; t < y.size(); ++t) {
      CHECK((g.sigma_sq[t] > 0 && std::isfinite(g.sigma_sq[t])));
      CHECK((j.sigma_sq[t] > 0 && std::isfinite(j.sigma_sq[t])));
      CHECK((e.sigma_sq[t] > 0 && std::isfinite(e.sigma_sq[t])));
    }
  }
}

TEST_CASE("property: garch11 scale equivariance") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto y = sample(InnovationDist::gaussian(), 200, seed);
    const double c = 0.3 + 0.5 * static_cast<double>(seed);
    std::vector<double> cy(y);
    for (double& v : cy) v *= c;
    const auto a = garch11_filter({0.1, 0.05, 0.9}, y, 1.2);
    const auto b = garch11_filter({c * c * 0.1, 0.05, 0.9}, cy, c * c * 1.2);
    for (std::size_t t = 0; t < y.size(); ++t) CHECK(b.sigma_sq[t] == Approx(c * c * a.sigma_sq[t]).epsilon(1e-13));
  }
}

TEST_CASE("simulate: white noise segment has unit variance") {
  const auto s = simulate({{{ModelKind::garch11, 1.0, 0.0, 0.0, 0.0}, 10000, InnovationDist::gaussian()}}, 5);
  CHECK(s.returns.size() == 10000);
  CHECK(stats::variance(s.returns) == Approx(1.0).margin(0.05));
}

TEST_CASE("simulate: long DGP1 series has variance near omega/(1-alpha-beta)") {
  const auto s = simulate({{dgp1(), 100000, InnovationDist::gaussian()}}, 17);
  CHECK(stats::variance(s.returns) == Approx(2.0).epsilon(0.10));
}

TEST_CASE("simulate: deterministic by seed and marks segment boundaries") {
  const std::vector<DgpSegmentSpec> segs{{dgp1(), 1000, InnovationDist::student_t(6)},
                                         {dgp2(), 1000, InnovationDist::student_t(6)}};
  const auto a = simulate(segs, 42), b = simulate(segs, 42), c = simulate(segs, 43);
  CHECK(a.returns == b.returns);
  CHECK(a.volatility.sigma_sq == b.volatility.sigma_sq);
  CHECK(a.returns != c.returns);
  CHECK(a.truth.n == 2000);
  CHECK(a.truth.cps == std::vector<std::size_t>{1000});
}

TEST_CASE("simulate: volatility path obeys each segment's recursion with state carried across boundaries") {
  const std::vector<DgpSegmentSpec> segs{{dgp1(), 300, InnovationDist::gaussian()},
                                         {dgp2(), 200, InnovationDist::gaussian()},
                                         {{ModelKind::gjr11, 0.1, 0.03, 0.85, 0.1}, 200, InnovationDist::gaussian()}};
  const auto s = simulate(segs, 8);
  const auto& y = s.returns;
  const auto& v = s.volatility.sigma_sq;
  for (std::size_t t = 1; t < y.size(); ++t) {
    const ModelParams& p = t < 300 ? segs[0].params : t < 500 ? segs[1].params : segs[2].params;
    const double lev = p.model == ModelKind::gjr11 && y[t - 1] < 0 ? p.gamma : 0.0;
    CHECK(v[t] == Approx(p.omega + (p.alpha + lev) * y[t - 1] * y[t - 1] + p.beta * v[t - 1]).epsilon(1e-13));
  }
}

TEST_CASE("simulate: rejects empty or invalid designs") {
  CHECK_THROWS_AS(simulate({}, 1), Error);
  CHECK_THROWS_AS(simulate({{dgp1(), 0, InnovationDist::gaussian()}}, 1), Error);
  CHECK_THROWS_AS(simulate({{{ModelKind::garch11, 0.1, 0.5, 0.6, 0.0}, 10, InnovationDist::gaussian()}}, 1), Error);
}

TEST_CASE("change-point sets: segments tile the series; validation") {
  const auto c = make_change_points(10, {7, 3, 3});
  CHECK(c.cps == std::vector<std::size_t>{3, 7});
  const auto segs = c.segments();
  REQUIRE(segs.size() == 3);
  CHECK(segs[0] == std::pair<std::size_t, std::size_t>{1, 3});
  CHECK(segs[1] == std::pair<std::size_t, std::size_t>{4, 7});
  CHECK(segs[2] == std::pair<std::size_t, std::size_t>{8, 10});
  CHECK_NOTHROW(validate(c, 3));
  CHECK_THROWS_AS(validate(c, 4), Error);
  CHECK_THROWS_AS(validate(ChangePointSet{10, {10}}), Error);
}
