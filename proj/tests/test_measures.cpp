#include <doctest.h>

#include <map>

#include "otdp/measures.hpp"
#include "otdp/measures_json.hpp"
#include "test_support.hpp"

using namespace otdp;
using otdp::testing::Rng;

namespace {

DiscreteMeasure<int> random_int_measure(Rng& rng, std::size_t atoms, int lo, int hi) {
  std::vector<DiscreteMeasure<int>::Atom> a;
  const Eigen::VectorXd w = otdp::testing::random_weights(rng, atoms);
  for (std::size_t i = 0; i < atoms; ++i) {
    a.push_back({static_cast<int>(otdp::testing::pick(rng, 0, static_cast<std::size_t>(hi - lo))) + lo, w[static_cast<Eigen::Index>(i)]});
  }
  return DiscreteMeasure<int>::from_atoms(std::move(a));
}

}  // namespace

TEST_CASE("construction canonicalizes atoms") {
  auto m = DiscreteMeasure<int>::from_atoms({{3, 0.25}, {-1, 0.5}, {3, 0.25}});
  REQUIRE(m.size() == 2);
  CHECK(m.point(0) == -1);
  CHECK(m.weight(0) == doctest::Approx(0.5));
  CHECK(m.point(1) == 3);
  CHECK(m.weight(1) == doctest::Approx(0.5));
}

TEST_CASE("construction rejects bad weights") {
  CHECK_THROWS_AS(DiscreteMeasure<int>::from_atoms({{0, 0.5}, {1, 0.4}}, kInputMassTolerance), DomainError);
  CHECK_THROWS_AS(DiscreteMeasure<int>::from_atoms({{0, 1.5}, {1, -0.5}}), DomainError);
}

TEST_CASE("tiny weights are pruned and the rest renormalized") {
  auto m = DiscreteMeasure<int>::from_atoms({{0, 1.0 - 1e-16}, {1, 1e-16}});
  REQUIRE(m.size() == 1);
  CHECK(m.weight(0) == 1.0);
}

TEST_CASE("euclidean points within tolerance merge") {
  Eigen::VectorXd a(2), b(2);
  a << 1.0, 2.0;
  b << 1.0 + 1e-13, 2.0;
  auto m = DiscreteMeasure<Eigen::VectorXd>::from_atoms({{a, 0.5}, {b, 0.5}});
  CHECK(m.size() == 1);
}

TEST_CASE("pushforward of the robots state-input table") {
  using Pair = std::pair<int, int>;
  auto lambda = DiscreteMeasure<Pair>::from_atoms({{{-1, 0}, 0.2}, {{-1, -1}, 0.3}, {{0, 0}, 0.5}});
  auto next = pushforward(lambda, [](const Pair& p) { return p.first * p.second; });
  REQUIRE(next.size() == 2);
  CHECK(next.weight_of(0) == doctest::Approx(0.7).epsilon(1e-14));
  CHECK(next.weight_of(1) == doctest::Approx(0.3).epsilon(1e-14));
}

TEST_CASE("pushforward identity and merging") {
  auto m = DiscreteMeasure<int>::from_atoms({{-1, 0.5}, {1, 0.5}});
  CHECK(approx_equal(pushforward(m, [](int x) { return x; }), m));
  auto sq = pushforward(m, [](int x) { return x * x; });
  REQUIRE(sq.size() == 1);
  CHECK(sq.point(0) == 1);
  CHECK(sq.weight(0) == 1.0);
}

TEST_CASE("pushforward through a partial map fails on undefined atoms") {
  auto m = DiscreteMeasure<int>::from_atoms({{-1, 0.5}, {1, 0.5}});
  auto partial = [](int x) -> std::optional<int> {
    if (x < 0) return std::nullopt;
    return x;
  };
  CHECK_THROWS_AS(pushforward(m, partial), DomainError);
}

TEST_CASE("marginals of a split plan") {
  using T = std::vector<int>;
  auto plan = DiscreteMeasure<T>::from_atoms({{T{0, -1}, 0.5}, {T{0, 1}, 0.5}});
  auto x = marginal(plan, 0);
  REQUIRE(x.size() == 1);
  CHECK(x.point(0) == 0);
  auto y = marginal(plan, 1);
  CHECK(y.weight_of(-1) == doctest::Approx(0.5));
  CHECK(y.weight_of(1) == doctest::Approx(0.5));
  CHECK_THROWS_AS(marginal(plan, 2), DomainError);
}

TEST_CASE("expected values") {
  auto sq = [](int x) { return ExtReal(static_cast<double>(x * x)); };
  CHECK(expected_value(DiscreteMeasure<int>::dirac(0), sq) == ExtReal(0.0));
  CHECK(expected_value(DiscreteMeasure<int>::from_atoms({{-1, 0.5}, {1, 0.5}}), sq) == ExtReal(1.0));
  CHECK(expected_value(DiscreteMeasure<int>::dirac(3), [](int) { return ExtReal::infinity(); }).is_infinite());
}

TEST_CASE("pushforward conserves mass and composes") {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    auto m = random_int_measure(rng, otdp::testing::pick(rng, 1, 6), -3, 3);
    std::map<int, int> f, g;
    for (int x = -3; x <= 3; ++x) f[x] = static_cast<int>(otdp::testing::pick(rng, 0, 4));
    for (int y = 0; y <= 4; ++y) g[y] = static_cast<int>(otdp::testing::pick(rng, 0, 2)) - 1;
    auto once = pushforward(m, [&](int x) { return f.at(x); });
    CHECK(std::abs(once.weights().sum() - 1.0) <= 1e-12);
    auto twice = pushforward(once, [&](int y) { return g.at(y); });
    auto composed = pushforward(m, [&](int x) { return g.at(f.at(x)); });
    CHECK(max_weight_difference(twice, composed) <= 1e-12);
  }
}

TEST_CASE("marginals of products reproduce the factors") {
  Rng rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<DiscreteMeasure<int>> factors{random_int_measure(rng, otdp::testing::pick(rng, 1, 6), 0, 9),
                                              random_int_measure(rng, otdp::testing::pick(rng, 1, 6), 0, 9)};
    auto joint = product<int>(factors);
    CHECK(max_weight_difference(marginal(joint, 0), factors[0]) <= 1e-12);
    CHECK(max_weight_difference(marginal(joint, 1), factors[1]) <= 1e-12);
  }
}

TEST_CASE("json encoding is canonical") {
  auto m = DiscreteMeasure<std::string>::from_atoms({{"b", 0.75}, {"a", 0.25}});
  CHECK(to_json(m).dump() == R"({"atoms":[{"point":"a","weight":0.25},{"point":"b","weight":0.75}],"support":"labeled"})");
  CHECK(label_from_json(nlohmann::json(-1)) == "-1");
  CHECK_THROWS_AS(label_from_json(nlohmann::json::array()), DomainError);
}
