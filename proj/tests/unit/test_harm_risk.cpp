#include <doctest.h>

#include <random>

#include "harmctl/error.hpp"
#include "harmctl/harm_risk.hpp"
#include "helpers.hpp"

using namespace harm;

TEST_CASE("per-sample indicators") {
  const auto pred = SetPredictor::threshold();
  auto s = sample_of({0.7, 0.2, 0.1}, 1, 1);
  CHECK(per_sample_harm_cf(s, pred.predict(s, 0.1)) == 1);
  CHECK(per_sample_harm_cf(s, pred.predict(s, 1.0)) == 0);
  auto wrong = sample_of({0.7, 0.2, 0.1}, 1, 0);
  for (double l : {0.0, 0.5, 1.0}) CHECK(per_sample_harm_cf(wrong, pred.predict(wrong, l)) == 0);
  CHECK(per_sample_benefit_loss(wrong, pred.predict(wrong, 1.0)) == 1);
  CHECK(per_sample_benefit_loss(wrong, pred.predict(wrong, 0.0)) == 0);
}

TEST_CASE("harm curve hand examples") {
  RiskCurve one(CurveKind::HarmNonincreasing, {0.3}, 4, 1.0);
  CHECK(one(0.2) == 0.25);
  CHECK(one(0.3) == 0.0);
  CHECK(one(0.5) == 0.0);
  RiskCurve two(CurveKind::HarmNonincreasing, {0.6, 0.1}, 2, 1.0);
  CHECK(two(0.0) == 1.0);
  CHECK(two(0.1) == 0.5);
  CHECK(two(0.6) == 0.0);
  CHECK_THROWS_AS(RiskCurve(CurveKind::HarmNonincreasing, {}, 0, 1.0), Error);
}

TEST_CASE("benefit loss curve hand examples") {
  RiskCurve g(CurveKind::BenefitLossNondecreasing, {0.3}, 4, 1.0);
  CHECK(g(0.2) == 0.0);
  CHECK(g(0.3) == 0.25);
}

TEST_CASE("curves from data: all wrong, all right, full set") {
  std::mt19937_64 gen(2);
  auto rows = oracle::random_rows(50, 5, 0.6, gen);
  auto wrong = rows, right = rows;
  std::size_t incorrect = 0;
  for (auto& r : wrong) r.alone = (r.truth + 1) % 5;
  for (auto& r : right) r.alone = r.truth;
  for (auto& r : rows) incorrect += r.alone != r.truth ? 1 : 0;
  const auto pred = SetPredictor::threshold();
  auto h = harm_curve(dataset_of(wrong), pred);
  auto g = benefit_loss_curve(dataset_of(right), pred);
  for (double l = 0.0; l <= 1.0; l += 0.05) {
    CHECK(h(l) == 0.0);
    CHECK(g(l) == 0.0);
  }
  CHECK(benefit_loss_curve(dataset_of(rows), pred)(1.0) ==
        static_cast<double>(incorrect) / static_cast<double>(rows.size()));
  CHECK(harm_curve(dataset_of(rows), pred)(1.0) == 0.0);
  CHECK_THROWS_AS(harm_curve(Dataset{}, pred), Error);
}

TEST_CASE("harm bounds hand fixture") {
  LabelSpace labels({"a", "b", "c"});
  std::vector<Sample> s;
  for (int i = 0; i < 2; ++i) s.push_back(sample_of({0.8, 0.15, 0.05}, 1, 1, "h" + std::to_string(i)));
  for (int i = 0; i < 3; ++i) s.push_back(sample_of({0.8, 0.15, 0.05}, 0, 1, "w" + std::to_string(i)));
  for (int i = 0; i < 3; ++i) s.push_back(sample_of({0.8, 0.15, 0.05}, 0, 0, "c" + std::to_string(i)));
  for (int i = 0; i < 2; ++i) s.push_back(sample_of({0.8, 0.15, 0.05}, 2, 0, "x" + std::to_string(i)));
  auto d = make_dataset(labels, s);
  const auto pred = SetPredictor::threshold();
  auto b = harm_bounds(d, pred, 0.5);
  CHECK(b.lower == doctest::Approx(0.2));
  CHECK(b.upper == doctest::Approx(0.5));
  auto full = harm_bounds(d, pred, 1.0);
  CHECK(full.lower == 0.0);
  CHECK(full.upper == doctest::Approx(0.5));  // error rate
  CHECK_THROWS_AS(harm_bounds(Dataset{}, pred, 0.5), Error);
}

TEST_CASE("harm bounds at zero with perfect top-1 and experts") {
  std::mt19937_64 gen(3);
  auto rows = oracle::random_rows(20, 4, 1.0, gen);
  for (auto& r : rows) {
    r.truth = oracle::top_label(r.scores);
    r.alone = r.truth;
  }
  auto b = harm_bounds(dataset_of(rows), SetPredictor::threshold(), 0.0);
  CHECK(b.lower == 0.0);
  CHECK(b.upper == 0.0);
}

TEST_CASE("property: curves equal brute-force recomputation and are monotone") {
  std::mt19937_64 gen(21);
  const auto grid = oracle::dense_grid(1.0, 1e-3);
  const auto pred = SetPredictor::threshold();
  for (int t = 0; t < 30; ++t) {
    const std::size_t n = 1 + static_cast<std::size_t>(gen() % 200);
    auto rows = oracle::random_rows(n, 2 + t % 15, 0.3 + 0.02 * t, gen);
    auto d = dataset_of(rows);
    auto h = harm_curve(d, pred);
    auto g = benefit_loss_curve(d, pred);
    double prev_h = 2.0, prev_g = -1.0;
    for (double l : grid) {
      CHECK(h.count_at(l) == oracle::harm_count(rows, l));
      CHECK(g.count_at(l) == oracle::loss_count(rows, l));
      CHECK(h(l) <= prev_h);
      CHECK(g(l) >= prev_g);
      prev_h = h(l);
      prev_g = g(l);
      auto b = harm_bounds(d, pred, l);
      CHECK(b.lower == h(l));
      CHECK(b.upper - b.lower == doctest::Approx(g(l)).epsilon(1e-12));
    }
    // right-continuity at every breakpoint
    for (double b : h.breakpoints()) {
      CHECK(h(b) == h(std::nextafter(b, 2.0)));
      if (b > 0.0) CHECK(h(std::nextafter(b, -1.0)) >= h(b));
    }
  }
}
