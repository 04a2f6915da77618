#include <doctest.h>

#include <random>

#include "harmctl/calibration.hpp"
#include "harmctl/error.hpp"
#include "helpers.hpp"

using namespace harm;

namespace {

RiskCurve harm_of(std::vector<double> b, std::size_t n, double domain = 1.0) {
  return RiskCurve(CurveKind::HarmNonincreasing, std::move(b), n, domain);
}
RiskCurve loss_of(std::vector<double> b, std::size_t n, double domain = 1.0) {
  return RiskCurve(CurveKind::BenefitLossNondecreasing, std::move(b), n, domain);
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::Io;
}

}  // namespace

TEST_CASE("loss budget") {
  CHECK(loss_budget(9, 0.2) == 1);
  CHECK(loss_budget(9, 0.1) == 0);
  CHECK(loss_budget(9, 0.05) == -1);
  CHECK(loss_budget(500, 0.1) == 49);
  CHECK(loss_budget(99, 0.01) == 0);
}

TEST_CASE("lambda_hat examples") {
  CHECK(lambda_hat(harm_of({0.1, 0.3, 0.5}, 9), 0.2) == 0.3);
  CHECK(lambda_hat(harm_of({}, 9), 0.1) == 0.0);
  CHECK(code_of([] { lambda_hat(harm_of({0.1}, 9), 0.05); }) == ErrorCode::AlphaTooSmall);
  // alpha just above 1/(n+1) with every sample harmful until its breakpoint
  CHECK(lambda_hat(harm_of({0.2, 0.9, 0.4}, 3), 0.26) == 0.9);
  CHECK(lambda_hat(harm_of({0.2, 0.9, 0.4}, 3), 1.0) == 0.0);
}

TEST_CASE("lambda_check examples") {
  auto t = lambda_check(loss_of({0.2, 0.4, 0.7}, 9), 0.3);
  CHECK(t.value == 0.7);
  CHECK_FALSE(t.inclusive);
  auto full = lambda_check(loss_of({}, 9), 0.3);
  CHECK(full.value == 1.0);
  CHECK(full.inclusive);
  CHECK(code_of([] { lambda_check(loss_of({0.0, 0.0}, 9), 0.15); }) == ErrorCode::Infeasible);
  CHECK(code_of([] { lambda_check(loss_of({0.5}, 9), 0.05); }) == ErrorCode::AlphaTooSmall);
}

TEST_CASE("counterfactual control set") {
  auto r = harm_controlling_set_cf(harm_of({0.1, 0.3, 0.5}, 9), 0.2);
  CHECK(r.mode == ControlMode::Counterfactual);
  CHECK(r.lower == 0.3);
  CHECK(r.upper == 1.0);
  CHECK(r.upper_inclusive);
  CHECK(r.contains(1.0));
  CHECK_FALSE(r.contains(0.29));
  auto loose = harm_controlling_set_cf(harm_of({0.1, 0.3, 0.5}, 9), 1.0);
  CHECK(loose.lower == 0.0);
}

TEST_CASE("interventional interval") {
  // lambda_hat(0.1) = 0.4, lambda_check(0.1) = 0.3 exclusive
  auto r = harm_controlling_set_interv(harm_of({0.4}, 9), loss_of({0.3}, 9), 0.2, 0.1);
  CHECK_FALSE(r.feasible);
  CHECK(r.length() == 0.0);
  CHECK_FALSE(r.contains(0.35));

  auto open = harm_controlling_set_interv(harm_of({0.2}, 9), loss_of({}, 9), 0.2, 0.1);
  CHECK(open.feasible);
  CHECK(open.lower == 0.2);
  CHECK(open.upper == 1.0);
  CHECK(open.upper_inclusive);
  CHECK(open.alpha_prime == 0.1);

  auto excl = harm_controlling_set_interv(harm_of({0.2}, 9), loss_of({0.6}, 9), 0.2, 0.1);
  CHECK(excl.feasible);
  CHECK(excl.upper == 0.6);
  CHECK_FALSE(excl.upper_inclusive);
  CHECK(excl.contains(0.5999));
  CHECK_FALSE(excl.contains(0.6));

  CHECK(code_of([] { harm_controlling_set_interv(harm_of({}, 9), loss_of({}, 9), 0.15, 0.1); }) ==
        ErrorCode::AlphaSplitInvalid);
  // Infeasible upper end becomes an empty interval, not an error
  auto none = harm_controlling_set_interv(harm_of({}, 9), loss_of({0.0, 0.0}, 9), 0.25, 0.1);
  CHECK_FALSE(none.feasible);
}

TEST_CASE("alpha' selection examples") {
  // G = 0: longest interval wherever lambda_hat is smallest. The largest
  // grid alpha' (0.4) is the only one reaching budget 3.
  std::vector<double> bps = {0.05, 0.15, 0.25, 0.35, 0.45, 0.55, 0.65, 0.75, 0.85};
  CHECK(select_alpha_prime(harm_of(bps, 9), loss_of({}, 9), 0.5, 0.01) == doctest::Approx(0.4));
  // H = 0: upper end shrinks with alpha', so the smallest candidate wins.
  CHECK(select_alpha_prime(harm_of({}, 9), loss_of(bps, 9), 0.5, 0.01) == doctest::Approx(0.1));
  // alpha = 2/(n+1): single candidate
  auto grid = alpha_prime_grid(9, 0.2, 0.001);
  REQUIRE(grid.size() == 1);
  CHECK(grid[0] == doctest::Approx(0.1));
  CHECK(select_alpha_prime(harm_of(bps, 9), loss_of(bps, 9), 0.2, 0.001) == doctest::Approx(0.1));
  CHECK(code_of([&] { select_alpha_prime(harm_of(bps, 9), loss_of(bps, 9), 0.15, 0.001); }) ==
        ErrorCode::AlphaTooSmall);
}

TEST_CASE("pooled alpha' uses the mean length across draws") {
  std::vector<double> bps = {0.05, 0.15, 0.25, 0.35, 0.45, 0.55, 0.65, 0.75, 0.85};
  std::vector<CurvePair> same = {{harm_of(bps, 9), loss_of({}, 9)}, {harm_of(bps, 9), loss_of({}, 9)}};
  CHECK(select_alpha_prime_pooled(same, 0.5, 0.01) == doctest::Approx(0.4));
  std::vector<CurvePair> one = {{harm_of(bps, 9), loss_of(bps, 9)}};
  CHECK(select_alpha_prime_pooled(one, 0.5, 0.01) == select_alpha_prime(harm_of(bps, 9), loss_of(bps, 9), 0.5, 0.01));
}

TEST_CASE("property: monotone in alpha") {
  std::mt19937_64 gen(31);
  const auto pred = SetPredictor::threshold();
  for (int t = 0; t < 40; ++t) {
    auto rows = oracle::random_rows(20 + t * 7, 6, 0.6, gen);
    auto d = dataset_of(rows);
    auto h = harm_curve(d, pred);
    auto g = benefit_loss_curve(d, pred);
    const double lo = 1.0 / static_cast<double>(d.size() + 1);
    double prev_hat = 2.0;
    double prev_check = -1.0;
    for (double a = lo; a <= 1.0; a += 0.01) {
      const double lh = lambda_hat(h, a);
      CHECK(lh <= prev_hat);
      prev_hat = lh;
      try {
        const double lc = lambda_check(g, a).value;
        CHECK(lc >= prev_check);
        prev_check = lc;
      } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Infeasible);
        CHECK(prev_check < 0.0);
      }
    }
  }
}

TEST_CASE("property: closed form matches grid search within one step") {
  std::mt19937_64 gen(32);
  const auto grid = oracle::dense_grid(1.0, 1e-4);
  const auto pred = SetPredictor::threshold();
  for (int t = 0; t < 10; ++t) {
    auto rows = oracle::random_rows(10 + static_cast<std::size_t>(gen() % 100), 8, 0.7, gen);
    auto d = dataset_of(rows);
    const double alpha = 0.05 + 0.03 * t;
    auto want_hat = oracle::lambda_hat_grid(rows, alpha, grid);
    auto h = harm_curve(d, pred);
    if (want_hat) {
      const double got = lambda_hat(h, alpha);
      CHECK(got <= *want_hat);
      CHECK(*want_hat - got <= 1e-4 + 1e-12);
    } else {
      CHECK_THROWS_AS(lambda_hat(h, alpha), Error);
    }
  }
}
