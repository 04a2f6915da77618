#include "harmctl/calibration.hpp"

#include <cmath>

#include <fmt/format.h>

#include "harmctl/error.hpp"

namespace harm {

namespace {

void check_alpha(std::size_t n, double alpha) {
  if (!(alpha <= 1.0 + kAlphaSlack)) {
    throw Error(ErrorCode::ConfigInvalid, fmt::format("alpha {} is above 1", alpha));
  }
  if (loss_budget(n, alpha) < 0) {
    throw Error(ErrorCode::AlphaTooSmall,
                fmt::format("alpha {} is below 1/(n+1) = {} for n = {}", alpha,
                            1.0 / static_cast<double>(n + 1), n));
  }
}

bool interval_feasible(double lower, const UpperThreshold& upper) {
  return lower < upper.value || (lower == upper.value && upper.inclusive);
}

}  // namespace

std::string_view to_string(ControlMode mode) {
  return mode == ControlMode::Counterfactual ? "counterfactual" : "interventional";
}

ControlMode parse_control_mode(std::string_view text) {
  if (text == "counterfactual" || text == "cf") return ControlMode::Counterfactual;
  if (text == "interventional" || text == "interv") return ControlMode::Interventional;
  throw Error(ErrorCode::ConfigInvalid, fmt::format("unknown mode '{}'", text));
}

bool HarmControlResult::contains(double lambda) const {
  if (!feasible) return false;
  if (lambda < lower) return false;
  return upper_inclusive ? lambda <= upper : lambda < upper;
}

double HarmControlResult::length() const { return feasible ? upper - lower : 0.0; }

long long loss_budget(std::size_t n, double alpha) {
  if (!(alpha >= 0.0)) return -1;
  return static_cast<long long>(std::floor(alpha * static_cast<double>(n + 1) - 1.0 + kAlphaSlack));
}

double lambda_hat(const RiskCurve& harm, double alpha) {
  if (harm.kind() != CurveKind::HarmNonincreasing) {
    throw Error(ErrorCode::ConfigInvalid, "lambda_hat needs a harm curve");
  }
  check_alpha(harm.n(), alpha);
  const long long budget = loss_budget(harm.n(), alpha) - static_cast<long long>(harm.beyond_domain());
  if (budget < 0) {
    throw Error(ErrorCode::Infeasible,
                fmt::format("alpha {} cannot be met anywhere in [0, {}]", alpha, harm.domain_max()));
  }
  const auto& b = harm.breakpoints();
  const auto m = static_cast<long long>(b.size());
  if (m <= budget) return 0.0;
  // Smallest candidate with at most `budget` breakpoints strictly above it.
  return b[static_cast<std::size_t>(m - budget - 1)];
}

UpperThreshold lambda_check(const RiskCurve& benefit_loss, double alpha) {
  if (benefit_loss.kind() != CurveKind::BenefitLossNondecreasing) {
    throw Error(ErrorCode::ConfigInvalid, "lambda_check needs a benefit-loss curve");
  }
  check_alpha(benefit_loss.n(), alpha);
  const long long budget = loss_budget(benefit_loss.n(), alpha);
  const auto& b = benefit_loss.breakpoints();
  if (static_cast<long long>(b.size()) <= budget) return {benefit_loss.domain_max(), true};
  // The (budget+1)-th smallest breakpoint is the first lambda violating it.
  const double t = b[static_cast<std::size_t>(budget)];
  if (t <= 0.0) {
    throw Error(ErrorCode::Infeasible,
                fmt::format("benefit-loss bound {} is violated already at lambda = 0", alpha));
  }
  return {t, false};
}

HarmControlResult harm_controlling_set_cf(const RiskCurve& harm, double alpha) {
  HarmControlResult r;
  r.mode = ControlMode::Counterfactual;
  r.alpha = alpha;
  r.lower = lambda_hat(harm, alpha);
  r.upper = harm.domain_max();
  r.upper_inclusive = true;
  r.feasible = true;
  return r;
}

HarmControlResult harm_controlling_set_cf(const Dataset& calibration, const SetPredictor& predictor,
                                          double alpha) {
  return harm_controlling_set_cf(harm_curve(calibration, predictor), alpha);
}

HarmControlResult harm_controlling_set_interv(const RiskCurve& harm, const RiskCurve& benefit_loss,
                                              double alpha, double alpha_prime) {
  const std::size_t n = harm.n();
  if (benefit_loss.n() != n) throw Error(ErrorCode::ConfigInvalid, "curves built on different calibration sets");
  if (loss_budget(n, alpha_prime) < 0 || loss_budget(n, alpha - alpha_prime) < 0) {
    throw Error(ErrorCode::AlphaSplitInvalid,
                fmt::format("alpha' = {} and alpha - alpha' = {} must both be >= 1/(n+1) = {}",
                            alpha_prime, alpha - alpha_prime, 1.0 / static_cast<double>(n + 1)));
  }
  HarmControlResult r;
  r.mode = ControlMode::Interventional;
  r.alpha = alpha;
  r.alpha_prime = alpha_prime;
  r.upper = benefit_loss.domain_max();

  double lower = 0.0;
  UpperThreshold upper;
  try {
    lower = lambda_hat(harm, alpha_prime);
    upper = lambda_check(benefit_loss, alpha - alpha_prime);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::Infeasible) throw;
    r.feasible = false;
    r.lower = lower;
    r.upper_inclusive = false;
    return r;
  }
  r.lower = lower;
  r.upper = upper.value;
  r.upper_inclusive = upper.inclusive;
  r.feasible = interval_feasible(lower, upper);
  return r;
}

HarmControlResult harm_controlling_set_interv(const Dataset& calibration,
                                              const SetPredictor& predictor, double alpha,
                                              double alpha_prime) {
  return harm_controlling_set_interv(harm_curve(calibration, predictor),
                                     benefit_loss_curve(calibration, predictor), alpha, alpha_prime);
}

std::vector<double> alpha_prime_grid(std::size_t n, double alpha, double step) {
  if (!(step > 0.0)) throw Error(ErrorCode::ConfigInvalid, "alpha' grid step must be positive");
  const double floor_alpha = 1.0 / static_cast<double>(n + 1);
  if (loss_budget(n, alpha - floor_alpha) < 0) {
    throw Error(ErrorCode::AlphaTooSmall,
                fmt::format("alpha {} is below 2/(n+1) = {}; no alpha' split exists", alpha,
                            2.0 * floor_alpha));
  }
  std::vector<double> grid;
  for (std::size_t j = 0;; ++j) {
    const double a = floor_alpha + static_cast<double>(j) * step;
    if (loss_budget(n, alpha - a) < 0) break;
    grid.push_back(a);
  }
  return grid;
}

double select_alpha_prime(const RiskCurve& harm, const RiskCurve& benefit_loss, double alpha,
                          double grid_step) {
  const CurvePair pair{harm, benefit_loss};
  return select_alpha_prime_pooled(std::span<const CurvePair>(&pair, 1), alpha, grid_step);
}

double select_alpha_prime(const Dataset& calibration, const SetPredictor& predictor, double alpha,
                          double grid_step) {
  return select_alpha_prime(harm_curve(calibration, predictor),
                            benefit_loss_curve(calibration, predictor), alpha, grid_step);
}

double select_alpha_prime_pooled(std::span<const CurvePair> draws, double alpha, double grid_step) {
  if (draws.empty()) throw Error(ErrorCode::EmptyDataset, "no calibration draws");
  const std::size_t n = draws.front().harm.n();
  for (const auto& d : draws) {
    if (d.harm.n() != n || d.benefit_loss.n() != n) {
      throw Error(ErrorCode::ConfigInvalid, "pooled alpha' selection needs equal calibration sizes");
    }
  }
  const auto grid = alpha_prime_grid(n, alpha, grid_step);
  double best = grid.front();
  double best_length = -1.0;
  for (double a : grid) {
    double total = 0.0;
    for (const auto& d : draws) total += harm_controlling_set_interv(d.harm, d.benefit_loss, alpha, a).length();
    const double mean = total / static_cast<double>(draws.size());
    if (mean > best_length) {
      best_length = mean;
      best = a;
    }
  }
  return best;
}

}  // namespace harm
