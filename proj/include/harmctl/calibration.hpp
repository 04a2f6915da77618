#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "harmctl/data_model.hpp"
#include "harmctl/harm_risk.hpp"
#include "harmctl/set_predictors.hpp"

namespace harm {

enum class ControlMode { Counterfactual, Interventional };

std::string_view to_string(ControlMode mode);
ControlMode parse_control_mode(std::string_view text);

// Interval of certified lambda values, [lower, upper] or [lower, upper).
struct HarmControlResult {
  ControlMode mode = ControlMode::Counterfactual;
  double alpha = 0.0;
  std::optional<double> alpha_prime;
  double lower = 0.0;
  double upper = 1.0;
  bool upper_inclusive = true;
  bool feasible = true;

  bool contains(double lambda) const;
  // Lebesgue length; 0 when infeasible.
  double length() const;
};

struct UpperThreshold {
  double value = 0.0;
  bool inclusive = true;
};

// Slack used when converting alpha * (n + 1) to an integer count budget, so
// alpha values like 0.3 with n + 1 = 10 are not lost to rounding.
constexpr double kAlphaSlack = 1e-9;

// Largest number of calibration losses allowed by the inflated bound
// n/(n+1) * R + 1/(n+1) <= alpha, i.e. floor(alpha (n+1) - 1); negative when
// no count satisfies it.
long long loss_budget(std::size_t n, double alpha);

// inf { lambda : n/(n+1) H(lambda) + 1/(n+1) <= alpha } over the curve domain.
double lambda_hat(const RiskCurve& harm, double alpha);

// sup { lambda : n/(n+1) G(lambda) + 1/(n+1) <= alpha }, with a flag telling
// whether the supremum itself satisfies the condition.
UpperThreshold lambda_check(const RiskCurve& benefit_loss, double alpha);

HarmControlResult harm_controlling_set_cf(const RiskCurve& harm, double alpha);
HarmControlResult harm_controlling_set_cf(const Dataset& calibration, const SetPredictor& predictor,
                                          double alpha);

HarmControlResult harm_controlling_set_interv(const RiskCurve& harm, const RiskCurve& benefit_loss,
                                              double alpha, double alpha_prime);
HarmControlResult harm_controlling_set_interv(const Dataset& calibration,
                                              const SetPredictor& predictor, double alpha,
                                              double alpha_prime);

// Candidates 1/(n+1) + j * step up to alpha - 1/(n+1).
std::vector<double> alpha_prime_grid(std::size_t n, double alpha, double step);

struct CurvePair {
  RiskCurve harm;
  RiskCurve benefit_loss;
};

// alpha' maximizing the interval length; ties go to the smaller alpha'.
double select_alpha_prime(const RiskCurve& harm, const RiskCurve& benefit_loss, double alpha,
                          double grid_step);
double select_alpha_prime(const Dataset& calibration, const SetPredictor& predictor, double alpha,
                          double grid_step);

// Same criterion with the interval length averaged over several calibration
// draws (all of equal size n). Used to fix one alpha' across repetitions.
double select_alpha_prime_pooled(std::span<const CurvePair> draws, double alpha, double grid_step);

}  // namespace harm
