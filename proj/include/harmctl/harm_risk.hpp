#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "harmctl/data_model.hpp"
#include "harmctl/set_predictors.hpp"

namespace harm {

enum class CurveKind { HarmNonincreasing, BenefitLossNondecreasing };

// Exact piecewise-constant empirical risk over [0, domain_max].
//
// HarmNonincreasing:        value(l) = #{i : l < b_i} / n
// BenefitLossNondecreasing: value(l) = #{i : b_i <= l} / n
//
// b_i are the critical thresholds of the relevant subpopulation (human
// correct on their own for harm, wrong for benefit loss). Samples whose true
// label never enters the set inside the domain are kept in beyond_domain:
// they count toward harm everywhere and toward benefit loss nowhere.
class RiskCurve {
 public:
  RiskCurve(CurveKind kind, std::vector<double> breakpoints, std::size_t n, double domain_max,
            std::size_t beyond_domain = 0);

  CurveKind kind() const { return kind_; }
  std::size_t n() const { return n_; }
  double domain_max() const { return domain_max_; }
  const std::vector<double>& breakpoints() const { return breakpoints_; }
  std::size_t beyond_domain() const { return beyond_domain_; }

  // Numerator of the curve at lambda.
  std::size_t count_at(double lambda) const;
  double operator()(double lambda) const;

 private:
  CurveKind kind_;
  std::vector<double> breakpoints_;
  std::size_t n_;
  double domain_max_;
  std::size_t beyond_domain_;
};

// 1{human correct alone and true label outside the set}.
int per_sample_harm_cf(const Sample& sample, const PredictionSet& set);
// 1{human wrong alone and true label inside the set}.
int per_sample_benefit_loss(const Sample& sample, const PredictionSet& set);

RiskCurve harm_curve(std::span<const Sample> calibration, const SetPredictor& predictor);
RiskCurve harm_curve(const Dataset& calibration, const SetPredictor& predictor);
RiskCurve benefit_loss_curve(std::span<const Sample> calibration, const SetPredictor& predictor);
RiskCurve benefit_loss_curve(const Dataset& calibration, const SetPredictor& predictor);

struct HarmBounds {
  double lower = 0.0;
  double upper = 0.0;
};

// Empirical bounds on average counterfactual harm when only interventional
// monotonicity holds.
HarmBounds harm_bounds(const Dataset& test, const SetPredictor& predictor, double lambda);

}  // namespace harm
