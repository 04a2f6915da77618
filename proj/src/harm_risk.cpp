#include "harmctl/harm_risk.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "harmctl/error.hpp"

namespace harm {

RiskCurve::RiskCurve(CurveKind kind, std::vector<double> breakpoints, std::size_t n,
                     double domain_max, std::size_t beyond_domain)
    : kind_(kind),
      breakpoints_(std::move(breakpoints)),
      n_(n),
      domain_max_(domain_max),
      beyond_domain_(beyond_domain) {
  if (n_ == 0) throw Error(ErrorCode::EmptyDataset, "risk curve over an empty calibration set");
  std::sort(breakpoints_.begin(), breakpoints_.end());
  if (!breakpoints_.empty() && (breakpoints_.front() < 0.0 || breakpoints_.back() > domain_max_)) {
    throw Error(ErrorCode::LambdaOutOfRange, "risk curve breakpoint outside its domain");
  }
  if (breakpoints_.size() + beyond_domain_ > n_) {
    throw Error(ErrorCode::InvalidRecord, "risk curve has more breakpoints than samples");
  }
}

std::size_t RiskCurve::count_at(double lambda) const {
  const auto past = static_cast<std::size_t>(
      std::upper_bound(breakpoints_.begin(), breakpoints_.end(), lambda) - breakpoints_.begin());
  if (kind_ == CurveKind::HarmNonincreasing) return breakpoints_.size() - past + beyond_domain_;
  return past;
}

double RiskCurve::operator()(double lambda) const {
  return static_cast<double>(count_at(lambda)) / static_cast<double>(n_);
}

int per_sample_harm_cf(const Sample& sample, const PredictionSet& set) {
  return sample.human_correct() && !set.contains(sample.true_label) ? 1 : 0;
}

int per_sample_benefit_loss(const Sample& sample, const PredictionSet& set) {
  return !sample.human_correct() && set.contains(sample.true_label) ? 1 : 0;
}

namespace {

RiskCurve build_curve(std::span<const Sample> samples, const SetPredictor& predictor, CurveKind kind) {
  if (samples.empty()) throw Error(ErrorCode::EmptyDataset, "calibration set is empty");
  const bool want_correct = kind == CurveKind::HarmNonincreasing;
  std::vector<double> breakpoints;
  std::size_t beyond = 0;
  for (const auto& s : samples) {
    if (s.human_correct() != want_correct) continue;
    const double b = predictor.critical(s, s.true_label);
    if (b > predictor.domain_max()) {
      ++beyond;
    } else {
      breakpoints.push_back(b);
    }
  }
  return RiskCurve(kind, std::move(breakpoints), samples.size(), predictor.domain_max(), beyond);
}

}  // namespace

RiskCurve harm_curve(std::span<const Sample> calibration, const SetPredictor& predictor) {
  return build_curve(calibration, predictor, CurveKind::HarmNonincreasing);
}

RiskCurve harm_curve(const Dataset& calibration, const SetPredictor& predictor) {
  return harm_curve(std::span<const Sample>(calibration.samples), predictor);
}

RiskCurve benefit_loss_curve(std::span<const Sample> calibration, const SetPredictor& predictor) {
  return build_curve(calibration, predictor, CurveKind::BenefitLossNondecreasing);
}

RiskCurve benefit_loss_curve(const Dataset& calibration, const SetPredictor& predictor) {
  return benefit_loss_curve(std::span<const Sample>(calibration.samples), predictor);
}

HarmBounds harm_bounds(const Dataset& test, const SetPredictor& predictor, double lambda) {
  if (test.empty()) throw Error(ErrorCode::EmptyDataset, "test set is empty");
  std::size_t harmed = 0;
  std::size_t lost = 0;
  for (const auto& s : test.samples) {
    const auto set = predictor.predict(s, lambda);
    harmed += static_cast<std::size_t>(per_sample_harm_cf(s, set));
    lost += static_cast<std::size_t>(per_sample_benefit_loss(s, set));
  }
  const double n = static_cast<double>(test.size());
  return {static_cast<double>(harmed) / n, static_cast<double>(harmed + lost) / n};
}

}  // namespace harm
