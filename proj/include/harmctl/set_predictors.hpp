#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "harmctl/data_model.hpp"

namespace harm {

enum class PredictorKind { Threshold, Saps };

std::string_view to_string(PredictorKind kind);
PredictorKind parse_predictor_kind(std::string_view text);

struct PredictionSet {
  // Label indices in rank order.
  std::vector<LabelIndex> members;
  double lambda = 0.0;
  PredictorKind predictor = PredictorKind::Threshold;

  std::size_t size() const { return members.size(); }
  bool contains(LabelIndex label) const;
};

struct SapsParams {
  double w = 0.1;
  double u = 0.5;
  double lambda_max = 6.25;

  void validate() const;
};

inline const std::vector<double> kDefaultSapsWGrid = {0.02, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35};
constexpr double kDefaultSapsLambdaMax = 6.25;
constexpr double kDefaultSapsLambdaStep = 0.00625;

// Descending by score, ties by ascending label index.
std::vector<LabelIndex> rank_labels(std::span<const double> scores);

// Top-ranked label plus every other label with lambda >= 1 - score.
PredictionSet threshold_set(std::span<const double> scores, double lambda);

// Smallest lambda at which `label` enters threshold_set. Membership is
// decided by the same comparison, so label in set <=> lambda >= critical.
double critical_lambda(std::span<const double> scores, LabelIndex label);

double saps_score(std::span<const double> scores, LabelIndex label, const SapsParams& params);
PredictionSet saps_set(std::span<const double> scores, double lambda, const SapsParams& params);

// Labels in rank order, each paired with the lambda at which it enters the
// set. Entry values are nondecreasing, so every set is a prefix.
struct SetProfile {
  std::vector<LabelIndex> order;
  std::vector<double> entry;

  std::size_t size_at(double lambda) const;
  double entry_of(LabelIndex label) const;
};

// A predictor family indexed by lambda, bound to its parameters. For SAPS the
// per-instance draw u is keyed on (u_seed, instance_id), so it is frozen
// across lambda and independent of sample order.
class SetPredictor {
 public:
  static SetPredictor threshold();
  static SetPredictor saps(double w, double lambda_max = kDefaultSapsLambdaMax,
                           std::uint64_t u_seed = 0);

  PredictorKind kind() const { return kind_; }
  double domain_max() const { return domain_max_; }
  double w() const { return w_; }
  std::uint64_t u_seed() const { return u_seed_; }

  double u_for(std::string_view instance_id) const;
  SapsParams saps_params(std::string_view instance_id) const;

  PredictionSet predict(const Sample& sample, double lambda) const;
  PredictionSet predict(std::string_view instance_id, std::span<const double> scores,
                        double lambda) const;
  double critical(const Sample& sample, LabelIndex label) const;
  double critical(std::string_view instance_id, std::span<const double> scores,
                  LabelIndex label) const;
  SetProfile profile(std::string_view instance_id, std::span<const double> scores) const;
  SetProfile profile(const Sample& sample) const { return profile(sample.instance_id, sample.scores); }

 private:
  PredictorKind kind_ = PredictorKind::Threshold;
  double domain_max_ = 1.0;
  double w_ = 0.0;
  std::uint64_t u_seed_ = 0;
};

// Grid w with the smallest mean SAPS set size over validation instances at
// `lambda`; ties go to the smaller w.
double saps_select_w(const Dataset& validation, double lambda, std::span<const double> grid,
                     double lambda_max = kDefaultSapsLambdaMax, std::uint64_t u_seed = 0);

}  // namespace harm
