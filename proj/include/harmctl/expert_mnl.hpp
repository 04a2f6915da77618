#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "harmctl/data_model.hpp"
#include "harmctl/rng.hpp"
#include "harmctl/set_predictors.hpp"

namespace harm {

// Linear-interpolation (type 7) sample quantile; p in [0,1].
double quantile_type7(std::vector<double> values, double p);

struct DifficultyStrata {
  // Probability levels of the cuts, sorted, each in (0,1).
  std::vector<double> quantile_cuts;
  // Accuracy values at those levels.
  std::vector<double> cut_values;
  std::map<std::string, std::size_t> assignment;
  std::size_t count = 1;

  std::size_t stratum_of(const std::string& instance_id) const;
};

// An instance lands above a cut only when its accuracy strictly exceeds the
// cut value; raw strata are then renumbered 0..count-1 skipping empty ones.
DifficultyStrata stratify_difficulty(const Dataset& dataset, std::vector<double> quantile_cuts = {0.5});

// Per-stratum confusion matrices of human-alone predictions (row = truth,
// column = prediction). The prediction distribution under a set is the row
// restricted to the set and renormalized.
class MnlMixture {
 public:
  MnlMixture(std::size_t labels, std::vector<std::vector<double>> theta, double epsilon);

  std::size_t labels() const { return labels_; }
  std::size_t strata() const { return theta_.size(); }
  double epsilon() const { return epsilon_; }
  double theta(std::size_t stratum, LabelIndex truth, LabelIndex predicted) const;

  double success_probability(LabelIndex truth, std::size_t stratum, const PredictionSet& set) const;
  // Probability of each member of `set`, in member order.
  std::vector<double> prediction_distribution(LabelIndex truth, std::size_t stratum,
                                              const PredictionSet& set) const;
  LabelIndex sample_prediction(LabelIndex truth, std::size_t stratum, const PredictionSet& set,
                               Rng& rng) const;

  nlohmann::json to_json(const LabelSpace& labels) const;

 private:
  std::size_t labels_;
  std::vector<std::vector<double>> theta_;  // [stratum][truth * L + predicted]
  double epsilon_;
};

MnlMixture fit_confusion(const Dataset& dataset, const DifficultyStrata& strata, double epsilon = 1e-6);

// Average modelled accuracy A(lambda) over the test samples, closed form.
double estimate_accuracy(const MnlMixture& mixture, const DifficultyStrata& strata,
                         const Dataset& test, const SetPredictor& predictor, double lambda);

}  // namespace harm
