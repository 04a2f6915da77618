#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "harmctl/calibration.hpp"
#include "harmctl/data_model.hpp"
#include "harmctl/set_predictors.hpp"

namespace harm {

enum class Regime { CounterfactualMonotone, InterventionalOnly };

std::string_view to_string(Regime regime);
Regime parse_regime(std::string_view text);

// Classifier scores of a synthetic instance: a Dirichlet draw with
// `peak_concentration` on one uniformly chosen label and
// `base_concentration` on the others, or a uniform pick from `table` when
// it is non-empty. The true label is then drawn from the scores, so the
// classifier is calibrated and its accuracy is set by the peakedness.
struct ScoreModel {
  double peak_concentration = 2.5;
  double base_concentration = 0.1;
  std::vector<ScoreVector> table;
};

struct WorldConfig {
  std::size_t labels = 16;
  std::size_t n_instances = 1000;
  std::size_t n_experts = 1;
  ScoreModel score_model;
  // q(k) for k = 1..labels, nonincreasing. Empty means linear from 1 down to
  // 0.8 at k = labels.
  std::vector<double> success_profile;
  Regime regime = Regime::CounterfactualMonotone;
  std::uint64_t seed = 0;
  // Start o_k of the success window per set size (InterventionalOnly). Empty
  // means o_k = frac((k - 1) * 0.6180339887...), distinct for every k.
  std::vector<double> offsets;
  // Optional per-expert multiplier on q (clamped to 1).
  std::vector<double> expert_q_multiplier;

  // Fills empty defaults and checks the rest; InvalidProfile on a bad q.
  WorldConfig resolved() const;
};

nlohmann::json to_json(const WorldConfig& config);
WorldConfig world_config_from_json(const nlohmann::json& j);

struct WorldInstance {
  std::string id;
  ScoreVector scores;
  LabelIndex truth = 0;
};

// Exogenous expert noise for one (instance, expert): u drives success, and
// wrong_draw picks the wrong label on failure. Frozen for every query.
struct ExpertNoise {
  double u = 0.5;
  double wrong_draw = 0.5;
};

class SyntheticWorld {
 public:
  SyntheticWorld(WorldConfig config, std::vector<WorldInstance> instances,
                 std::vector<ExpertNoise> noise);

  const WorldConfig& config() const { return config_; }
  const std::vector<WorldInstance>& instances() const { return instances_; }
  std::size_t experts() const { return config_.n_experts; }
  const ExpertNoise& noise(std::size_t instance, std::size_t expert) const;
  LabelSpace label_space() const { return numbered_labels(config_.labels); }

  double q(std::size_t set_size, std::size_t expert) const;

  // f_Y-hat: the expert's prediction under a given set. Singletons force
  // the prediction; otherwise success follows the regime's rule.
  bool succeeds(std::size_t instance, std::size_t expert, std::size_t set_size, bool contains_truth) const;
  LabelIndex predict(std::size_t instance, std::size_t expert, const PredictionSet& set) const;
  // Prediction without decision support (the full label set).
  LabelIndex predict_alone(std::size_t instance, std::size_t expert) const;
  LabelIndex counterfactual_predict(std::size_t instance, std::size_t expert, double lambda,
                                    const SetPredictor& predictor) const;

  // Human-alone observations, one sample per (instance, expert), for the
  // instances in [first, last).
  Dataset observational_dataset(std::size_t first, std::size_t last) const;
  Dataset observational_dataset() const { return observational_dataset(0, instances_.size()); }

 private:
  WorldConfig config_;
  std::vector<WorldInstance> instances_;
  std::vector<ExpertNoise> noise_;  // [instance * n_experts + expert]
};

SyntheticWorld generate_world(const WorldConfig& config);

// Dump/reload for cross-checking: config.json, scores.csv, noise.csv.
void write_world(const std::filesystem::path& dir, const SyntheticWorld& world);
SyntheticWorld read_world(const std::filesystem::path& dir);

// Population average of the counterfactual harm at lambda, evaluated with the
// frozen noise over instances [first, last) and all experts.
double true_harm(const SyntheticWorld& world, double lambda, const SetPredictor& predictor,
                 std::size_t first, std::size_t last);
double true_harm(const SyntheticWorld& world, double lambda, const SetPredictor& predictor);

struct HarmProfileRow {
  double lambda = 0.0;
  double lower = 0.0;      // mean 1{alone correct and truth outside set}
  double true_harm = 0.0;  // exact counterfactual harm
  double upper = 0.0;      // lower + mean 1{alone wrong and truth inside set}
};

// Exact per-lambda lower/true/upper harm over a sorted lambda grid.
std::vector<HarmProfileRow> harm_profile(const SyntheticWorld& world, const std::vector<double>& grid,
                                         const SetPredictor& predictor, std::size_t first,
                                         std::size_t last);

// Monte Carlo top-1 accuracy of a score model (fraction of draws whose
// sampled truth is the top-ranked label).
double score_model_top1(const ScoreModel& model, std::size_t labels, std::size_t draws,
                        std::uint64_t seed);

enum class TrialTarget {
  // Harm at lambda_hat(alpha) on fresh test samples.
  Harm,
  // Benefit loss 1{alone wrong and truth in set} at lambda_check(alpha).
  BenefitLoss,
  // Every grid lambda in the interventional interval has true harm <= alpha.
  Interval,
};

std::string_view to_string(TrialTarget target);

struct TrialOptions {
  TrialTarget target = TrialTarget::Harm;
  double alpha = 0.1;
  std::size_t n_calib = 500;
  std::size_t n_test = 2000;
  std::size_t repetitions = 200;
  double alpha_prime_step = 0.001;
  // Sorted lambda grid for the interval check and the sandwich report.
  std::vector<double> lambda_grid;
  std::optional<SetPredictor> predictor;
  std::size_t jobs = 1;
};

struct CoverageStats {
  TrialTarget target = TrialTarget::Harm;
  double alpha = 0.0;
  std::size_t repetitions = 0;
  // Grand mean of the per-repetition test metric (harm or benefit loss; for
  // Interval, the largest true harm in the interval).
  double mean_harm = 0.0;
  // Fraction of repetitions whose metric exceeded alpha.
  double violation_rate = 0.0;
  double mean_lambda = 0.0;
  std::size_t infeasible = 0;
  std::size_t interval_violations = 0;
  std::size_t lambdas_checked = 0;
  double mean_alpha_prime = 0.0;
  std::vector<double> per_repetition;
  // Lower/true/upper harm of the first repetition's test population.
  std::vector<HarmProfileRow> sandwich;
};

nlohmann::json to_json(const CoverageStats& stats);

// Repeats: generate a world of n_calib + n_test instances from a per-rep
// derived seed, calibrate on the first n_calib, evaluate on the rest.
CoverageStats coverage_trial(const WorldConfig& config, const TrialOptions& options);

}  // namespace harm
