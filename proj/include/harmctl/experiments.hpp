#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "harmctl/calibration.hpp"
#include "harmctl/data_model.hpp"
#include "harmctl/set_predictors.hpp"

namespace harm {

// "start:stop:step" (lambda_i = start + i * step, the last point pinned to
// stop) or a comma-separated sorted list.
std::vector<double> parse_lambda_grid(std::string_view text);
std::vector<double> default_lambda_grid(PredictorKind kind);

enum class AlphaPrimePolicy { Fixed, Auto, Pooled };

std::string_view to_string(AlphaPrimePolicy policy);
AlphaPrimePolicy parse_alpha_prime_policy(std::string_view text);

struct PredictorSpec {
  PredictorKind kind = PredictorKind::Threshold;
  // SAPS only. A fixed w skips selection; otherwise w is picked per
  // repetition on a validation split at lambda = w_lambda.
  std::optional<double> w;
  std::vector<double> w_grid = kDefaultSapsWGrid;
  double w_lambda = 1.0;
  double lambda_max = kDefaultSapsLambdaMax;
  double validation_fraction = 0.1;
  std::uint64_t u_seed = 0;
};

nlohmann::json to_json(const PredictorSpec& spec);

struct TradeoffOptions {
  double alpha = 0.1;
  ControlMode mode = ControlMode::Counterfactual;
  AlphaPrimePolicy alpha_prime_policy = AlphaPrimePolicy::Pooled;
  double alpha_prime = 0.0;  // used by Fixed
  double alpha_prime_step = 0.001;
  std::vector<double> lambda_grid;  // empty means the predictor's default grid
  std::size_t repetitions = 50;
  double calib_fraction = 0.1;
  std::uint64_t seed = 7;
  std::vector<double> quantile_cuts = {0.5};
  double epsilon = 1e-6;
  std::size_t jobs = 1;
  PredictorSpec predictor;
};

// Mean across repetitions; half_width = 1.96 * sd / sqrt(reps), absent when
// there is a single repetition.
struct Estimate {
  double mean = 0.0;
  std::optional<double> half_width;
};

Estimate summarize(const std::vector<double>& values);

struct TradeoffRow {
  double lambda = 0.0;
  Estimate accuracy;
  Estimate harm;        // plug-in harm on the test split (the lower bound)
  Estimate harm_upper;  // lower + wrong-alone-and-covered
  double membership_frequency = 0.0;
  Estimate mean_set_size;
  Estimate coverage;
};

struct RepetitionSummary {
  std::uint64_t seed = 0;
  HarmControlResult interval;
  std::optional<double> w;
  std::size_t n_calib = 0;
  std::size_t n_test = 0;
};

struct TradeoffReport {
  double alpha = 0.0;
  ControlMode mode = ControlMode::Counterfactual;
  AlphaPrimePolicy alpha_prime_policy = AlphaPrimePolicy::Pooled;
  std::optional<double> alpha_prime;  // the shared value for Fixed and Pooled
  std::string predictor;
  std::uint64_t seed = 0;
  std::size_t repetitions = 0;
  Estimate human_alone_accuracy;
  std::vector<RepetitionSummary> per_repetition;
  std::vector<TradeoffRow> rows;
};

TradeoffReport run_tradeoff(const Dataset& dataset, const TradeoffOptions& options);

void write_tradeoff_csv(const std::filesystem::path& path, const TradeoffReport& report);
nlohmann::json to_json(const TradeoffReport& report);

struct CoverageRow {
  double lambda = 0.0;
  double coverage = 0.0;
  double mean_set_size = 0.0;
};

std::vector<CoverageRow> coverage_and_size(const Dataset& dataset, const SetPredictor& predictor,
                                           const std::vector<double>& lambda_grid);

struct MonotonicityOptions {
  std::size_t min_count = 5;
  // Per-label accuracy quantiles that cut the difficulty levels.
  std::vector<double> difficulty_cuts = {0.25, 0.5, 0.75};
};

struct SizeCell {
  std::size_t set_size = 0;
  std::size_t count = 0;
  std::size_t successes = 0;
  // Empty when count < min_count.
  std::optional<double> success_probability;
  std::optional<double> standard_error;
};

struct MonotonicityCell {
  std::string label;
  std::size_t difficulty = 0;  // 0 = hardest
  std::string competence;      // all | low | high
  std::vector<SizeCell> sizes; // set sizes 2..L
};

struct VerificationReport {
  std::size_t records_used = 0;
  std::size_t records_excluded = 0;  // sets without the true label
  std::size_t empty_cells = 0;       // (cell, size) pairs below min_count
  std::vector<MonotonicityCell> cells;
};

VerificationReport verify_interventional_monotonicity(const std::vector<SetPredictionRecord>& records,
                                                      const Dataset& dataset,
                                                      const MonotonicityOptions& options = {});

// Consecutive populated sizes where the success probability rises by more
// than z combined standard errors.
std::size_t count_monotonicity_violations(const VerificationReport& report, double z = 2.0);

std::string cell_file_name(const MonotonicityCell& cell);
void write_monotonicity(const std::filesystem::path& dir, const VerificationReport& report);
nlohmann::json to_json(const VerificationReport& report, double z = 2.0);

}  // namespace harm
