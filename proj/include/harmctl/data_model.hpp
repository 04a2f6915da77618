#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace harm {

using LabelIndex = std::size_t;

// Softmax output of the classifier, indexed by label. Not renormalized.
using ScoreVector = std::vector<double>;

class LabelSpace {
 public:
  LabelSpace() = default;
  explicit LabelSpace(std::vector<std::string> names);

  std::size_t size() const { return names_.size(); }
  const std::string& name(LabelIndex index) const { return names_.at(index); }
  const std::vector<std::string>& names() const { return names_; }

  std::optional<LabelIndex> find(std::string_view name) const;

  bool operator==(const LabelSpace& other) const { return names_ == other.names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, LabelIndex> index_;
};

// Builds `L` labels named "0".."L-1"; used by synthetic worlds.
LabelSpace numbered_labels(std::size_t count);

struct Sample {
  std::string instance_id;
  std::optional<int> noise;
  ScoreVector scores;
  LabelIndex true_label = 0;
  LabelIndex human_prediction = 0;
  std::optional<std::string> participant_id;

  bool human_correct() const { return human_prediction == true_label; }
  bool operator==(const Sample&) const = default;
};

struct SetPredictionRecord {
  std::string instance_id;
  std::string participant_id;
  std::vector<LabelIndex> set_members;
  LabelIndex human_prediction = 0;
};

struct HumanPrediction {
  std::string instance_id;
  std::string participant_id;
  LabelIndex true_label = 0;
  LabelIndex prediction = 0;
};

struct ScoreRecord {
  std::optional<int> noise;
  ScoreVector scores;
  bool operator==(const ScoreRecord&) const = default;
};

using ScoreTable = std::map<std::string, ScoreRecord>;

struct Dataset {
  LabelSpace label_space;
  std::vector<Sample> samples;
  // Mean of 1{prediction == truth} over every prediction on the instance.
  std::map<std::string, double> per_instance_accuracy;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  // Distinct instance ids, sorted.
  std::vector<std::string> instance_ids() const;
  bool operator==(const Dataset&) const = default;
};

// Computes per_instance_accuracy from the samples.
Dataset make_dataset(LabelSpace labels, std::vector<Sample> samples);

struct LoadOptions {
  // Also require every score vector to sum to 1 within sum_tolerance.
  bool strict = false;
  double sum_tolerance = 1e-3;
};

// Label space from the header of a scores CSV (columns after instance_id,noise).
LabelSpace read_label_space(const std::filesystem::path& path);

ScoreTable load_scores(const std::filesystem::path& path, const LabelSpace& labels,
                       const LoadOptions& options = {});
std::vector<HumanPrediction> load_human_predictions(const std::filesystem::path& path,
                                                    const LabelSpace& labels);
std::vector<SetPredictionRecord> load_set_predictions(const std::filesystem::path& path,
                                                      const LabelSpace& labels);

// Instance -> ground-truth label; InconsistentLabel when rows disagree.
std::map<std::string, LabelIndex> true_labels_from(const std::vector<HumanPrediction>& predictions);

Dataset join_dataset(const LabelSpace& labels, const ScoreTable& scores,
                     const std::vector<HumanPrediction>& predictions,
                     const std::map<std::string, LabelIndex>& true_labels,
                     std::optional<int> noise_filter = std::nullopt);

// Splits by unique instance id. The i-th part receives round(f_i * #instances)
// ids; a trailing part receives the rest. Ids are sorted, then shuffled with
// Rng(seed), so the split is a function of (ids, fractions, seed) only.
std::vector<Dataset> partition_dataset(const Dataset& dataset, const std::vector<double>& fractions,
                                       std::uint64_t seed);

std::pair<Dataset, Dataset> split_dataset(const Dataset& dataset, double calib_frac,
                                          std::uint64_t seed);

// Restricts a dataset to samples of the given instances (keeps sample order).
Dataset restrict_to_instances(const Dataset& dataset, const std::vector<std::string>& ids);

ScoreTable score_table_of(const Dataset& dataset);

void write_scores(const std::filesystem::path& path, const LabelSpace& labels,
                  const ScoreTable& scores);
void write_human_predictions(const std::filesystem::path& path, const Dataset& dataset);

// Round-trip helper: loads scores + humans CSVs and joins them.
Dataset load_dataset(const std::filesystem::path& scores_path,
                     const std::filesystem::path& humans_path,
                     std::optional<int> noise_filter = std::nullopt,
                     const LoadOptions& options = {});

}  // namespace harm
