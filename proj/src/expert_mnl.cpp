#include "harmctl/expert_mnl.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "harmctl/error.hpp"

namespace harm {

double quantile_type7(std::vector<double> values, double p) {
  if (values.empty()) throw Error(ErrorCode::EmptyDataset, "quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double h = static_cast<double>(values.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::size_t DifficultyStrata::stratum_of(const std::string& instance_id) const {
  auto it = assignment.find(instance_id);
  if (it == assignment.end()) {
    throw Error(ErrorCode::OrphanPrediction, fmt::format("instance '{}' has no difficulty stratum", instance_id));
  }
  return it->second;
}

DifficultyStrata stratify_difficulty(const Dataset& dataset, std::vector<double> quantile_cuts) {
  if (dataset.per_instance_accuracy.empty()) {
    throw Error(ErrorCode::EmptyDataset, "no per-instance accuracies to stratify");
  }
  std::sort(quantile_cuts.begin(), quantile_cuts.end());
  for (double c : quantile_cuts) {
    if (!(c > 0.0 && c < 1.0)) throw Error(ErrorCode::ConfigInvalid, fmt::format("quantile cut {} not in (0,1)", c));
  }
  std::vector<double> accuracies;
  accuracies.reserve(dataset.per_instance_accuracy.size());
  for (const auto& [id, acc] : dataset.per_instance_accuracy) accuracies.push_back(acc);

  DifficultyStrata strata;
  strata.quantile_cuts = quantile_cuts;
  for (double c : quantile_cuts) strata.cut_values.push_back(quantile_type7(accuracies, c));

  std::map<std::string, std::size_t> raw;
  std::set<std::size_t> used;
  for (const auto& [id, acc] : dataset.per_instance_accuracy) {
    std::size_t level = 0;
    for (double v : strata.cut_values) level += acc > v ? 1 : 0;
    raw[id] = level;
    used.insert(level);
  }
  std::map<std::size_t, std::size_t> renumber;
  for (std::size_t level : used) renumber.emplace(level, renumber.size());
  for (const auto& [id, level] : raw) strata.assignment[id] = renumber.at(level);
  strata.count = renumber.size();
  return strata;
}

MnlMixture::MnlMixture(std::size_t labels, std::vector<std::vector<double>> theta, double epsilon)
    : labels_(labels), theta_(std::move(theta)), epsilon_(epsilon) {
  for (const auto& m : theta_) {
    if (m.size() != labels_ * labels_) throw Error(ErrorCode::ConfigInvalid, "confusion matrix has wrong shape");
  }
}

double MnlMixture::theta(std::size_t stratum, LabelIndex truth, LabelIndex predicted) const {
  return theta_.at(stratum).at(truth * labels_ + predicted);
}

double MnlMixture::success_probability(LabelIndex truth, std::size_t stratum,
                                       const PredictionSet& set) const {
  if (set.members.empty()) throw Error(ErrorCode::InvalidRecord, "empty prediction set");
  if (!set.contains(truth)) return 0.0;
  double denom = 0.0;
  for (LabelIndex m : set.members) denom += theta(stratum, truth, m);
  if (!(denom > 0.0)) {
    throw Error(ErrorCode::DegenerateRow,
                fmt::format("confusion row {} of stratum {} has no mass on the set", truth, stratum));
  }
  return theta(stratum, truth, truth) / denom;
}

std::vector<double> MnlMixture::prediction_distribution(LabelIndex truth, std::size_t stratum,
                                                        const PredictionSet& set) const {
  if (set.members.empty()) throw Error(ErrorCode::InvalidRecord, "empty prediction set");
  std::vector<double> p;
  p.reserve(set.size());
  double denom = 0.0;
  for (LabelIndex m : set.members) {
    p.push_back(theta(stratum, truth, m));
    denom += p.back();
  }
  if (!(denom > 0.0)) {
    throw Error(ErrorCode::DegenerateRow,
                fmt::format("confusion row {} of stratum {} has no mass on the set", truth, stratum));
  }
  for (auto& x : p) x /= denom;
  return p;
}

LabelIndex MnlMixture::sample_prediction(LabelIndex truth, std::size_t stratum,
                                         const PredictionSet& set, Rng& rng) const {
  const auto p = prediction_distribution(truth, stratum, set);
  return set.members[rng.categorical(p)];
}

nlohmann::json MnlMixture::to_json(const LabelSpace& labels) const {
  nlohmann::json out;
  out["labels"] = labels.names();
  out["epsilon"] = epsilon_;
  out["strata"] = nlohmann::json::array();
  for (std::size_t d = 0; d < theta_.size(); ++d) {
    nlohmann::json rows = nlohmann::json::array();
    for (LabelIndex y = 0; y < labels_; ++y) {
      std::vector<double> row(theta_[d].begin() + static_cast<std::ptrdiff_t>(y * labels_),
                              theta_[d].begin() + static_cast<std::ptrdiff_t>((y + 1) * labels_));
      rows.push_back(row);
    }
    out["strata"].push_back({{"stratum", d}, {"theta", rows}});
  }
  return out;
}

MnlMixture fit_confusion(const Dataset& dataset, const DifficultyStrata& strata, double epsilon) {
  if (!(epsilon >= 0.0)) throw Error(ErrorCode::ConfigInvalid, "smoothing epsilon must be >= 0");
  const std::size_t L = dataset.label_space.size();
  std::vector<std::vector<double>> counts(strata.count, std::vector<double>(L * L, 0.0));
  std::vector<std::size_t> per_stratum(strata.count, 0);
  for (const auto& s : dataset.samples) {
    const std::size_t d = strata.stratum_of(s.instance_id);
    counts[d][s.true_label * L + s.human_prediction] += 1.0;
    ++per_stratum[d];
  }
  for (std::size_t d = 0; d < strata.count; ++d) {
    if (per_stratum[d] == 0) throw Error(ErrorCode::EmptyStratum, fmt::format("stratum {} has no predictions", d));
  }
  const double eps_total = epsilon * static_cast<double>(L);
  for (auto& m : counts) {
    for (LabelIndex y = 0; y < L; ++y) {
      double row_total = 0.0;
      for (LabelIndex j = 0; j < L; ++j) row_total += m[y * L + j];
      const double denom = row_total + eps_total;
      for (LabelIndex j = 0; j < L; ++j) {
        // An unseen row with epsilon = 0 stays all-zero and fails later as DegenerateRow.
        m[y * L + j] = denom > 0.0 ? (m[y * L + j] + epsilon) / denom : 0.0;
      }
    }
  }
  return MnlMixture(L, std::move(counts), epsilon);
}

double estimate_accuracy(const MnlMixture& mixture, const DifficultyStrata& strata,
                         const Dataset& test, const SetPredictor& predictor, double lambda) {
  if (test.empty()) throw Error(ErrorCode::EmptyDataset, "test set is empty");
  double total = 0.0;
  for (const auto& s : test.samples) {
    total += mixture.success_probability(s.true_label, strata.stratum_of(s.instance_id),
                                         predictor.predict(s, lambda));
  }
  return total / static_cast<double>(test.size());
}

}  // namespace harm
