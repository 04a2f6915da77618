#include "harmctl/set_predictors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "harmctl/error.hpp"
#include "harmctl/rng.hpp"

namespace harm {

namespace {

void check_lambda(double lambda, double max) {
  if (!(lambda >= 0.0 && lambda <= max)) {
    throw Error(ErrorCode::LambdaOutOfRange, fmt::format("lambda {} outside [0, {}]", lambda, max));
  }
}

std::size_t rank_of(const std::vector<LabelIndex>& order, LabelIndex label) {
  auto it = std::find(order.begin(), order.end(), label);
  if (it == order.end()) throw Error(ErrorCode::UnknownLabel, fmt::format("label {} out of range", label));
  return static_cast<std::size_t>(it - order.begin());
}

// s(y) given a 0-based rank position; top score m_top.
double saps_from_rank(std::size_t rank, double m_top, const SapsParams& p) {
  if (rank == 0) return p.u * m_top;
  return m_top + (static_cast<double>(rank) - 1.0 + p.u) * p.w;
}

}  // namespace

std::string_view to_string(PredictorKind kind) {
  return kind == PredictorKind::Threshold ? "threshold" : "saps";
}

PredictorKind parse_predictor_kind(std::string_view text) {
  if (text == "threshold") return PredictorKind::Threshold;
  if (text == "saps") return PredictorKind::Saps;
  throw Error(ErrorCode::ConfigInvalid, fmt::format("unknown predictor '{}'", text));
}

bool PredictionSet::contains(LabelIndex label) const {
  return std::find(members.begin(), members.end(), label) != members.end();
}

void SapsParams::validate() const {
  if (!(w > 0.0)) throw Error(ErrorCode::ConfigInvalid, fmt::format("SAPS w must be > 0, got {}", w));
  if (!(u > 0.0 && u < 1.0)) throw Error(ErrorCode::ConfigInvalid, fmt::format("SAPS u must be in (0,1), got {}", u));
  if (!(lambda_max >= 1.0)) {
    throw Error(ErrorCode::ConfigInvalid, fmt::format("SAPS lambda_max must be >= 1, got {}", lambda_max));
  }
}

std::vector<LabelIndex> rank_labels(std::span<const double> scores) {
  std::vector<LabelIndex> order(scores.size());
  std::iota(order.begin(), order.end(), LabelIndex{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](LabelIndex a, LabelIndex b) { return scores[a] > scores[b]; });
  return order;
}

PredictionSet threshold_set(std::span<const double> scores, double lambda) {
  check_lambda(lambda, 1.0);
  PredictionSet set;
  set.lambda = lambda;
  set.predictor = PredictorKind::Threshold;
  const auto order = rank_labels(scores);
  set.members.push_back(order.front());
  for (std::size_t j = 1; j < order.size(); ++j) {
    if (lambda >= 1.0 - scores[order[j]]) set.members.push_back(order[j]);
  }
  return set;
}

double critical_lambda(std::span<const double> scores, LabelIndex label) {
  const auto order = rank_labels(scores);
  if (rank_of(order, label) == 0) return 0.0;
  return 1.0 - scores[label];
}

double saps_score(std::span<const double> scores, LabelIndex label, const SapsParams& params) {
  params.validate();
  const auto order = rank_labels(scores);
  return saps_from_rank(rank_of(order, label), scores[order.front()], params);
}

PredictionSet saps_set(std::span<const double> scores, double lambda, const SapsParams& params) {
  params.validate();
  check_lambda(lambda, params.lambda_max);
  const auto order = rank_labels(scores);
  const double m_top = scores[order.front()];
  const std::size_t L = order.size();

  std::vector<double> s(L);
  for (std::size_t r = 0; r < L; ++r) s[order[r]] = saps_from_rank(r, m_top, params);

  // Labels by ascending s; ties keep rank order.
  std::vector<LabelIndex> by_score = order;
  std::stable_sort(by_score.begin(), by_score.end(),
                   [&](LabelIndex a, LabelIndex b) { return s[a] < s[b]; });

  // k = 1 + #{s <= lambda} over all labels except the one with the smallest s.
  std::size_t k = 1;
  for (std::size_t j = 1; j < L; ++j) {
    if (s[by_score[j]] <= lambda) ++k;
  }

  PredictionSet set;
  set.lambda = lambda;
  set.predictor = PredictorKind::Saps;
  set.members.assign(by_score.begin(), by_score.begin() + static_cast<std::ptrdiff_t>(k));
  return set;
}

std::size_t SetProfile::size_at(double lambda) const {
  // entry[0] == 0, so the set is never empty for lambda >= 0.
  return static_cast<std::size_t>(std::upper_bound(entry.begin(), entry.end(), lambda) - entry.begin());
}

double SetProfile::entry_of(LabelIndex label) const {
  for (std::size_t r = 0; r < order.size(); ++r) {
    if (order[r] == label) return entry[r];
  }
  throw Error(ErrorCode::UnknownLabel, fmt::format("label {} out of range", label));
}

SetPredictor SetPredictor::threshold() { return SetPredictor{}; }

SetPredictor SetPredictor::saps(double w, double lambda_max, std::uint64_t u_seed) {
  SapsParams{w, 0.5, lambda_max}.validate();
  SetPredictor p;
  p.kind_ = PredictorKind::Saps;
  p.domain_max_ = lambda_max;
  p.w_ = w;
  p.u_seed_ = u_seed;
  return p;
}

double SetPredictor::u_for(std::string_view instance_id) const {
  return keyed_uniform(u_seed_, instance_id);
}

SapsParams SetPredictor::saps_params(std::string_view instance_id) const {
  return SapsParams{w_, u_for(instance_id), domain_max_};
}

PredictionSet SetPredictor::predict(const Sample& sample, double lambda) const {
  return predict(sample.instance_id, sample.scores, lambda);
}

PredictionSet SetPredictor::predict(std::string_view instance_id, std::span<const double> scores,
                                    double lambda) const {
  if (kind_ == PredictorKind::Threshold) return threshold_set(scores, lambda);
  return saps_set(scores, lambda, saps_params(instance_id));
}

double SetPredictor::critical(const Sample& sample, LabelIndex label) const {
  return critical(sample.instance_id, sample.scores, label);
}

double SetPredictor::critical(std::string_view instance_id, std::span<const double> scores,
                              LabelIndex label) const {
  if (kind_ == PredictorKind::Threshold) return critical_lambda(scores, label);
  const auto order = rank_labels(scores);
  const std::size_t r = rank_of(order, label);
  if (r == 0) return 0.0;
  return saps_from_rank(r, scores[order.front()], saps_params(instance_id));
}

SetProfile SetPredictor::profile(std::string_view instance_id, std::span<const double> scores) const {
  SetProfile prof;
  prof.order = rank_labels(scores);
  prof.entry.resize(prof.order.size());
  prof.entry[0] = 0.0;
  if (kind_ == PredictorKind::Threshold) {
    for (std::size_t r = 1; r < prof.order.size(); ++r) prof.entry[r] = 1.0 - scores[prof.order[r]];
  } else {
    const SapsParams p = saps_params(instance_id);
    const double m_top = scores[prof.order.front()];
    for (std::size_t r = 1; r < prof.order.size(); ++r) prof.entry[r] = saps_from_rank(r, m_top, p);
  }
  return prof;
}

double saps_select_w(const Dataset& validation, double lambda, std::span<const double> grid,
                     double lambda_max, std::uint64_t u_seed) {
  if (grid.empty()) throw Error(ErrorCode::EmptyGrid, "SAPS w grid is empty");
  if (validation.empty()) throw Error(ErrorCode::EmptyDataset, "SAPS w selection needs validation data");
  const ScoreTable instances = score_table_of(validation);

  double best_w = 0.0;
  double best_size = 0.0;
  bool have_best = false;
  for (double w : grid) {
    const SetPredictor predictor = SetPredictor::saps(w, lambda_max, u_seed);
    double total = 0.0;
    for (const auto& [id, record] : instances) total += static_cast<double>(predictor.predict(id, record.scores, lambda).size());
    const double mean = total / static_cast<double>(instances.size());
    if (!have_best || mean < best_size || (mean == best_size && w < best_w)) {
      best_w = w;
      best_size = mean;
      have_best = true;
    }
  }
  return best_w;
}

}  // namespace harm
