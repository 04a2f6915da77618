#include "harmctl/data_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include <fmt/format.h>

#include "csv.hpp"
#include "harmctl/error.hpp"
#include "harmctl/rng.hpp"

namespace harm {

namespace {

constexpr double kClampSlack = 1e-9;

LabelIndex resolve_label(const LabelSpace& labels, std::string_view name, std::size_t row) {
  if (auto idx = labels.find(name)) return *idx;
  throw Error(ErrorCode::UnknownLabel, fmt::format("unknown label '{}' at row {}", name, row));
}

std::optional<int> parse_noise(std::string_view text, std::size_t row) {
  if (text.empty()) return std::nullopt;
  auto value = csv::parse_int(text);
  if (!value) throw Error(ErrorCode::MalformedRow, fmt::format("row {}: bad noise '{}'", row, text));
  return static_cast<int>(*value);
}

}  // namespace

LabelSpace::LabelSpace(std::vector<std::string> names) : names_(std::move(names)) {
  if (names_.size() < 2) {
    throw Error(ErrorCode::ConfigInvalid, "label space needs at least two labels");
  }
  for (LabelIndex i = 0; i < names_.size(); ++i) {
    if (names_[i].empty()) throw Error(ErrorCode::ConfigInvalid, "empty label name");
    if (!index_.emplace(names_[i], i).second) {
      throw Error(ErrorCode::ConfigInvalid, fmt::format("duplicate label '{}'", names_[i]));
    }
  }
}

std::optional<LabelIndex> LabelSpace::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

LabelSpace numbered_labels(std::size_t count) {
  std::vector<std::string> names;
  names.reserve(count);
  for (std::size_t i = 0; i < count; ++i) names.push_back(std::to_string(i));
  return LabelSpace(std::move(names));
}

std::vector<std::string> Dataset::instance_ids() const {
  std::set<std::string> ids;
  for (const auto& s : samples) ids.insert(s.instance_id);
  return {ids.begin(), ids.end()};
}

Dataset make_dataset(LabelSpace labels, std::vector<Sample> samples) {
  Dataset out;
  out.label_space = std::move(labels);
  out.samples = std::move(samples);
  std::map<std::string, std::pair<std::size_t, std::size_t>> counts;
  for (const auto& s : out.samples) {
    auto& [correct, total] = counts[s.instance_id];
    correct += s.human_correct() ? 1 : 0;
    ++total;
  }
  for (const auto& [id, c] : counts) {
    out.per_instance_accuracy[id] = static_cast<double>(c.first) / static_cast<double>(c.second);
  }
  return out;
}

LabelSpace read_label_space(const std::filesystem::path& path) {
  csv::Reader reader(path);
  const auto& header = reader.header();
  if (header.size() < 2 || header[0] != "instance_id" || header[1] != "noise") {
    throw Error(ErrorCode::MissingColumn,
                fmt::format("{}: scores header must start with instance_id,noise", path.string()));
  }
  return LabelSpace(std::vector<std::string>(header.begin() + 2, header.end()));
}

ScoreTable load_scores(const std::filesystem::path& path, const LabelSpace& labels,
                       const LoadOptions& options) {
  csv::Reader reader(path);
  const std::size_t id_col = reader.require("instance_id");
  const std::size_t noise_col = reader.require("noise");
  std::vector<std::size_t> label_cols;
  label_cols.reserve(labels.size());
  for (const auto& name : labels.names()) label_cols.push_back(reader.require(name));

  ScoreTable table;
  std::vector<std::string> fields;
  while (reader.next(fields)) {
    const std::size_t row = reader.row_number();
    ScoreRecord record;
    record.noise = parse_noise(fields[noise_col], row);
    record.scores.reserve(labels.size());
    double total = 0.0;
    for (std::size_t k = 0; k < label_cols.size(); ++k) {
      auto value = csv::parse_double(fields[label_cols[k]]);
      if (!value || !std::isfinite(*value)) {
        throw Error(ErrorCode::MalformedRow,
                    fmt::format("row {}: bad score '{}'", row, fields[label_cols[k]]));
      }
      double v = *value;
      if (v < -kClampSlack || v > 1.0 + kClampSlack) {
        throw Error(ErrorCode::ScoreOutOfRange,
                    fmt::format("row {}: score {} for label '{}' outside [0,1]", row, v,
                                labels.name(k)));
      }
      v = std::clamp(v, 0.0, 1.0);
      total += v;
      record.scores.push_back(v);
    }
    if (options.strict && std::abs(total - 1.0) > options.sum_tolerance) {
      throw Error(ErrorCode::ScoreOutOfRange,
                  fmt::format("row {}: scores sum to {} (tolerance {})", row, total,
                              options.sum_tolerance));
    }
    const std::string& id = fields[id_col];
    if (id.empty()) throw Error(ErrorCode::MalformedRow, fmt::format("row {}: empty instance_id", row));
    if (!table.emplace(id, std::move(record)).second) {
      throw Error(ErrorCode::DuplicateInstance, fmt::format("duplicate instance '{}' at row {}", id, row));
    }
  }
  return table;
}

std::vector<HumanPrediction> load_human_predictions(const std::filesystem::path& path,
                                                    const LabelSpace& labels) {
  csv::Reader reader(path);
  const std::size_t id_col = reader.require("instance_id");
  const std::size_t participant_col = reader.require("participant_id");
  const std::size_t truth_col = reader.require("true_label");
  const std::size_t pred_col = reader.require("prediction");

  std::vector<HumanPrediction> out;
  std::vector<std::string> fields;
  while (reader.next(fields)) {
    const std::size_t row = reader.row_number();
    HumanPrediction p;
    p.instance_id = fields[id_col];
    p.participant_id = fields[participant_col];
    p.true_label = resolve_label(labels, fields[truth_col], row);
    p.prediction = resolve_label(labels, fields[pred_col], row);
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<SetPredictionRecord> load_set_predictions(const std::filesystem::path& path,
                                                      const LabelSpace& labels) {
  csv::Reader reader(path);
  const std::size_t id_col = reader.require("instance_id");
  const std::size_t participant_col = reader.require("participant_id");
  const std::size_t set_col = reader.require("set_members");
  const std::size_t pred_col = reader.require("prediction");

  std::vector<SetPredictionRecord> out;
  std::vector<std::string> fields;
  while (reader.next(fields)) {
    const std::size_t row = reader.row_number();
    SetPredictionRecord r;
    r.instance_id = fields[id_col];
    r.participant_id = fields[participant_col];
    std::string_view members = fields[set_col];
    std::set<LabelIndex> seen;
    while (!members.empty()) {
      const auto bar = members.find('|');
      const auto name = members.substr(0, bar);
      const LabelIndex idx = resolve_label(labels, name, row);
      if (!seen.insert(idx).second) {
        throw Error(ErrorCode::InvalidRecord, fmt::format("row {}: duplicate set member '{}'", row, name));
      }
      r.set_members.push_back(idx);
      if (bar == std::string_view::npos) break;
      members.remove_prefix(bar + 1);
    }
    if (r.set_members.empty()) {
      throw Error(ErrorCode::InvalidRecord, fmt::format("row {}: empty prediction set", row));
    }
    r.human_prediction = resolve_label(labels, fields[pred_col], row);
    if (!seen.contains(r.human_prediction)) {
      throw Error(ErrorCode::InvalidRecord,
                  fmt::format("row {}: prediction '{}' is not in the prediction set", row,
                              fields[pred_col]));
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::map<std::string, LabelIndex> true_labels_from(const std::vector<HumanPrediction>& predictions) {
  std::map<std::string, LabelIndex> out;
  for (const auto& p : predictions) {
    auto [it, inserted] = out.emplace(p.instance_id, p.true_label);
    if (!inserted && it->second != p.true_label) {
      throw Error(ErrorCode::InconsistentLabel,
                  fmt::format("instance '{}' has conflicting true labels", p.instance_id));
    }
  }
  return out;
}

Dataset join_dataset(const LabelSpace& labels, const ScoreTable& scores,
                     const std::vector<HumanPrediction>& predictions,
                     const std::map<std::string, LabelIndex>& true_labels,
                     std::optional<int> noise_filter) {
  std::vector<Sample> samples;
  samples.reserve(predictions.size());
  for (const auto& p : predictions) {
    auto it = scores.find(p.instance_id);
    if (it == scores.end()) {
      throw Error(ErrorCode::OrphanPrediction,
                  fmt::format("prediction for unscored instance '{}'", p.instance_id));
    }
    auto truth = true_labels.find(p.instance_id);
    if (truth == true_labels.end()) {
      throw Error(ErrorCode::OrphanPrediction,
                  fmt::format("no true label for instance '{}'", p.instance_id));
    }
    if (noise_filter && it->second.noise != noise_filter) continue;
    if (it->second.scores.size() != labels.size()) {
      throw Error(ErrorCode::MalformedRow,
                  fmt::format("instance '{}' has {} scores for {} labels", p.instance_id,
                              it->second.scores.size(), labels.size()));
    }
    Sample s;
    s.instance_id = p.instance_id;
    s.noise = it->second.noise;
    s.scores = it->second.scores;
    s.true_label = truth->second;
    s.human_prediction = p.prediction;
    s.participant_id = p.participant_id;
    samples.push_back(std::move(s));
  }
  return make_dataset(labels, std::move(samples));
}

std::vector<Dataset> partition_dataset(const Dataset& dataset, const std::vector<double>& fractions,
                                       std::uint64_t seed) {
  if (dataset.empty()) throw Error(ErrorCode::EmptyDataset, "cannot split an empty dataset");
  double total_frac = 0.0;
  for (double f : fractions) {
    if (!(f > 0.0 && f < 1.0)) {
      throw Error(ErrorCode::ConfigInvalid, fmt::format("split fraction {} not in (0,1)", f));
    }
    total_frac += f;
  }
  if (total_frac > 1.0 + 1e-12) throw Error(ErrorCode::ConfigInvalid, "split fractions sum above 1");

  std::vector<std::string> ids = dataset.instance_ids();
  Rng rng(seed);
  rng.shuffle(ids);

  std::vector<std::vector<std::string>> parts(fractions.size() + 1);
  std::size_t cursor = 0;
  for (std::size_t p = 0; p < fractions.size(); ++p) {
    const auto want = static_cast<std::size_t>(std::llround(fractions[p] * static_cast<double>(ids.size())));
    const std::size_t take = std::min(want, ids.size() - cursor);
    parts[p].assign(ids.begin() + static_cast<std::ptrdiff_t>(cursor),
                    ids.begin() + static_cast<std::ptrdiff_t>(cursor + take));
    cursor += take;
  }
  parts.back().assign(ids.begin() + static_cast<std::ptrdiff_t>(cursor), ids.end());

  std::vector<Dataset> out;
  out.reserve(parts.size());
  for (const auto& p : parts) out.push_back(restrict_to_instances(dataset, p));
  return out;
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& dataset, double calib_frac,
                                          std::uint64_t seed) {
  auto parts = partition_dataset(dataset, {calib_frac}, seed);
  return {std::move(parts[0]), std::move(parts[1])};
}

Dataset restrict_to_instances(const Dataset& dataset, const std::vector<std::string>& ids) {
  std::set<std::string_view> keep(ids.begin(), ids.end());
  Dataset out;
  out.label_space = dataset.label_space;
  for (const auto& s : dataset.samples) {
    if (keep.contains(s.instance_id)) out.samples.push_back(s);
  }
  for (const auto& id : ids) {
    auto it = dataset.per_instance_accuracy.find(id);
    if (it != dataset.per_instance_accuracy.end()) out.per_instance_accuracy.insert(*it);
  }
  return out;
}

ScoreTable score_table_of(const Dataset& dataset) {
  ScoreTable table;
  for (const auto& s : dataset.samples) table.emplace(s.instance_id, ScoreRecord{s.noise, s.scores});
  return table;
}

void write_scores(const std::filesystem::path& path, const LabelSpace& labels,
                  const ScoreTable& scores) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, fmt::format("cannot write {}", path.string()));
  out << "instance_id,noise";
  for (const auto& name : labels.names()) out << ',' << csv::quote(name);
  out << '\n';
  for (const auto& [id, record] : scores) {
    out << csv::quote(id) << ',';
    if (record.noise) out << *record.noise;
    for (double v : record.scores) out << ',' << csv::format_double(v);
    out << '\n';
  }
}

void write_human_predictions(const std::filesystem::path& path, const Dataset& dataset) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, fmt::format("cannot write {}", path.string()));
  out << "instance_id,participant_id,true_label,prediction\n";
  const auto& labels = dataset.label_space;
  for (const auto& s : dataset.samples) {
    out << csv::quote(s.instance_id) << ',' << csv::quote(s.participant_id.value_or("")) << ','
        << csv::quote(labels.name(s.true_label)) << ',' << csv::quote(labels.name(s.human_prediction))
        << '\n';
  }
}

Dataset load_dataset(const std::filesystem::path& scores_path,
                     const std::filesystem::path& humans_path, std::optional<int> noise_filter,
                     const LoadOptions& options) {
  LabelSpace labels = read_label_space(scores_path);
  ScoreTable scores = load_scores(scores_path, labels, options);
  auto predictions = load_human_predictions(humans_path, labels);
  auto truths = true_labels_from(predictions);
  return join_dataset(labels, scores, predictions, truths, noise_filter);
}

}  // namespace harm
