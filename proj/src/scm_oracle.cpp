#include "harmctl/scm_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "csv.hpp"
#include "harmctl/error.hpp"
#include "harmctl/harm_risk.hpp"
#include "harmctl/parallel.hpp"
#include "harmctl/rng.hpp"

namespace harm {

namespace {

constexpr double kGoldenFraction = 0.6180339887498949;

std::string instance_name(std::size_t i) { return fmt::format("w{:07}", i); }

ScoreVector draw_scores(const ScoreModel& model, std::size_t labels, Rng& rng) {
  if (!model.table.empty()) return model.table[rng.index(model.table.size())];
  std::vector<double> concentration(labels, model.base_concentration);
  concentration[rng.index(labels)] = model.peak_concentration;
  return rng.dirichlet(concentration);
}

}  // namespace

std::string_view to_string(Regime regime) {
  return regime == Regime::CounterfactualMonotone ? "cf" : "interv";
}

Regime parse_regime(std::string_view text) {
  if (text == "cf" || text == "counterfactual") return Regime::CounterfactualMonotone;
  if (text == "interv" || text == "interventional") return Regime::InterventionalOnly;
  throw Error(ErrorCode::ConfigInvalid, fmt::format("unknown regime '{}'", text));
}

std::string_view to_string(TrialTarget target) {
  switch (target) {
    case TrialTarget::Harm: return "harm";
    case TrialTarget::BenefitLoss: return "benefit_loss";
    case TrialTarget::Interval: return "interval";
  }
  return "harm";
}

WorldConfig WorldConfig::resolved() const {
  WorldConfig c = *this;
  if (c.labels < 2) throw Error(ErrorCode::ConfigInvalid, "a world needs at least two labels");
  if (c.n_experts == 0) throw Error(ErrorCode::ConfigInvalid, "a world needs at least one expert");
  if (c.success_profile.empty()) {
    for (std::size_t k = 1; k <= c.labels; ++k) {
      c.success_profile.push_back(1.0 - 0.2 * static_cast<double>(k - 1) / static_cast<double>(c.labels - 1));
    }
  }
  if (c.success_profile.size() != c.labels) {
    throw Error(ErrorCode::InvalidProfile,
                fmt::format("success profile has {} entries for {} labels", c.success_profile.size(), c.labels));
  }
  for (std::size_t k = 0; k < c.labels; ++k) {
    const double q = c.success_profile[k];
    if (!(q >= 0.0 && q <= 1.0)) throw Error(ErrorCode::InvalidProfile, fmt::format("q({}) = {} outside [0,1]", k + 1, q));
    if (k > 0 && q > c.success_profile[k - 1]) {
      throw Error(ErrorCode::InvalidProfile, fmt::format("q is not nonincreasing at k = {}", k + 1));
    }
  }
  if (c.offsets.empty()) {
    for (std::size_t k = 0; k < c.labels; ++k) {
      c.offsets.push_back(std::fmod(static_cast<double>(k) * kGoldenFraction, 1.0));
    }
  }
  if (c.offsets.size() != c.labels) throw Error(ErrorCode::ConfigInvalid, "offsets need one entry per set size");
  for (double o : c.offsets) {
    if (!(o >= 0.0 && o < 1.0)) throw Error(ErrorCode::ConfigInvalid, fmt::format("offset {} outside [0,1)", o));
  }
  if (!c.expert_q_multiplier.empty() && c.expert_q_multiplier.size() != c.n_experts) {
    throw Error(ErrorCode::ConfigInvalid, "expert_q_multiplier needs one entry per expert");
  }
  for (double m : c.expert_q_multiplier) {
    if (!(m >= 0.0)) throw Error(ErrorCode::InvalidProfile, "expert q multiplier must be >= 0");
  }
  const auto& sm = c.score_model;
  if (sm.table.empty() && !(sm.peak_concentration > 0.0 && sm.base_concentration > 0.0)) {
    throw Error(ErrorCode::ConfigInvalid, "score model concentrations must be positive");
  }
  for (const auto& row : sm.table) {
    if (row.size() != c.labels) throw Error(ErrorCode::ConfigInvalid, "score table row has the wrong length");
  }
  return c;
}

nlohmann::json to_json(const WorldConfig& c) {
  nlohmann::json j;
  j["labels"] = c.labels;
  j["n_instances"] = c.n_instances;
  j["n_experts"] = c.n_experts;
  j["peak_concentration"] = c.score_model.peak_concentration;
  j["base_concentration"] = c.score_model.base_concentration;
  if (!c.score_model.table.empty()) j["score_table"] = c.score_model.table;
  j["success_profile"] = c.success_profile;
  j["regime"] = to_string(c.regime);
  j["seed"] = c.seed;
  j["offsets"] = c.offsets;
  if (!c.expert_q_multiplier.empty()) j["expert_q_multiplier"] = c.expert_q_multiplier;
  return j;
}

WorldConfig world_config_from_json(const nlohmann::json& j) {
  WorldConfig c;
  try {
    c.labels = j.value("labels", c.labels);
    c.n_instances = j.value("n_instances", c.n_instances);
    c.n_experts = j.value("n_experts", c.n_experts);
    c.score_model.peak_concentration = j.value("peak_concentration", c.score_model.peak_concentration);
    c.score_model.base_concentration = j.value("base_concentration", c.score_model.base_concentration);
    if (j.contains("score_table")) c.score_model.table = j.at("score_table").get<std::vector<ScoreVector>>();
    if (j.contains("success_profile")) c.success_profile = j.at("success_profile").get<std::vector<double>>();
    if (j.contains("regime")) c.regime = parse_regime(j.at("regime").get<std::string>());
    c.seed = j.value("seed", c.seed);
    if (j.contains("offsets")) c.offsets = j.at("offsets").get<std::vector<double>>();
    if (j.contains("expert_q_multiplier")) {
      c.expert_q_multiplier = j.at("expert_q_multiplier").get<std::vector<double>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, fmt::format("world config: {}", e.what()));
  }
  return c;
}

SyntheticWorld::SyntheticWorld(WorldConfig config, std::vector<WorldInstance> instances,
                               std::vector<ExpertNoise> noise)
    : config_(config.resolved()), instances_(std::move(instances)), noise_(std::move(noise)) {
  config_.n_instances = instances_.size();
  if (noise_.size() != instances_.size() * config_.n_experts) {
    throw Error(ErrorCode::ConfigInvalid, "world noise table does not match instances x experts");
  }
}

const ExpertNoise& SyntheticWorld::noise(std::size_t instance, std::size_t expert) const {
  return noise_.at(instance * config_.n_experts + expert);
}

double SyntheticWorld::q(std::size_t set_size, std::size_t expert) const {
  double q = config_.success_profile.at(set_size - 1);
  if (!config_.expert_q_multiplier.empty()) q = std::min(1.0, q * config_.expert_q_multiplier[expert]);
  return q;
}

bool SyntheticWorld::succeeds(std::size_t instance, std::size_t expert, std::size_t set_size,
                              bool contains_truth) const {
  if (!contains_truth) return false;
  if (set_size == 1) return true;
  const double u = noise(instance, expert).u;
  const double q_k = q(set_size, expert);
  if (config_.regime == Regime::CounterfactualMonotone) return u <= q_k;
  double d = u - config_.offsets[set_size - 1];
  if (d < 0.0) d += 1.0;
  return d < q_k;
}

LabelIndex SyntheticWorld::predict(std::size_t instance, std::size_t expert, const PredictionSet& set) const {
  const LabelIndex truth = instances_.at(instance).truth;
  const bool contains = set.contains(truth);
  if (succeeds(instance, expert, set.size(), contains)) return truth;
  std::vector<LabelIndex> wrong;
  wrong.reserve(set.size());
  for (LabelIndex m : set.members) {
    if (m != truth) wrong.push_back(m);
  }
  const double v = noise(instance, expert).wrong_draw;
  const auto pick = std::min(wrong.size() - 1, static_cast<std::size_t>(v * static_cast<double>(wrong.size())));
  return wrong[pick];
}

LabelIndex SyntheticWorld::predict_alone(std::size_t instance, std::size_t expert) const {
  PredictionSet full;
  full.members = rank_labels(instances_.at(instance).scores);
  full.lambda = 1.0;
  return predict(instance, expert, full);
}

LabelIndex SyntheticWorld::counterfactual_predict(std::size_t instance, std::size_t expert,
                                                  double lambda, const SetPredictor& predictor) const {
  const auto& inst = instances_.at(instance);
  return predict(instance, expert, predictor.predict(inst.id, inst.scores, lambda));
}

Dataset SyntheticWorld::observational_dataset(std::size_t first, std::size_t last) const {
  std::vector<Sample> samples;
  samples.reserve((last - first) * config_.n_experts);
  for (std::size_t i = first; i < last; ++i) {
    const auto& inst = instances_.at(i);
    for (std::size_t e = 0; e < config_.n_experts; ++e) {
      Sample s;
      s.instance_id = inst.id;
      s.scores = inst.scores;
      s.true_label = inst.truth;
      s.human_prediction = predict_alone(i, e);
      s.participant_id = fmt::format("e{}", e);
      samples.push_back(std::move(s));
    }
  }
  return make_dataset(label_space(), std::move(samples));
}

SyntheticWorld generate_world(const WorldConfig& config) {
  const WorldConfig c = config.resolved();
  Rng rng(c.seed);
  std::vector<WorldInstance> instances;
  std::vector<ExpertNoise> noise;
  instances.reserve(c.n_instances);
  noise.reserve(c.n_instances * c.n_experts);
  for (std::size_t i = 0; i < c.n_instances; ++i) {
    WorldInstance inst;
    inst.id = instance_name(i);
    inst.scores = draw_scores(c.score_model, c.labels, rng);
    inst.truth = rng.categorical(inst.scores);
    instances.push_back(std::move(inst));
    for (std::size_t e = 0; e < c.n_experts; ++e) {
      ExpertNoise n;
      n.u = rng.uniform_open();
      n.wrong_draw = rng.uniform();
      noise.push_back(n);
    }
  }
  return SyntheticWorld(c, std::move(instances), std::move(noise));
}

void write_world(const std::filesystem::path& dir, const SyntheticWorld& world) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "config.json");
    if (!out) throw Error(ErrorCode::Io, fmt::format("cannot write {}", (dir / "config.json").string()));
    out << to_json(world.config()).dump(2) << '\n';
  }
  ScoreTable table;
  for (const auto& inst : world.instances()) table.emplace(inst.id, ScoreRecord{std::nullopt, inst.scores});
  write_scores(dir / "scores.csv", world.label_space(), table);

  std::ofstream out(dir / "noise.csv");
  if (!out) throw Error(ErrorCode::Io, fmt::format("cannot write {}", (dir / "noise.csv").string()));
  out << "instance_id,expert,true_label,u,wrong_draw\n";
  for (std::size_t i = 0; i < world.instances().size(); ++i) {
    for (std::size_t e = 0; e < world.experts(); ++e) {
      const auto& n = world.noise(i, e);
      out << world.instances()[i].id << ',' << e << ',' << world.instances()[i].truth << ','
          << csv::format_double(n.u) << ',' << csv::format_double(n.wrong_draw) << '\n';
    }
  }
}

SyntheticWorld read_world(const std::filesystem::path& dir) {
  std::ifstream cfg_in(dir / "config.json");
  if (!cfg_in) throw Error(ErrorCode::Io, fmt::format("cannot open {}", (dir / "config.json").string()));
  nlohmann::json j;
  try {
    cfg_in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, fmt::format("world config.json: {}", e.what()));
  }
  WorldConfig config = world_config_from_json(j);

  const auto labels = read_label_space(dir / "scores.csv");
  const auto scores = load_scores(dir / "scores.csv", labels);

  csv::Reader reader(dir / "noise.csv");
  const auto id_col = reader.require("instance_id");
  const auto expert_col = reader.require("expert");
  const auto truth_col = reader.require("true_label");
  const auto u_col = reader.require("u");
  const auto wrong_col = reader.require("wrong_draw");

  std::vector<WorldInstance> instances;
  std::vector<ExpertNoise> noise;
  std::vector<std::string> fields;
  while (reader.next(fields)) {
    const auto expert = csv::parse_int(fields[expert_col]);
    const auto truth = csv::parse_int(fields[truth_col]);
    const auto u = csv::parse_double(fields[u_col]);
    const auto wrong = csv::parse_double(fields[wrong_col]);
    if (!expert || !truth || !u || !wrong || *truth < 0 || static_cast<std::size_t>(*truth) >= labels.size()) {
      throw Error(ErrorCode::MalformedRow, fmt::format("noise.csv row {} is malformed", reader.row_number()));
    }
    if (*expert == 0) {
      auto it = scores.find(fields[id_col]);
      if (it == scores.end()) {
        throw Error(ErrorCode::OrphanPrediction, fmt::format("noise for unscored instance '{}'", fields[id_col]));
      }
      instances.push_back({fields[id_col], it->second.scores, static_cast<LabelIndex>(*truth)});
    }
    noise.push_back({*u, *wrong});
  }
  return SyntheticWorld(config, std::move(instances), std::move(noise));
}

double true_harm(const SyntheticWorld& world, double lambda, const SetPredictor& predictor,
                 std::size_t first, std::size_t last) {
  if (last <= first) throw Error(ErrorCode::EmptyDataset, "empty world range");
  std::size_t harmed = 0;
  for (std::size_t i = first; i < last; ++i) {
    const auto& inst = world.instances()[i];
    const auto set = predictor.predict(inst.id, inst.scores, lambda);
    for (std::size_t e = 0; e < world.experts(); ++e) {
      const int alone = world.predict_alone(i, e) == inst.truth ? 1 : 0;
      const int helped = world.predict(i, e, set) == inst.truth ? 1 : 0;
      harmed += static_cast<std::size_t>(std::max(0, alone - helped));
    }
  }
  return static_cast<double>(harmed) / static_cast<double>((last - first) * world.experts());
}

double true_harm(const SyntheticWorld& world, double lambda, const SetPredictor& predictor) {
  return true_harm(world, lambda, predictor, 0, world.instances().size());
}

std::vector<HarmProfileRow> harm_profile(const SyntheticWorld& world, const std::vector<double>& grid,
                                         const SetPredictor& predictor, std::size_t first,
                                         std::size_t last) {
  if (last <= first) throw Error(ErrorCode::EmptyDataset, "empty world range");
  const std::size_t G = grid.size();
  // Difference arrays over grid indices; piece j of a profile covers grid
  // points with entry[j] <= lambda < entry[j+1].
  std::vector<long long> d_lower(G + 1, 0), d_true(G + 1, 0), d_upper(G + 1, 0);
  auto first_at_or_above = [&](double x) {
    return static_cast<std::size_t>(std::lower_bound(grid.begin(), grid.end(), x) - grid.begin());
  };
  for (std::size_t i = first; i < last; ++i) {
    const auto& inst = world.instances()[i];
    const auto prof = predictor.profile(inst.id, inst.scores);
    const std::size_t L = prof.order.size();
    const double truth_entry = prof.entry_of(inst.truth);
    for (std::size_t e = 0; e < world.experts(); ++e) {
      const bool alone = world.predict_alone(i, e) == inst.truth;
      for (std::size_t j = 0; j < L; ++j) {
        const std::size_t begin = first_at_or_above(prof.entry[j]);
        const std::size_t end = j + 1 < L ? first_at_or_above(prof.entry[j + 1]) : G;
        if (begin >= end) continue;
        const bool contains = truth_entry <= prof.entry[j];
        const bool helped = world.succeeds(i, e, j + 1, contains);
        const long long lo = alone && !contains ? 1 : 0;
        const long long tr = alone && !helped ? 1 : 0;
        const long long up = lo + (!alone && contains ? 1 : 0);
        d_lower[begin] += lo;
        d_lower[end] -= lo;
        d_true[begin] += tr;
        d_true[end] -= tr;
        d_upper[begin] += up;
        d_upper[end] -= up;
      }
    }
  }
  const double total = static_cast<double>((last - first) * world.experts());
  std::vector<HarmProfileRow> rows(G);
  long long lo = 0, tr = 0, up = 0;
  for (std::size_t g = 0; g < G; ++g) {
    lo += d_lower[g];
    tr += d_true[g];
    up += d_upper[g];
    rows[g] = {grid[g], static_cast<double>(lo) / total, static_cast<double>(tr) / total,
               static_cast<double>(up) / total};
  }
  return rows;
}

double score_model_top1(const ScoreModel& model, std::size_t labels, std::size_t draws, std::uint64_t seed) {
  Rng rng(seed);
  std::size_t hits = 0;
  for (std::size_t t = 0; t < draws; ++t) {
    const auto scores = draw_scores(model, labels, rng);
    const LabelIndex truth = rng.categorical(scores);
    hits += rank_labels(scores).front() == truth ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(draws);
}

nlohmann::json to_json(const CoverageStats& s) {
  nlohmann::json j;
  j["target"] = to_string(s.target);
  j["alpha"] = s.alpha;
  j["repetitions"] = s.repetitions;
  j["mean_harm"] = s.mean_harm;
  if (s.per_repetition.size() > 1) {
    double ss = 0.0;
    for (double v : s.per_repetition) ss += (v - s.mean_harm) * (v - s.mean_harm);
    const double reps = static_cast<double>(s.per_repetition.size());
    j["standard_error"] = std::sqrt(ss / (reps - 1.0) / reps);
  }
  j["violation_rate"] = s.violation_rate;
  j["mean_lambda"] = s.mean_lambda;
  j["infeasible_repetitions"] = s.infeasible;
  if (s.target == TrialTarget::Interval) {
    j["interval_violations"] = s.interval_violations;
    j["lambdas_checked"] = s.lambdas_checked;
    j["mean_alpha_prime"] = s.mean_alpha_prime;
  }
  if (!s.sandwich.empty()) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : s.sandwich) {
      rows.push_back({{"lambda", r.lambda},
                      {"lower", r.lower},
                      {"true_harm", r.true_harm},
                      {"upper", r.upper},
                      {"slack_lower", r.true_harm - r.lower},
                      {"slack_upper", r.upper - r.true_harm}});
    }
    j["sandwich"] = rows;
  }
  return j;
}

CoverageStats coverage_trial(const WorldConfig& config, const TrialOptions& options) {
  if (options.repetitions == 0) throw Error(ErrorCode::ConfigInvalid, "repetitions must be >= 1");
  if (options.n_calib == 0 || options.n_test == 0) throw Error(ErrorCode::ConfigInvalid, "n_calib and n_test must be >= 1");
  const SetPredictor predictor = options.predictor.value_or(SetPredictor::threshold());
  const std::size_t total = options.n_calib + options.n_test;

  struct RepResult {
    double metric = 0.0;
    double lambda = 0.0;
    double alpha_prime = 0.0;
    bool feasible = true;
    std::size_t violations = 0;
    std::size_t checked = 0;
    std::vector<HarmProfileRow> profile;
  };
  std::vector<RepResult> results(options.repetitions);

  parallel_for(options.repetitions, options.jobs, [&](std::size_t rep) {
    WorldConfig wc = config;
    wc.n_instances = total;
    wc.seed = derive_seed(config.seed, rep);
    const SyntheticWorld world = generate_world(wc);
    const Dataset calibration = world.observational_dataset(0, options.n_calib);
    RepResult& r = results[rep];

    switch (options.target) {
      case TrialTarget::Harm: {
        r.lambda = lambda_hat(harm_curve(calibration, predictor), options.alpha);
        r.metric = true_harm(world, r.lambda, predictor, options.n_calib, total);
        break;
      }
      case TrialTarget::BenefitLoss: {
        try {
          r.lambda = lambda_check(benefit_loss_curve(calibration, predictor), options.alpha).value;
        } catch (const Error& e) {
          if (e.code() != ErrorCode::Infeasible) throw;
          r.feasible = false;
          break;
        }
        const Dataset test = world.observational_dataset(options.n_calib, total);
        std::size_t lost = 0;
        for (const auto& s : test.samples) {
          lost += static_cast<std::size_t>(per_sample_benefit_loss(s, predictor.predict(s, r.lambda)));
        }
        r.metric = static_cast<double>(lost) / static_cast<double>(test.size());
        break;
      }
      case TrialTarget::Interval: {
        const RiskCurve h = harm_curve(calibration, predictor);
        const RiskCurve g = benefit_loss_curve(calibration, predictor);
        r.alpha_prime = select_alpha_prime(h, g, options.alpha, options.alpha_prime_step);
        const auto interval = harm_controlling_set_interv(h, g, options.alpha, r.alpha_prime);
        r.feasible = interval.feasible;
        r.lambda = interval.lower;
        const auto prof = harm_profile(world, options.lambda_grid, predictor, options.n_calib, total);
        for (const auto& row : prof) {
          if (!interval.contains(row.lambda)) continue;
          ++r.checked;
          r.metric = std::max(r.metric, row.true_harm);
          if (row.true_harm > options.alpha) ++r.violations;
        }
        break;
      }
    }
    if (rep == 0 && !options.lambda_grid.empty()) {
      r.profile = harm_profile(world, options.lambda_grid, predictor, options.n_calib, total);
    }
  });

  CoverageStats stats;
  stats.target = options.target;
  stats.alpha = options.alpha;
  stats.repetitions = options.repetitions;
  std::size_t feasible = 0;
  std::size_t exceed = 0;
  double metric_sum = 0.0, lambda_sum = 0.0, ap_sum = 0.0;
  for (const auto& r : results) {
    ap_sum += r.alpha_prime;
    stats.interval_violations += r.violations;
    stats.lambdas_checked += r.checked;
    if (!r.feasible && options.target == TrialTarget::BenefitLoss) {
      ++stats.infeasible;
      continue;
    }
    if (!r.feasible) ++stats.infeasible;
    ++feasible;
    metric_sum += r.metric;
    lambda_sum += r.lambda;
    exceed += r.metric > options.alpha ? 1 : 0;
    stats.per_repetition.push_back(r.metric);
  }
  if (feasible > 0) {
    stats.mean_harm = metric_sum / static_cast<double>(feasible);
    stats.mean_lambda = lambda_sum / static_cast<double>(feasible);
    stats.violation_rate = static_cast<double>(exceed) / static_cast<double>(feasible);
  }
  stats.mean_alpha_prime = ap_sum / static_cast<double>(options.repetitions);
  stats.sandwich = std::move(results.front().profile);
  return stats;
}

}  // namespace harm
