#include "harmctl/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "csv.hpp"
#include "harmctl/error.hpp"
#include "harmctl/expert_mnl.hpp"
#include "harmctl/harm_risk.hpp"
#include "harmctl/parallel.hpp"
#include "harmctl/rng.hpp"

namespace harm {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

double parse_number(std::string_view text) {
  const auto v = csv::parse_double(trim(text));
  if (!v) throw Error(ErrorCode::ConfigInvalid, fmt::format("bad number '{}' in lambda grid", text));
  return *v;
}

std::size_t first_at_or_above(const std::vector<double>& grid, double x) {
  return static_cast<std::size_t>(std::lower_bound(grid.begin(), grid.end(), x) - grid.begin());
}

nlohmann::json estimate_json(const Estimate& e) {
  nlohmann::json j;
  j["mean"] = e.mean;
  j["half_width"] = e.half_width ? nlohmann::json(*e.half_width) : nlohmann::json(nullptr);
  return j;
}

nlohmann::json interval_json(const HarmControlResult& r) {
  nlohmann::json j;
  j["mode"] = to_string(r.mode);
  j["alpha"] = r.alpha;
  j["alpha_prime"] = r.alpha_prime ? nlohmann::json(*r.alpha_prime) : nlohmann::json(nullptr);
  j["lower"] = r.lower;
  j["upper"] = r.upper;
  j["upper_inclusive"] = r.upper_inclusive;
  j["feasible"] = r.feasible;
  return j;
}

// Per-grid test metrics of one repetition.
struct RepCurves {
  std::vector<double> accuracy, lower, upper, size, coverage;
  std::vector<char> member;
  double human_alone = 0.0;
};

RepCurves sweep(const Dataset& test, const SetPredictor& predictor, const MnlMixture& mixture,
                const DifficultyStrata& strata, const HarmControlResult& interval,
                const std::vector<double>& grid) {
  const std::size_t G = grid.size();
  RepCurves c;
  c.accuracy.assign(G, 0.0);
  std::vector<long long> d_lower(G + 1, 0), d_upper(G + 1, 0), d_cov(G + 1, 0), d_size(G + 1, 0);
  std::size_t correct_alone = 0;
  std::vector<double> success;
  for (const auto& s : test.samples) {
    const auto prof = predictor.profile(s);
    const std::size_t L = prof.order.size();
    const std::size_t stratum = strata.stratum_of(s.instance_id);
    const std::size_t covered_from = first_at_or_above(grid, prof.entry_of(s.true_label));
    const bool alone = s.human_correct();
    correct_alone += alone ? 1 : 0;
    if (alone) {
      ++d_lower[0];
      --d_lower[covered_from];
    } else {
      ++d_upper[covered_from];
      --d_upper[G];
    }
    ++d_cov[covered_from];
    --d_cov[G];

    // Modelled success per prefix length; the set is order[0..j].
    success.assign(L, 0.0);
    double denom = 0.0;
    bool has_truth = false;
    for (std::size_t j = 0; j < L; ++j) {
      denom += mixture.theta(stratum, s.true_label, prof.order[j]);
      has_truth = has_truth || prof.order[j] == s.true_label;
      if (!has_truth) continue;
      if (!(denom > 0.0)) {
        throw Error(ErrorCode::DegenerateRow,
                    fmt::format("confusion row {} of stratum {} has no mass on the set", s.true_label, stratum));
      }
      success[j] = mixture.theta(stratum, s.true_label, s.true_label) / denom;
    }
    for (std::size_t j = 0; j < L; ++j) {
      const std::size_t begin = first_at_or_above(grid, prof.entry[j]);
      const std::size_t end = j + 1 < L ? first_at_or_above(grid, prof.entry[j + 1]) : G;
      if (begin >= end) continue;
      d_size[begin] += static_cast<long long>(j + 1);
      d_size[end] -= static_cast<long long>(j + 1);
      for (std::size_t g = begin; g < end; ++g) c.accuracy[g] += success[j];
    }
  }
  const double n = static_cast<double>(test.size());
  c.lower.resize(G);
  c.upper.resize(G);
  c.size.resize(G);
  c.coverage.resize(G);
  c.member.resize(G);
  long long lo = 0, up = 0, cov = 0, sz = 0;
  for (std::size_t g = 0; g < G; ++g) {
    lo += d_lower[g];
    up += d_upper[g];
    cov += d_cov[g];
    sz += d_size[g];
    c.accuracy[g] /= n;
    c.lower[g] = static_cast<double>(lo) / n;
    c.upper[g] = static_cast<double>(lo + up) / n;
    c.coverage[g] = static_cast<double>(cov) / n;
    c.size[g] = static_cast<double>(sz) / n;
    c.member[g] = interval.contains(grid[g]) ? 1 : 0;
  }
  c.human_alone = static_cast<double>(correct_alone) / n;
  return c;
}

}  // namespace

std::vector<double> parse_lambda_grid(std::string_view text) {
  std::vector<double> grid;
  const std::string t = trim(text);
  if (t.empty()) throw Error(ErrorCode::EmptyGrid, "lambda grid is empty");
  if (t.find(':') != std::string::npos) {
    const auto parts = [&] {
      std::vector<std::string> out;
      std::size_t pos = 0;
      while (true) {
        const auto next = t.find(':', pos);
        out.push_back(t.substr(pos, next - pos));
        if (next == std::string::npos) break;
        pos = next + 1;
      }
      return out;
    }();
    if (parts.size() != 3) throw Error(ErrorCode::ConfigInvalid, fmt::format("lambda grid '{}' is not start:stop:step", t));
    const double start = parse_number(parts[0]);
    const double stop = parse_number(parts[1]);
    const double step = parse_number(parts[2]);
    if (!(step > 0.0) || stop < start) {
      throw Error(ErrorCode::ConfigInvalid, fmt::format("lambda grid '{}' needs step > 0 and stop >= start", t));
    }
    const auto n = static_cast<std::size_t>(std::llround((stop - start) / step));
    for (std::size_t i = 0; i < n; ++i) grid.push_back(start + static_cast<double>(i) * step);
    grid.push_back(stop);
  } else {
    std::size_t pos = 0;
    while (pos <= t.size()) {
      const auto next = t.find(',', pos);
      grid.push_back(parse_number(t.substr(pos, next == std::string::npos ? std::string::npos : next - pos)));
      if (next == std::string::npos) break;
      pos = next + 1;
    }
  }
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) throw Error(ErrorCode::ConfigInvalid, "lambda grid must be strictly increasing");
  }
  if (grid.front() < 0.0) throw Error(ErrorCode::LambdaOutOfRange, "lambda grid starts below 0");
  return grid;
}

std::vector<double> default_lambda_grid(PredictorKind kind) {
  if (kind == PredictorKind::Saps) {
    return parse_lambda_grid(fmt::format("0:{}:{}", kDefaultSapsLambdaMax, kDefaultSapsLambdaStep));
  }
  return parse_lambda_grid("0:1:0.001");
}

std::string_view to_string(AlphaPrimePolicy policy) {
  switch (policy) {
    case AlphaPrimePolicy::Fixed: return "fixed";
    case AlphaPrimePolicy::Auto: return "auto";
    case AlphaPrimePolicy::Pooled: return "pooled";
  }
  return "pooled";
}

AlphaPrimePolicy parse_alpha_prime_policy(std::string_view text) {
  if (text == "fixed") return AlphaPrimePolicy::Fixed;
  if (text == "auto") return AlphaPrimePolicy::Auto;
  if (text == "pooled") return AlphaPrimePolicy::Pooled;
  throw Error(ErrorCode::ConfigInvalid, fmt::format("unknown alpha' policy '{}'", text));
}

nlohmann::json to_json(const PredictorSpec& spec) {
  nlohmann::json j;
  j["kind"] = to_string(spec.kind);
  if (spec.kind == PredictorKind::Saps) {
    j["w"] = spec.w ? nlohmann::json(*spec.w) : nlohmann::json(nullptr);
    j["w_grid"] = spec.w_grid;
    j["w_lambda"] = spec.w_lambda;
    j["lambda_max"] = spec.lambda_max;
    j["validation_fraction"] = spec.validation_fraction;
    j["u_seed"] = spec.u_seed;
  }
  return j;
}

Estimate summarize(const std::vector<double>& values) {
  Estimate e;
  if (values.empty()) return e;
  double sum = 0.0;
  for (double v : values) sum += v;
  const double n = static_cast<double>(values.size());
  e.mean = sum / n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - e.mean) * (v - e.mean);
    e.half_width = 1.96 * std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  }
  return e;
}

TradeoffReport run_tradeoff(const Dataset& dataset, const TradeoffOptions& options) {
  if (options.repetitions == 0) throw Error(ErrorCode::ConfigInvalid, "repetitions must be >= 1");
  if (dataset.empty()) throw Error(ErrorCode::EmptyDataset, "tradeoff needs data");
  const auto& spec = options.predictor;
  const std::vector<double> grid =
      options.lambda_grid.empty() ? default_lambda_grid(spec.kind) : options.lambda_grid;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) throw Error(ErrorCode::ConfigInvalid, "lambda grid must be strictly increasing");
  }
  const bool interventional = options.mode == ControlMode::Interventional;
  if (interventional && options.alpha_prime_policy == AlphaPrimePolicy::Fixed &&
      !(options.alpha_prime > 0.0 && options.alpha_prime < options.alpha)) {
    throw Error(ErrorCode::ConfigInvalid, "fixed alpha' must lie in (0, alpha)");
  }

  // Strata come from the whole dataset's human-alone accuracies; only the
  // confusion matrices are fit on calibration data.
  const DifficultyStrata strata = stratify_difficulty(dataset, options.quantile_cuts);

  struct Rep {
    std::uint64_t seed = 0;
    Dataset calibration, test;
    SetPredictor predictor = SetPredictor::threshold();
    std::optional<double> w;
    std::optional<RiskCurve> harm, loss;
  };
  std::vector<Rep> reps(options.repetitions);

  parallel_for(options.repetitions, options.jobs, [&](std::size_t r) {
    Rep& rep = reps[r];
    rep.seed = derive_seed(options.seed, r);
    if (spec.kind == PredictorKind::Saps) {
      auto parts = partition_dataset(dataset, {options.calib_fraction, spec.validation_fraction}, rep.seed);
      rep.calibration = std::move(parts[0]);
      const double w = spec.w ? *spec.w
                              : saps_select_w(parts[1], spec.w_lambda, spec.w_grid, spec.lambda_max, spec.u_seed);
      rep.w = w;
      rep.predictor = SetPredictor::saps(w, spec.lambda_max, spec.u_seed);
      rep.test = std::move(parts[2]);
    } else {
      auto [calib, test] = split_dataset(dataset, options.calib_fraction, rep.seed);
      rep.calibration = std::move(calib);
      rep.test = std::move(test);
    }
    if (rep.calibration.empty() || rep.test.empty()) {
      throw Error(ErrorCode::InsufficientData, "a split came out empty; dataset too small for the fractions");
    }
    rep.harm = harm_curve(rep.calibration, rep.predictor);
    if (interventional) rep.loss = benefit_loss_curve(rep.calibration, rep.predictor);
  });

  TradeoffReport report;
  report.alpha = options.alpha;
  report.mode = options.mode;
  report.alpha_prime_policy = options.alpha_prime_policy;
  report.predictor = std::string(to_string(spec.kind));
  report.seed = options.seed;
  report.repetitions = options.repetitions;

  std::optional<double> shared_alpha_prime;
  if (interventional) {
    if (options.alpha_prime_policy == AlphaPrimePolicy::Fixed) {
      shared_alpha_prime = options.alpha_prime;
    } else if (options.alpha_prime_policy == AlphaPrimePolicy::Pooled) {
      std::vector<CurvePair> draws;
      draws.reserve(reps.size());
      for (const auto& rep : reps) draws.push_back({*rep.harm, *rep.loss});
      shared_alpha_prime = select_alpha_prime_pooled(draws, options.alpha, options.alpha_prime_step);
    }
    report.alpha_prime = shared_alpha_prime;
  }

  std::vector<RepCurves> curves(options.repetitions);
  std::vector<HarmControlResult> intervals(options.repetitions);
  parallel_for(options.repetitions, options.jobs, [&](std::size_t r) {
    const Rep& rep = reps[r];
    HarmControlResult interval;
    if (interventional) {
      const double ap = shared_alpha_prime
                            ? *shared_alpha_prime
                            : select_alpha_prime(*rep.harm, *rep.loss, options.alpha, options.alpha_prime_step);
      interval = harm_controlling_set_interv(*rep.harm, *rep.loss, options.alpha, ap);
    } else {
      interval = harm_controlling_set_cf(*rep.harm, options.alpha);
    }
    intervals[r] = interval;
    const MnlMixture mixture = fit_confusion(rep.calibration, strata, options.epsilon);
    curves[r] = sweep(rep.test, rep.predictor, mixture, strata, interval, grid);
  });

  std::vector<double> alone;
  for (std::size_t r = 0; r < options.repetitions; ++r) {
    alone.push_back(curves[r].human_alone);
    report.per_repetition.push_back(
        {reps[r].seed, intervals[r], reps[r].w, reps[r].calibration.size(), reps[r].test.size()});
  }
  report.human_alone_accuracy = summarize(alone);

  std::vector<double> acc(options.repetitions), lo(options.repetitions), up(options.repetitions),
      size(options.repetitions), cov(options.repetitions);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    std::size_t members = 0;
    for (std::size_t r = 0; r < options.repetitions; ++r) {
      acc[r] = curves[r].accuracy[g];
      lo[r] = curves[r].lower[g];
      up[r] = curves[r].upper[g];
      size[r] = curves[r].size[g];
      cov[r] = curves[r].coverage[g];
      members += static_cast<std::size_t>(curves[r].member[g]);
    }
    TradeoffRow row;
    row.lambda = grid[g];
    row.accuracy = summarize(acc);
    row.harm = summarize(lo);
    row.harm_upper = summarize(up);
    row.membership_frequency = static_cast<double>(members) / static_cast<double>(options.repetitions);
    row.mean_set_size = summarize(size);
    row.coverage = summarize(cov);
    report.rows.push_back(row);
  }
  return report;
}

void write_tradeoff_csv(const std::filesystem::path& path, const TradeoffReport& report) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, fmt::format("cannot write {}", path.string()));
  auto ci = [](const Estimate& e) { return e.half_width ? csv::format_double(*e.half_width) : std::string(); };
  out << "lambda,accuracy,accuracy_ci,harm,harm_ci,harm_upper,harm_upper_ci,membership_frequency,"
         "mean_set_size,mean_set_size_ci,coverage,coverage_ci\n";
  for (const auto& r : report.rows) {
    out << csv::format_double(r.lambda) << ',' << csv::format_double(r.accuracy.mean) << ',' << ci(r.accuracy)
        << ',' << csv::format_double(r.harm.mean) << ',' << ci(r.harm) << ','
        << csv::format_double(r.harm_upper.mean) << ',' << ci(r.harm_upper) << ','
        << csv::format_double(r.membership_frequency) << ',' << csv::format_double(r.mean_set_size.mean) << ','
        << ci(r.mean_set_size) << ',' << csv::format_double(r.coverage.mean) << ',' << ci(r.coverage) << '\n';
  }
}

nlohmann::json to_json(const TradeoffReport& report) {
  nlohmann::json j;
  j["alpha"] = report.alpha;
  j["mode"] = to_string(report.mode);
  j["alpha_prime_policy"] = to_string(report.alpha_prime_policy);
  j["alpha_prime"] = report.alpha_prime ? nlohmann::json(*report.alpha_prime) : nlohmann::json(nullptr);
  j["predictor"] = report.predictor;
  j["seed"] = report.seed;
  j["repetitions"] = report.repetitions;
  j["human_alone_accuracy"] = estimate_json(report.human_alone_accuracy);
  j["grid_points"] = report.rows.size();
  // Summary over the lambdas certified in every repetition.
  std::size_t certified = 0, above = 0;
  double worst = 0.0;
  for (const auto& r : report.rows) {
    if (r.membership_frequency != 1.0) continue;
    ++certified;
    worst = std::max(worst, r.harm.mean);
    above += r.harm.mean > report.alpha + r.harm.half_width.value_or(0.0) ? 1 : 0;
  }
  j["summary"] = {{"always_certified_lambdas", certified},
                  {"max_harm_when_certified", certified > 0 ? nlohmann::json(worst) : nlohmann::json(nullptr)},
                  {"certified_above_alpha_plus_ci", above}};
  nlohmann::json reps = nlohmann::json::array();
  for (const auto& r : report.per_repetition) {
    nlohmann::json x;
    x["seed"] = r.seed;
    x["interval"] = interval_json(r.interval);
    if (r.w) x["w"] = *r.w;
    x["n_calib"] = r.n_calib;
    x["n_test"] = r.n_test;
    reps.push_back(x);
  }
  j["per_repetition"] = reps;
  return j;
}

std::vector<CoverageRow> coverage_and_size(const Dataset& dataset, const SetPredictor& predictor,
                                           const std::vector<double>& lambda_grid) {
  if (dataset.empty()) throw Error(ErrorCode::EmptyDataset, "coverage needs data");
  const std::size_t G = lambda_grid.size();
  std::vector<long long> d_cov(G + 1, 0), d_size(G + 1, 0);
  for (const auto& s : dataset.samples) {
    const auto prof = predictor.profile(s);
    ++d_cov[first_at_or_above(lambda_grid, prof.entry_of(s.true_label))];
    --d_cov[G];
    for (std::size_t j = 0; j < prof.order.size(); ++j) {
      // Size grows by one at each entry threshold.
      ++d_size[first_at_or_above(lambda_grid, prof.entry[j])];
      --d_size[G];
    }
  }
  std::vector<CoverageRow> rows(G);
  const double n = static_cast<double>(dataset.size());
  long long cov = 0, size = 0;
  for (std::size_t g = 0; g < G; ++g) {
    cov += d_cov[g];
    size += d_size[g];
    rows[g] = {lambda_grid[g], static_cast<double>(cov) / n, static_cast<double>(size) / n};
  }
  return rows;
}

VerificationReport verify_interventional_monotonicity(const std::vector<SetPredictionRecord>& records,
                                                      const Dataset& dataset,
                                                      const MonotonicityOptions& options) {
  if (records.empty()) throw Error(ErrorCode::EmptyDataset, "no set-prediction records");
  const std::size_t L = dataset.label_space.size();
  std::map<std::string, LabelIndex> truth;
  for (const auto& s : dataset.samples) truth.emplace(s.instance_id, s.true_label);

  // Difficulty level per instance within its own label.
  std::vector<std::vector<std::pair<std::string, double>>> by_label(L);
  for (const auto& [id, acc] : dataset.per_instance_accuracy) by_label[truth.at(id)].emplace_back(id, acc);
  std::map<std::string, std::size_t> difficulty;
  for (const auto& members : by_label) {
    if (members.empty()) continue;
    std::vector<double> accs;
    for (const auto& m : members) accs.push_back(m.second);
    std::vector<double> cuts;
    for (double c : options.difficulty_cuts) cuts.push_back(quantile_type7(accs, c));
    for (const auto& [id, acc] : members) {
      std::size_t level = 0;
      for (double v : cuts) level += acc > v ? 1 : 0;
      difficulty[id] = level;
    }
  }

  struct Resolved {
    const SetPredictionRecord* record;
    LabelIndex truth;
    std::size_t difficulty;
  };
  std::vector<Resolved> resolved;
  resolved.reserve(records.size());
  for (const auto& r : records) {
    auto it = truth.find(r.instance_id);
    if (it == truth.end() || !difficulty.contains(r.instance_id)) {
      throw Error(ErrorCode::OrphanPrediction, fmt::format("set record for unknown instance '{}'", r.instance_id));
    }
    resolved.push_back({&r, it->second, difficulty.at(r.instance_id)});
  }

  // Competence: per label, participants ranked by their accuracy on that
  // label's records; the top half is "high".
  std::map<std::pair<LabelIndex, std::string>, std::pair<std::size_t, std::size_t>> skill;
  for (const auto& r : resolved) {
    auto& [hits, total] = skill[{r.truth, r.record->participant_id}];
    hits += r.record->human_prediction == r.truth ? 1 : 0;
    ++total;
  }
  std::map<std::pair<LabelIndex, std::string>, bool> high;
  for (LabelIndex y = 0; y < L; ++y) {
    std::vector<std::pair<double, std::string>> ranked;
    for (auto it = skill.lower_bound({y, std::string()}); it != skill.end() && it->first.first == y; ++it) {
      ranked.emplace_back(static_cast<double>(it->second.first) / static_cast<double>(it->second.second),
                          it->first.second);
    }
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t i = 0; i < ranked.size(); ++i) high[{y, ranked[i].second}] = i < ranked.size() / 2;
  }

  const std::size_t levels = options.difficulty_cuts.size() + 1;
  const std::vector<std::string> groups = {"all", "low", "high"};
  // counts[label][level][group][size] = (successes, total)
  std::vector<std::vector<std::vector<std::vector<std::pair<std::size_t, std::size_t>>>>> counts(
      L, std::vector(levels, std::vector(groups.size(), std::vector<std::pair<std::size_t, std::size_t>>(L + 1))));

  VerificationReport report;
  for (const auto& r : resolved) {
    const auto& members = r.record->set_members;
    if (std::find(members.begin(), members.end(), r.truth) == members.end()) {
      ++report.records_excluded;
      continue;
    }
    ++report.records_used;
    const std::size_t k = members.size();
    const std::size_t ok = r.record->human_prediction == r.truth ? 1 : 0;
    const std::size_t group = high.at({r.truth, r.record->participant_id}) ? 2 : 1;
    for (std::size_t g : {std::size_t{0}, group}) {
      auto& cell = counts[r.truth][r.difficulty][g][k];
      cell.first += ok;
      ++cell.second;
    }
  }

  for (LabelIndex y = 0; y < L; ++y) {
    for (std::size_t d = 0; d < levels; ++d) {
      for (std::size_t g = 0; g < groups.size(); ++g) {
        MonotonicityCell cell;
        cell.label = dataset.label_space.name(y);
        cell.difficulty = d;
        cell.competence = groups[g];
        for (std::size_t k = 2; k <= L; ++k) {
          const auto [hits, total] = counts[y][d][g][k];
          SizeCell sc;
          sc.set_size = k;
          sc.count = total;
          sc.successes = hits;
          if (total >= options.min_count) {
            const double p = static_cast<double>(hits) / static_cast<double>(total);
            sc.success_probability = p;
            sc.standard_error = std::sqrt(p * (1.0 - p) / static_cast<double>(total));
          } else {
            ++report.empty_cells;
          }
          cell.sizes.push_back(sc);
        }
        report.cells.push_back(std::move(cell));
      }
    }
  }
  return report;
}

std::size_t count_monotonicity_violations(const VerificationReport& report, double z) {
  std::size_t violations = 0;
  for (const auto& cell : report.cells) {
    const SizeCell* prev = nullptr;
    for (const auto& sc : cell.sizes) {
      if (!sc.success_probability) continue;
      if (prev != nullptr) {
        const double se = std::sqrt(*prev->standard_error * *prev->standard_error +
                                    *sc.standard_error * *sc.standard_error);
        if (*sc.success_probability > *prev->success_probability + z * se) ++violations;
      }
      prev = &sc;
    }
  }
  return violations;
}

std::string cell_file_name(const MonotonicityCell& cell) {
  std::string label = cell.label;
  for (char& c : label) {
    if (c == '/' || c == '\\' || c == ' ') c = '_';
  }
  return fmt::format("{}_q{}_{}.csv", label, cell.difficulty + 1, cell.competence);
}

void write_monotonicity(const std::filesystem::path& dir, const VerificationReport& report) {
  std::filesystem::create_directories(dir);
  for (const auto& cell : report.cells) {
    const auto path = dir / cell_file_name(cell);
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::Io, fmt::format("cannot write {}", path.string()));
    out << "set_size,count,successes,success_probability,standard_error\n";
    for (const auto& sc : cell.sizes) {
      out << sc.set_size << ',' << sc.count << ',' << sc.successes << ','
          << (sc.success_probability ? csv::format_double(*sc.success_probability) : "") << ','
          << (sc.standard_error ? csv::format_double(*sc.standard_error) : "") << '\n';
    }
  }
}

nlohmann::json to_json(const VerificationReport& report, double z) {
  nlohmann::json j;
  j["records_used"] = report.records_used;
  j["records_excluded"] = report.records_excluded;
  j["cells"] = report.cells.size();
  j["empty_size_cells"] = report.empty_cells;
  j["violation_z"] = z;
  j["violations"] = count_monotonicity_violations(report, z);
  return j;
}

}  // namespace harm
