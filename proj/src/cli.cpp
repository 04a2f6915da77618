#include "harmctl/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "csv.hpp"
#include "harmctl/calibration.hpp"
#include "harmctl/error.hpp"
#include "harmctl/experiments.hpp"
#include "harmctl/expert_mnl.hpp"
#include "harmctl/harm_risk.hpp"
#include "harmctl/parallel.hpp"
#include "harmctl/scm_oracle.hpp"

namespace harm::cli {

namespace {

using nlohmann::json;

constexpr std::uint64_t kDefaultSeed = 7;

struct WorldArgs {
  std::string config_path;
  std::size_t labels = 16;
  std::size_t n_instances = 1000;
  std::size_t experts = 1;
  std::string regime = "cf";
  double peak = 2.5;
  double base = 0.1;
  std::vector<double> success_profile;
  std::vector<double> offsets;
  std::vector<double> expert_q;
};

struct DataArgs {
  std::string scores;
  std::string humans;
  std::string world_dir;
  bool synthetic = false;
  int noise = 0;
  bool strict = false;
};

struct PredictorArgs {
  std::string kind = "threshold";
  double saps_w = 0.0;
  std::vector<double> w_grid = kDefaultSapsWGrid;
  double w_lambda = 1.0;
  double lambda_max = kDefaultSapsLambdaMax;
  std::uint64_t u_seed = 0;
  double validation_frac = 0.1;
};

struct Args {
  std::string config;
  std::uint64_t seed = kDefaultSeed;
  std::size_t jobs = default_jobs();
  std::string out_dir;
  WorldArgs world;
  DataArgs data;
  PredictorArgs predictor;
  std::string lambda_grid;
  double lambda_step = 0.0;
  double alpha = 0.1;
  std::string mode = "counterfactual";
  double alpha_prime = 0.0;
  bool auto_alpha_prime = false;
  std::string alpha_prime_policy = "pooled";
  double alpha_prime_step = 0.001;
  double calib_frac = 0.1;
  std::size_t n = 0;
  std::size_t repetitions = 50;
  std::vector<double> quantile_cuts = {0.5};
  double epsilon = 1e-6;
  // simulate
  std::size_t n_calib = 500;
  std::size_t n_test = 2000;
  std::string target;
  std::string dump_world;
  // verify-monotonicity
  std::string sets;
  std::size_t min_count = 5;
  double z = 2.0;
};

void add_common(CLI::App* sub, Args& a) {
  sub->add_option("--config", a.config, "JSON file of flat option keys; flags override it");
  sub->add_option("--seed", a.seed, "Master seed (falls back to HARMCTL_SEED, then 7)");
  sub->add_option("--jobs", a.jobs, "Worker threads")->check(CLI::PositiveNumber);
}

void add_world(CLI::App* sub, Args& a) {
  auto& w = a.world;
  sub->add_option("--world-config", w.config_path, "JSON world config (keys as in config.json of a dump)");
  sub->add_option("--labels", w.labels, "Synthetic label count");
  sub->add_option("--n-instances", w.n_instances, "Synthetic instance count");
  sub->add_option("--experts", w.experts, "Synthetic experts per instance");
  sub->add_option("--regime", w.regime, "cf | interv");
  sub->add_option("--peak", w.peak, "Dirichlet concentration on the peak label");
  sub->add_option("--base", w.base, "Dirichlet concentration elsewhere");
  sub->add_option("--success-profile", w.success_profile, "q(1..L), comma separated")->delimiter(',');
  sub->add_option("--offsets", w.offsets, "Success-window offsets per set size")->delimiter(',');
  sub->add_option("--expert-q", w.expert_q, "Per-expert q multipliers")->delimiter(',');
}

void add_data(CLI::App* sub, Args& a) {
  auto& d = a.data;
  sub->add_option("--scores", d.scores, "Classifier scores CSV");
  sub->add_option("--humans", d.humans, "Human-alone predictions CSV");
  sub->add_option("--noise", d.noise, "Keep only rows with this noise level");
  sub->add_flag("--strict", d.strict, "Check that scores sum to 1");
  sub->add_option("--world", d.world_dir, "Load a dumped synthetic world");
  sub->add_flag("--synthetic", d.synthetic, "Generate a synthetic world from the world options");
  add_world(sub, a);
}

void add_predictor(CLI::App* sub, Args& a) {
  auto& p = a.predictor;
  sub->add_option("--predictor", p.kind, "threshold | saps");
  sub->add_option("--saps-w", p.saps_w, "Fixed SAPS weight (0 selects it on a validation split)");
  sub->add_option("--w-grid,--saps-w-grid", p.w_grid, "SAPS w candidates")->delimiter(',');
  sub->add_option("--w-lambda", p.w_lambda, "Lambda at which SAPS w is selected");
  sub->add_option("--lambda-max", p.lambda_max, "SAPS lambda domain maximum");
  sub->add_option("--u-seed", p.u_seed, "Seed of the per-instance SAPS uniform");
  sub->add_option("--validation-frac", p.validation_frac, "SAPS validation fraction");
  sub->add_option("--lambda-grid", a.lambda_grid, "start:stop:step or comma list");
  sub->add_option("--lambda-step", a.lambda_step, "Grid 0:max:step when --lambda-grid is absent (0 = default)")
      ->check(CLI::NonNegativeNumber);
}

void add_calibration(CLI::App* sub, Args& a) {
  sub->add_option("--alpha", a.alpha, "Harm bound");
  sub->add_option("--mode", a.mode, "counterfactual | interventional");
  sub->add_option("--alpha-prime", a.alpha_prime, "Fixed alpha' for interventional mode");
  sub->add_option("--alpha-prime-step", a.alpha_prime_step, "alpha' grid step");
  sub->add_option("--calib-frac", a.calib_frac, "Calibration split fraction");
}

WorldConfig world_config(const Args& a) {
  WorldConfig c;
  if (!a.world.config_path.empty()) {
    std::ifstream in(a.world.config_path);
    if (!in) throw Error(ErrorCode::Io, fmt::format("cannot open {}", a.world.config_path));
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw Error(ErrorCode::ConfigInvalid, fmt::format("{}: {}", a.world.config_path, e.what()));
    }
    c = world_config_from_json(j);
  } else {
    c.labels = a.world.labels;
    c.n_instances = a.world.n_instances;
    c.n_experts = a.world.experts;
    c.regime = parse_regime(a.world.regime);
    c.score_model.peak_concentration = a.world.peak;
    c.score_model.base_concentration = a.world.base;
    c.success_profile = a.world.success_profile;
    c.offsets = a.world.offsets;
    c.expert_q_multiplier = a.world.expert_q;
  }
  c.seed = a.seed;
  return c.resolved();
}

Dataset load_input(const Args& a, const CLI::App* sub) {
  const auto& d = a.data;
  if (!d.world_dir.empty()) return read_world(d.world_dir).observational_dataset();
  if (d.synthetic) return generate_world(world_config(a)).observational_dataset();
  if (d.scores.empty() || d.humans.empty()) {
    throw Error(ErrorCode::ConfigInvalid, "need --scores and --humans, --world, or --synthetic");
  }
  std::optional<int> noise;
  if (sub->count("--noise") > 0) noise = d.noise;
  LoadOptions options;
  options.strict = d.strict;
  return load_dataset(d.scores, d.humans, noise, options);
}

PredictorSpec predictor_spec(const Args& a) {
  PredictorSpec spec;
  spec.kind = parse_predictor_kind(a.predictor.kind);
  if (a.predictor.saps_w > 0.0) spec.w = a.predictor.saps_w;
  spec.w_grid = a.predictor.w_grid;
  spec.w_lambda = a.predictor.w_lambda;
  spec.lambda_max = a.predictor.lambda_max;
  spec.u_seed = a.predictor.u_seed;
  spec.validation_fraction = a.predictor.validation_frac;
  return spec;
}

// A single predictor for commands that do not run repetitions; SAPS needs
// an explicit w there (default 0.1).
SetPredictor single_predictor(const Args& a) {
  const auto spec = predictor_spec(a);
  if (spec.kind == PredictorKind::Threshold) return SetPredictor::threshold();
  return SetPredictor::saps(spec.w.value_or(SapsParams{}.w), spec.lambda_max, spec.u_seed);
}

std::vector<double> grid_of(const Args& a) {
  if (!a.lambda_grid.empty()) return parse_lambda_grid(a.lambda_grid);
  const auto kind = parse_predictor_kind(a.predictor.kind);
  const double top = kind == PredictorKind::Threshold ? 1.0 : a.predictor.lambda_max;
  if (a.lambda_step > 0.0) return parse_lambda_grid(fmt::format("0:{}:{}", top, a.lambda_step));
  if (kind == PredictorKind::Saps && top != kDefaultSapsLambdaMax) {
    return parse_lambda_grid(fmt::format("0:{}:{}", top, top / 1000.0));
  }
  return default_lambda_grid(kind);
}

json resolved_options(const CLI::App* sub) {
  json j = json::object();
  for (const CLI::Option* opt : sub->get_options()) {
    const std::string name = opt->get_single_name();
    if (name.empty() || name == "help" || name == "config") continue;
    std::string key = name;
    for (char& c : key) c = c == '-' ? '_' : c;
    if (opt->get_items_expected_max() == 0) {
      j[key] = opt->count() > 0;
      continue;
    }
    if (opt->count() > 0) {
      const auto& results = opt->results();
      std::string joined;
      for (std::size_t i = 0; i < results.size(); ++i) joined += (i ? "," : "") + results[i];
      j[key] = joined;
    } else {
      // list defaults print as "{}" or "[a,b]"; store them as flag text
      std::string d = opt->get_default_str();
      if (d == "{}") d.clear();
      if (d.size() >= 2 && d.front() == '[' && d.back() == ']') d = d.substr(1, d.size() - 2);
      j[key] = d;
    }
  }
  return j;
}

json provenance(const CLI::App* sub, const Args& a, const std::string& seed_source) {
  json j;
  j["tool"] = "harmctl";
  j["version"] = kVersion;
  j["command"] = sub->get_name();
  j["config"] = resolved_options(sub);
  j["seed"] = a.seed;
  j["seed_source"] = seed_source;
  return j;
}

json interval_json(const HarmControlResult& r) {
  json j;
  j["mode"] = to_string(r.mode);
  j["alpha"] = r.alpha;
  j["alpha_prime"] = r.alpha_prime ? json(*r.alpha_prime) : json(nullptr);
  j["lower"] = r.lower;
  j["upper"] = r.upper;
  j["upper_inclusive"] = r.upper_inclusive;
  j["feasible"] = r.feasible;
  return j;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, fmt::format("cannot write {}", path.string()));
  out << text;
}

void emit_report(const Args& a, const json& report) {
  if (!a.out_dir.empty()) write_text(std::filesystem::path(a.out_dir) / "report.json", report.dump(2) + "\n");
}

// Writes CSV text to <out>/<name> when --out is set, otherwise to stdout.
void emit_csv(const Args& a, const std::string& name, const std::string& text, std::ostream& out) {
  if (a.out_dir.empty()) {
    out << text;
  } else {
    write_text(std::filesystem::path(a.out_dir) / name, text);
  }
}

int cmd_calibrate(const Args& a, const CLI::App* sub, const json& prov, std::ostream& out) {
  Dataset data = load_input(a, sub);
  if (sub->count("--calib-frac") > 0) data = split_dataset(data, a.calib_frac, a.seed).first;
  if (a.n > 0) {
    if (a.n > data.size()) throw Error(ErrorCode::InsufficientData, fmt::format("--n {} exceeds {} samples", a.n, data.size()));
    data.samples.resize(a.n);
  }
  const SetPredictor predictor = single_predictor(a);
  const ControlMode mode = parse_control_mode(a.mode);
  const RiskCurve harm = harm_curve(data, predictor);
  HarmControlResult result;
  if (mode == ControlMode::Counterfactual) {
    result = harm_controlling_set_cf(harm, a.alpha);
  } else {
    const RiskCurve loss = benefit_loss_curve(data, predictor);
    const bool fixed = sub->count("--alpha-prime") > 0 && !a.auto_alpha_prime;
    const double ap = fixed ? a.alpha_prime : select_alpha_prime(harm, loss, a.alpha, a.alpha_prime_step);
    result = harm_controlling_set_interv(harm, loss, a.alpha, ap);
  }
  json j;
  j["result"] = interval_json(result);
  j["n"] = data.size();
  j["predictor"] = to_string(predictor.kind());
  if (predictor.kind() == PredictorKind::Saps) j["w"] = predictor.w();
  j["provenance"] = prov;
  out << j.dump(2) << '\n';
  emit_report(a, j);
  return 0;
}

int cmd_tradeoff(const Args& a, const CLI::App* sub, const json& prov, std::ostream& out) {
  const Dataset data = load_input(a, sub);
  TradeoffOptions o;
  o.alpha = a.alpha;
  o.mode = parse_control_mode(a.mode);
  o.alpha_prime_policy = parse_alpha_prime_policy(a.alpha_prime_policy);
  if (sub->count("--alpha-prime") > 0 && sub->count("--alpha-prime-policy") == 0) {
    o.alpha_prime_policy = AlphaPrimePolicy::Fixed;
  }
  if (a.auto_alpha_prime) o.alpha_prime_policy = AlphaPrimePolicy::Auto;
  o.alpha_prime = a.alpha_prime;
  o.alpha_prime_step = a.alpha_prime_step;
  o.lambda_grid = grid_of(a);
  o.repetitions = a.repetitions;
  o.calib_fraction = a.calib_frac;
  o.seed = a.seed;
  o.quantile_cuts = a.quantile_cuts;
  o.epsilon = a.epsilon;
  o.jobs = a.jobs;
  o.predictor = predictor_spec(a);
  const TradeoffReport report = run_tradeoff(data, o);

  const std::filesystem::path dir = a.out_dir.empty() ? std::filesystem::path(".") : std::filesystem::path(a.out_dir);
  std::filesystem::create_directories(dir);
  write_tradeoff_csv(dir / "tradeoff.csv", report);
  json j = to_json(report);
  j["predictor_spec"] = to_json(o.predictor);
  j["provenance"] = prov;
  write_text(dir / "report.json", j.dump(2) + "\n");
  json summary;
  summary["tradeoff_csv"] = (dir / "tradeoff.csv").string();
  summary["report_json"] = (dir / "report.json").string();
  summary["rows"] = report.rows.size();
  summary["human_alone_accuracy"] = report.human_alone_accuracy.mean;
  summary["alpha_prime"] = report.alpha_prime ? json(*report.alpha_prime) : json(nullptr);
  out << summary.dump(2) << '\n';
  return 0;
}

int cmd_risk(const Args& a, const CLI::App* sub, const json& prov, std::ostream& out) {
  const Dataset data = load_input(a, sub);
  const SetPredictor predictor = single_predictor(a);
  const RiskCurve harm = harm_curve(data, predictor);
  const RiskCurve loss = benefit_loss_curve(data, predictor);
  std::ostringstream csv_out;
  csv_out << "lambda,H_hat,G_hat,lower,upper\n";
  for (double lambda : grid_of(a)) {
    const double h = harm(lambda);
    const double g = loss(lambda);
    csv_out << csv::format_double(lambda) << ',' << csv::format_double(h) << ',' << csv::format_double(g) << ','
            << csv::format_double(h) << ','
            << csv::format_double(static_cast<double>(harm.count_at(lambda) + loss.count_at(lambda)) /
                                  static_cast<double>(data.size()))
            << '\n';
  }
  emit_csv(a, "risk.csv", csv_out.str(), out);
  emit_report(a, json{{"provenance", prov}, {"n", data.size()}});
  return 0;
}

int cmd_accuracy(const Args& a, const CLI::App* sub, const json& prov, std::ostream& out) {
  const Dataset data = load_input(a, sub);
  const SetPredictor predictor = single_predictor(a);
  const DifficultyStrata strata = stratify_difficulty(data, a.quantile_cuts);
  const auto [calib, test] = split_dataset(data, a.calib_frac, a.seed);
  const MnlMixture mixture = fit_confusion(calib, strata, a.epsilon);
  std::ostringstream csv_out;
  csv_out << "lambda,A\n";
  for (double lambda : grid_of(a)) {
    csv_out << csv::format_double(lambda) << ','
            << csv::format_double(estimate_accuracy(mixture, strata, test, predictor, lambda)) << '\n';
  }
  emit_csv(a, "accuracy.csv", csv_out.str(), out);
  emit_report(a, json{{"provenance", prov}, {"n_calib", calib.size()}, {"n_test", test.size()}});
  return 0;
}

int cmd_fit_mnl(const Args& a, const CLI::App* sub, const json& prov, std::ostream& out) {
  Dataset data = load_input(a, sub);
  const DifficultyStrata strata = stratify_difficulty(data, a.quantile_cuts);
  if (sub->count("--calib-frac") > 0) data = split_dataset(data, a.calib_frac, a.seed).first;
  const MnlMixture mixture = fit_confusion(data, strata, a.epsilon);
  json j = mixture.to_json(data.label_space);
  j["quantile_cuts"] = strata.quantile_cuts;
  j["cut_values"] = strata.cut_values;
  j["n"] = data.size();
  j["provenance"] = prov;
  out << j.dump(2) << '\n';
  emit_report(a, j);
  return 0;
}

int cmd_simulate(const Args& a, const CLI::App* sub, const json& prov, std::ostream& out) {
  WorldConfig config = world_config(a);
  TrialOptions o;
  if (a.target.empty()) {
    o.target = config.regime == Regime::CounterfactualMonotone ? TrialTarget::Harm : TrialTarget::Interval;
  } else if (a.target == "harm") {
    o.target = TrialTarget::Harm;
  } else if (a.target == "benefit_loss" || a.target == "benefit-loss") {
    o.target = TrialTarget::BenefitLoss;
  } else if (a.target == "interval") {
    o.target = TrialTarget::Interval;
  } else {
    throw Error(ErrorCode::ConfigInvalid, fmt::format("unknown target '{}'", a.target));
  }
  o.alpha = a.alpha;
  o.n_calib = a.n_calib;
  o.n_test = a.n_test;
  o.repetitions = a.repetitions;
  o.alpha_prime_step = a.alpha_prime_step;
  o.jobs = a.jobs;
  o.predictor = single_predictor(a);
  if (o.target == TrialTarget::Interval || config.regime == Regime::InterventionalOnly) o.lambda_grid = grid_of(a);
  (void)sub;
  if (!a.dump_world.empty()) {
    WorldConfig dump = config;
    dump.n_instances = o.n_calib + o.n_test;
    dump.seed = derive_seed(config.seed, 0);
    write_world(a.dump_world, generate_world(dump));
  }
  const CoverageStats stats = coverage_trial(config, o);
  json j = to_json(stats);
  j["world"] = to_json(config);
  j["provenance"] = prov;
  out << j.dump(2) << '\n';
  emit_report(a, j);
  return 0;
}

int cmd_verify(const Args& a, const CLI::App* sub, const json& prov, std::ostream& out) {
  if (a.sets.empty()) throw Error(ErrorCode::ConfigInvalid, "verify-monotonicity needs --sets");
  const Dataset data = load_input(a, sub);
  const auto records = load_set_predictions(a.sets, data.label_space);
  MonotonicityOptions o;
  o.min_count = a.min_count;
  const VerificationReport report = verify_interventional_monotonicity(records, data, o);
  const std::filesystem::path dir = a.out_dir.empty() ? std::filesystem::path(".") : std::filesystem::path(a.out_dir);
  write_monotonicity(dir / "monotonicity", report);
  json j = to_json(report, a.z);
  j["provenance"] = prov;
  write_text(dir / "report.json", j.dump(2) + "\n");
  out << to_json(report, a.z).dump(2) << '\n';
  return 0;
}

int cmd_coverage(const Args& a, const CLI::App* sub, const json& prov, std::ostream& out) {
  const Dataset data = load_input(a, sub);
  const SetPredictor predictor = single_predictor(a);
  std::ostringstream csv_out;
  csv_out << "lambda,coverage,mean_set_size\n";
  for (const auto& r : coverage_and_size(data, predictor, grid_of(a))) {
    csv_out << csv::format_double(r.lambda) << ',' << csv::format_double(r.coverage) << ','
            << csv::format_double(r.mean_set_size) << '\n';
  }
  emit_csv(a, "coverage.csv", csv_out.str(), out);
  emit_report(a, json{{"provenance", prov}, {"n", data.size()}});
  return 0;
}

// Turns a flat JSON config into option tokens, skipping keys the user also
// passed on the command line. Keys another subcommand understands are
// ignored so one file can serve several commands; unknown keys are errors.
std::vector<std::string> config_tokens(const std::string& path, const std::vector<std::string>& user,
                                       const CLI::App& app, const CLI::App* sub) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, fmt::format("cannot open config {}", path));
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, fmt::format("config {}: {}", path, e.what()));
  }
  if (!j.is_object()) throw Error(ErrorCode::ConfigInvalid, "config must be a flat JSON object");
  auto scalar = [](const json& v) -> std::string {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_float()) return csv::format_double(v.get<double>());
    return v.dump();
  };
  std::vector<std::string> tokens;
  for (const auto& [key, value] : j.items()) {
    std::string flag = "--" + key;
    for (char& c : flag) c = c == '_' ? '-' : c;
    bool given = false;
    for (const auto& u : user) given = given || u == flag || u.rfind(flag + "=", 0) == 0;
    if (given) continue;
    if (sub != nullptr && sub->get_option_no_throw(flag) == nullptr) {
      bool known = false;
      for (const auto* other : app.get_subcommands({})) known = known || other->get_option_no_throw(flag) != nullptr;
      if (!known) throw Error(ErrorCode::ConfigInvalid, fmt::format("unknown config key '{}'", key));
      continue;
    }
    if (value.is_boolean()) {
      if (value.get<bool>()) tokens.push_back(flag);
    } else if (value.is_array()) {
      std::string joined;
      for (std::size_t i = 0; i < value.size(); ++i) joined += (i ? "," : "") + scalar(value[i]);
      tokens.push_back(flag);
      tokens.push_back(joined);
    } else if (value.is_object() || value.is_null()) {
      throw Error(ErrorCode::ConfigInvalid, fmt::format("config key '{}' must be a scalar or a list", key));
    } else {
      tokens.push_back(flag);
      tokens.push_back(scalar(value));
    }
  }
  return tokens;
}

void write_error(std::ostream& err, std::string_view code, int exit_code, const std::string& message) {
  json j;
  j["error"] = code;
  j["message"] = message;
  j["exit_code"] = exit_code;
  err << j.dump() << '\n';
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    Args a;
    CLI::App app{"Calibrate prediction-set decision support under a counterfactual harm bound", "harmctl"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);
    app.option_defaults()->always_capture_default();

    using Handler = int (*)(const Args&, const CLI::App*, const json&, std::ostream&);
    std::vector<std::pair<CLI::App*, Handler>> commands;

    auto* calibrate = app.add_subcommand("calibrate", "Harm-controlling lambda set from calibration data");
    add_common(calibrate, a);
    add_data(calibrate, a);
    add_predictor(calibrate, a);
    add_calibration(calibrate, a);
    calibrate->add_flag("--auto-alpha-prime", a.auto_alpha_prime, "Pick alpha' by longest interval");
    calibrate->add_option("--n", a.n, "Use only the first n calibration samples");
    calibrate->add_option("--out", a.out_dir, "Also write report.json here");
    commands.emplace_back(calibrate, cmd_calibrate);

    auto* tradeoff = app.add_subcommand("tradeoff", "Repeated-split accuracy/harm trade-off");
    add_common(tradeoff, a);
    add_data(tradeoff, a);
    add_predictor(tradeoff, a);
    add_calibration(tradeoff, a);
    tradeoff->add_flag("--auto-alpha-prime", a.auto_alpha_prime, "Per-repetition alpha' selection");
    tradeoff->add_option("--alpha-prime-policy", a.alpha_prime_policy, "fixed | auto | pooled");
    tradeoff->add_option("--repetitions", a.repetitions, "Random splits")->check(CLI::PositiveNumber);
    tradeoff->add_option("--quantile-cuts", a.quantile_cuts, "Difficulty quantiles")->delimiter(',');
    tradeoff->add_option("--epsilon", a.epsilon, "Confusion-matrix smoothing");
    tradeoff->add_option("--out", a.out_dir, "Output directory");
    commands.emplace_back(tradeoff, cmd_tradeoff);

    auto* risk = app.add_subcommand("risk", "Empirical harm and benefit-loss curves");
    add_common(risk, a);
    add_data(risk, a);
    add_predictor(risk, a);
    risk->add_option("--out", a.out_dir, "Output directory (default: CSV on stdout)");
    commands.emplace_back(risk, cmd_risk);

    auto* accuracy = app.add_subcommand("accuracy", "Modelled expert accuracy per lambda");
    add_common(accuracy, a);
    add_data(accuracy, a);
    add_predictor(accuracy, a);
    accuracy->add_option("--calib-frac", a.calib_frac, "Fraction used to fit the expert model");
    accuracy->add_option("--quantile-cuts", a.quantile_cuts, "Difficulty quantiles")->delimiter(',');
    accuracy->add_option("--epsilon", a.epsilon, "Confusion-matrix smoothing");
    accuracy->add_option("--out", a.out_dir, "Output directory (default: CSV on stdout)");
    commands.emplace_back(accuracy, cmd_accuracy);

    auto* fit = app.add_subcommand("fit-mnl", "Fit per-difficulty confusion matrices");
    add_common(fit, a);
    add_data(fit, a);
    fit->add_option("--calib-frac", a.calib_frac, "Fit on a calibration split of this size");
    fit->add_option("--quantile-cuts,--cuts", a.quantile_cuts, "Difficulty quantiles")->delimiter(',');
    fit->add_option("--epsilon", a.epsilon, "Confusion-matrix smoothing");
    fit->add_option("--out", a.out_dir, "Also write report.json here");
    commands.emplace_back(fit, cmd_fit_mnl);

    auto* simulate = app.add_subcommand("simulate", "Monte Carlo coverage in a synthetic world");
    add_common(simulate, a);
    add_world(simulate, a);
    add_predictor(simulate, a);
    simulate->add_option("--alpha", a.alpha, "Harm bound");
    simulate->add_option("--alpha-prime-step", a.alpha_prime_step, "alpha' grid step");
    simulate->add_option("--reps", a.repetitions, "Repetitions")->check(CLI::PositiveNumber);
    simulate->add_option("--n-calib", a.n_calib, "Calibration instances per repetition");
    simulate->add_option("--n-test", a.n_test, "Test instances per repetition");
    simulate->add_option("--target", a.target, "harm | benefit_loss | interval");
    simulate->add_option("--dump-world", a.dump_world, "Write the first repetition's world here");
    simulate->add_option("--out", a.out_dir, "Also write report.json here");
    commands.emplace_back(simulate, cmd_simulate);

    auto* verify = app.add_subcommand("verify-monotonicity", "Success probability per set size");
    add_common(verify, a);
    add_data(verify, a);
    verify->add_option("--sets", a.sets, "Set-prediction records CSV");
    verify->add_option("--min-count", a.min_count, "Smallest reported cell");
    verify->add_option("--z", a.z, "Standard errors tolerated before a rise counts");
    verify->add_option("--out", a.out_dir, "Output directory");
    commands.emplace_back(verify, cmd_verify);

    auto* coverage = app.add_subcommand("coverage", "Coverage and mean set size per lambda");
    add_common(coverage, a);
    add_data(coverage, a);
    add_predictor(coverage, a);
    coverage->add_option("--out", a.out_dir, "Output directory (default: CSV on stdout)");
    commands.emplace_back(coverage, cmd_coverage);

    // Splice config-file tokens in after the subcommand name.
    std::vector<std::string> tokens = args;
    for (std::size_t i = 1; i < args.size(); ++i) {
      std::string path;
      if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
      if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
      if (path.empty()) continue;
      const std::vector<std::string> user(args.begin() + 1, args.end());
      const auto extra = config_tokens(path, user, app, app.get_subcommand_no_throw(args[0]));
      tokens.insert(tokens.begin() + 1, extra.begin(), extra.end());
      break;
    }
    std::vector<std::string> reversed(tokens.rbegin(), tokens.rend());
    try {
      app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
      app.exit(e, out, err);
      return 0;
    } catch (const CLI::CallForAllHelp& e) {
      app.exit(e, out, err);
      return 0;
    } catch (const CLI::CallForVersion&) {
      out << kVersion << '\n';
      return 0;
    } catch (const CLI::ParseError& e) {
      write_error(err, to_string(ErrorCode::ConfigInvalid), exit_code_for(ErrorCode::ConfigInvalid), e.what());
      return exit_code_for(ErrorCode::ConfigInvalid);
    }

    for (auto& [sub, handler] : commands) {
      if (!sub->parsed()) continue;
      std::string seed_source = "flag";
      if (sub->count("--seed") == 0) {
        seed_source = "default";
        if (const char* env = std::getenv("HARMCTL_SEED"); env != nullptr && *env != '\0') {
          const auto v = csv::parse_int(env);
          if (!v || *v < 0) throw Error(ErrorCode::ConfigInvalid, fmt::format("HARMCTL_SEED='{}' is not a seed", env));
          a.seed = static_cast<std::uint64_t>(*v);
          seed_source = "HARMCTL_SEED";
        }
      }
      json prov = provenance(sub, a, seed_source);
      return handler(a, sub, prov, out);
    }
    return 0;
  } catch (const Error& e) {
    write_error(err, to_string(e.code()), exit_code_for(e.code()), e.what());
    return exit_code_for(e.code());
  } catch (const json::exception& e) {
    write_error(err, to_string(ErrorCode::ConfigInvalid), exit_code_for(ErrorCode::ConfigInvalid), e.what());
    return exit_code_for(ErrorCode::ConfigInvalid);
  } catch (const std::exception& e) {
    write_error(err, "Internal", 3, e.what());
    return 3;
  }
}

}  // namespace harm::cli
