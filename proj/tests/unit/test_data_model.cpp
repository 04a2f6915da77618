#include <doctest.h>

#include <fstream>
#include <set>

#include "harmctl/data_model.hpp"
#include "harmctl/error.hpp"
#include "helpers.hpp"

using namespace harm;

namespace {

std::filesystem::path write_file(const std::filesystem::path& dir, const std::string& name, const std::string& text) {
  auto p = dir / name;
  std::ofstream(p) << text;
  return p;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::Io;
}

}  // namespace

TEST_CASE("label space rejects duplicates and tiny spaces") {
  CHECK(code_of([] { LabelSpace({"a"}); }) == ErrorCode::ConfigInvalid);
  CHECK(code_of([] { LabelSpace({"a", "a"}); }) == ErrorCode::ConfigInvalid);
  LabelSpace ls({"dog", "cat"});
  CHECK(ls.find("cat") == 1u);
  CHECK_FALSE(ls.find("zebra").has_value());
}

TEST_CASE("load_scores echoes a one-row file") {
  auto dir = scratch_dir("scores1");
  auto p = write_file(dir, "s.csv", "instance_id,noise,a,b,c\nimg_1,80,0.5,0.3,0.2\n");
  auto labels = read_label_space(p);
  auto table = load_scores(p, labels);
  REQUIRE(table.size() == 1);
  CHECK(table.at("img_1").scores == std::vector<double>{0.5, 0.3, 0.2});
  CHECK(table.at("img_1").noise == 80);
}

TEST_CASE("load_scores errors") {
  auto dir = scratch_dir("scores2");
  auto high = write_file(dir, "high.csv", "instance_id,noise,a,b\nx,80,1.2,0.1\n");
  CHECK(code_of([&] { load_scores(high, read_label_space(high)); }) == ErrorCode::ScoreOutOfRange);
  auto dup = write_file(dir, "dup.csv", "instance_id,noise,a,b\nimg_7,80,0.5,0.5\nimg_7,80,0.4,0.6\n");
  CHECK(code_of([&] { load_scores(dup, read_label_space(dup)); }) == ErrorCode::DuplicateInstance);
  auto missing = write_file(dir, "missing.csv", "instance_id,noise,a\nx,80,0.5\n");
  CHECK(code_of([&] { load_scores(missing, LabelSpace({"a", "b"})); }) == ErrorCode::MissingColumn);
  // tiny overshoot is clamped rather than rejected
  auto slack = write_file(dir, "slack.csv", "instance_id,noise,a,b\nx,80,1.0000000001,-0.0000000001\n");
  auto t = load_scores(slack, read_label_space(slack));
  CHECK(t.at("x").scores == std::vector<double>{1.0, 0.0});
  auto sum = write_file(dir, "sum.csv", "instance_id,noise,a,b\nx,80,0.5,0.4\n");
  CHECK_NOTHROW(load_scores(sum, read_label_space(sum)));
  LoadOptions strict;
  strict.strict = true;
  CHECK(code_of([&] { load_scores(sum, read_label_space(sum), strict); }) == ErrorCode::ScoreOutOfRange);
}

TEST_CASE("load_human_predictions resolves names") {
  auto dir = scratch_dir("humans");
  LabelSpace labels({"cat", "dog"});
  auto ok = write_file(dir, "ok.csv", "instance_id,participant_id,true_label,prediction\nimg_1,p9,cat,dog\n");
  auto preds = load_human_predictions(ok, labels);
  REQUIRE(preds.size() == 1);
  CHECK(preds[0].prediction == 1u);
  auto bad = write_file(dir, "bad.csv", "instance_id,participant_id,true_label,prediction\nimg_1,p9,cat,zebra\n");
  CHECK(code_of([&] { load_human_predictions(bad, labels); }) == ErrorCode::UnknownLabel);
  auto empty = write_file(dir, "empty.csv", "instance_id,participant_id,true_label,prediction\n");
  CHECK(load_human_predictions(empty, labels).empty());
}

TEST_CASE("set prediction records must contain their prediction") {
  auto dir = scratch_dir("sets");
  LabelSpace labels({"cat", "dog", "owl"});
  auto ok = write_file(dir, "ok.csv", "instance_id,participant_id,set_members,prediction\ni,p,cat|owl,owl\n");
  auto recs = load_set_predictions(ok, labels);
  REQUIRE(recs.size() == 1);
  CHECK(recs[0].set_members == std::vector<LabelIndex>{0, 2});
  auto bad = write_file(dir, "bad.csv", "instance_id,participant_id,set_members,prediction\ni,p,cat|owl,dog\n");
  CHECK(code_of([&] { load_set_predictions(bad, labels); }) == ErrorCode::InvalidRecord);
  auto dup = write_file(dir, "dup.csv", "instance_id,participant_id,set_members,prediction\ni,p,cat|cat,cat\n");
  CHECK(code_of([&] { load_set_predictions(dup, labels); }) == ErrorCode::InvalidRecord);
}

TEST_CASE("join computes per-instance accuracy and filters noise") {
  LabelSpace labels({"cat", "dog"});
  ScoreTable scores;
  scores["a"] = {80, {0.6, 0.4}};
  scores["b"] = {110, {0.3, 0.7}};
  std::vector<HumanPrediction> preds = {
      {"a", "p1", 0, 0}, {"a", "p2", 0, 0}, {"a", "p3", 0, 1}, {"b", "p1", 1, 1}};
  auto truths = true_labels_from(preds);
  auto d = join_dataset(labels, scores, preds, truths);
  CHECK(d.size() == 4);
  CHECK(d.per_instance_accuracy.at("a") == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  auto f = join_dataset(labels, scores, preds, truths, 110);
  CHECK(f.size() == 1);
  CHECK(f.samples[0].instance_id == "b");

  std::vector<HumanPrediction> orphan = {{"zzz", "p1", 0, 0}};
  CHECK(code_of([&] { join_dataset(labels, scores, orphan, true_labels_from(orphan)); }) == ErrorCode::OrphanPrediction);
  std::vector<HumanPrediction> clash = {{"a", "p1", 0, 0}, {"a", "p2", 1, 0}};
  CHECK(code_of([&] { true_labels_from(clash); }) == ErrorCode::InconsistentLabel);
}

TEST_CASE("split is by instance, sized by rounding, deterministic") {
  std::mt19937_64 gen(1);
  auto rows = oracle::random_rows(1200, 4, 0.7, gen);
  auto d = dataset_of(rows);
  auto [c, t] = split_dataset(d, 0.1, 42);
  CHECK(c.instance_ids().size() == 120);
  CHECK(t.instance_ids().size() == 1080);
  auto [c2, t2] = split_dataset(d, 0.1, 42);
  CHECK(c == c2);
  CHECK(t == t2);

  std::vector<oracle::Row> ten(rows.begin(), rows.begin() + 10);
  auto small = dataset_of(ten);
  auto [a, b] = split_dataset(small, 0.5, 3);
  auto ia = a.instance_ids(), ib = b.instance_ids();
  CHECK(ia.size() == 5);
  CHECK(ib.size() == 5);
  std::set<std::string> all(ia.begin(), ia.end());
  for (const auto& id : ib) CHECK(all.insert(id).second);
  CHECK(all.size() == 10);

  Dataset empty;
  CHECK(code_of([&] { split_dataset(empty, 0.1, 1); }) == ErrorCode::EmptyDataset);
}

TEST_CASE("split property: partition for many seeds, instance never straddles") {
  LabelSpace labels({"a", "b", "c"});
  std::vector<Sample> samples;
  for (int i = 0; i < 40; ++i) {
    for (int p = 0; p < 3; ++p) {
      samples.push_back(sample_of({0.5, 0.3, 0.2}, 0, (i + p) % 3 == 0 ? 0 : 1, fmt::format("i{}", i)));
      samples.back().participant_id = fmt::format("p{}", p);
    }
  }
  auto d = make_dataset(labels, samples);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto [c, t] = split_dataset(d, 0.3, seed);
    CHECK(c.size() + t.size() == d.size());
    std::set<std::string> ci;
    for (const auto& s : c.samples) ci.insert(s.instance_id);
    for (const auto& s : t.samples) CHECK_FALSE(ci.contains(s.instance_id));
    // accuracies of the halves average back, weighted by predictions
    double total = 0.0;
    for (const auto* part : {&c, &t}) {
      for (const auto& id : part->instance_ids()) total += part->per_instance_accuracy.at(id) * 3.0;
    }
    double direct = 0.0;
    for (const auto& s : d.samples) direct += s.human_correct() ? 1.0 : 0.0;
    CHECK(total == doctest::Approx(direct));
  }
}

TEST_CASE("ingestion round trip") {
  auto d = load_dataset(fixture("scores_small.csv"), fixture("humans_small.csv"));
  auto dir = scratch_dir("roundtrip");
  write_scores(dir / "scores.csv", d.label_space, score_table_of(d));
  write_human_predictions(dir / "humans.csv", d);
  auto back = load_dataset(dir / "scores.csv", dir / "humans.csv");
  CHECK(back == d);
}
