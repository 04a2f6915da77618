#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "harmctl/data_model.hpp"
#include "../oracles.hpp"

inline harm::Dataset dataset_of(const std::vector<oracle::Row>& rows) {
  std::vector<harm::Sample> samples;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    harm::Sample s;
    s.instance_id = fmt::format("r{:05}", i);
    s.scores = rows[i].scores;
    s.true_label = rows[i].truth;
    s.human_prediction = rows[i].alone;
    s.participant_id = "p0";
    samples.push_back(s);
  }
  return harm::make_dataset(harm::numbered_labels(rows.front().scores.size()), std::move(samples));
}

inline harm::Sample sample_of(std::vector<double> scores, std::size_t truth, std::size_t alone,
                              std::string id = "x") {
  harm::Sample s;
  s.instance_id = std::move(id);
  s.scores = std::move(scores);
  s.true_label = truth;
  s.human_prediction = alone;
  return s;
}

inline std::filesystem::path fixture(const std::string& name) {
  return std::filesystem::path(HARMCTL_FIXTURES) / name;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("harmctl_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}
