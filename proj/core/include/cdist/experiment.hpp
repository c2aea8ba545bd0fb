#pragma once

#include <cstdint>
#include <string>

#include "cdist/config.hpp"

namespace cdist {

// Per-stage streams fed to split_seed so stages can rerun independently.
inline constexpr std::uint64_t kSeedStreamData = 1;
inline constexpr std::uint64_t kSeedStreamTeacherInit = 2;
inline constexpr std::uint64_t kSeedStreamTeacherShuffle = 3;
inline constexpr std::uint64_t kSeedStreamStudentInit = 4;
inline constexpr std::uint64_t kSeedStreamStudentShuffle = 5;

// Artifact layout inside one run directory.
struct RunPaths {
  std::string dir;

  std::string train_data() const { return dir + "/train.data"; }
  std::string test_balanced() const { return dir + "/test_balanced.data"; }
  std::string test_imbalanced() const { return dir + "/test_imbalanced.data"; }
  std::string teacher_net() const { return dir + "/teacher.net"; }
  std::string teacher_scores() const { return dir + "/teacher.scores"; }
  std::string student_net(const std::string& tag) const {
    return dir + "/student_" + tag + ".net";
  }
  std::string tradeoff_stem(const std::string& tag) const {
    return dir + "/tradeoff_" + tag;
  }
  std::string report_csv() const { return dir + "/report.csv"; }
  std::string resolved_config() const { return dir + "/config.resolved"; }
};

void cmd_gen_data(const ExperimentConfig& cfg);
void cmd_train_teacher(const ExperimentConfig& cfg);
void cmd_cache_scores(const ExperimentConfig& cfg);
void cmd_distill(const ExperimentConfig& cfg);
void cmd_sweep(const ExperimentConfig& cfg);
void cmd_report(const ExperimentConfig& cfg);

// Creates the run directory, freezes the resolved config there, and runs one
// of: gen-data, train-teacher, cache-scores, distill, sweep, report.
void run_command(const std::string& command, const ExperimentConfig& cfg);

}  // namespace cdist
