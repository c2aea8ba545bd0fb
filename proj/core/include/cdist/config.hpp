#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cdist/cascade.hpp"
#include "cdist/datagen.hpp"
#include "cdist/distill.hpp"
#include "cdist/eval.hpp"
#include "cdist/network.hpp"

namespace cdist {

// Everything one experiment run needs, resolved from a flat key=value file.
// Unknown keys are rejected with their line number; every value has a usable
// default so configs only state what they change.
struct ExperimentConfig {
  MixtureSpec data;  // data.seed is derived from `seed` at run time

  std::string teacher_mode = "trained";  // trained | oracle
  double teacher_eta = 1.0;
  std::vector<int> teacher_widths{16, 64, 64, 10};
  TrainSpec teacher_train{0.1, 20, 32, 0};

  std::vector<int> student_widths{16, 8, 10};
  TrainSpec student_train{0.1, 20, 32, 0};

  DistillConfig distill;
  std::string distill_tag;  // defaults to the lowercased variant name

  DelegationPolicy::Kind sweep_policy = DelegationPolicy::Kind::kMarginBased;
  std::vector<double> rho_grid{0.0, 0.2, 0.4, 0.6, 0.8, 1.0, 1.01};
  std::string sweep_test_set = "balanced";  // balanced | imbalanced

  std::string eval_in_domain = "class";  // class | margin
  double eval_margin_threshold = 0.4;
  double report_rho = 0.4;

  CostModel cost;

  std::string out_dir = "runs/out";
  std::uint64_t seed = 1;
};

// Parses a config file. Errors carry `path:line:` prefixes.
ExperimentConfig load_config(const std::string& path);

// Applies semantic checks that span keys (width endpoints, mode names, grid
// ordering, ...). Throws std::invalid_argument naming the offending key.
void validate_config(const ExperimentConfig& cfg);

// Fixed-order key=value rendering of the resolved config; parsing it back
// reproduces the same configuration byte for byte.
std::string serialize_config(const ExperimentConfig& cfg);

}  // namespace cdist
