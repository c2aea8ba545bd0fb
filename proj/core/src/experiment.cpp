#include "cdist/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <stdexcept>

#include "cdist/parallel.hpp"
#include "cdist/rng.hpp"

namespace fs = std::filesystem;

namespace cdist {

namespace {

void require_file(const std::string& path, const std::string& what,
                  const std::string& producer) {
  if (!fs::exists(path)) {
    throw std::runtime_error("missing " + what + " at " + path +
                             "; run `cascade-distill " + producer + "` first");
  }
}

MixtureSpec data_spec(const ExperimentConfig& cfg, bool balanced_test) {
  MixtureSpec spec = cfg.data;
  spec.seed = split_seed(cfg.seed, kSeedStreamData);
  spec.balanced_test = balanced_test;
  return spec;
}

Dataset load_train(const ExperimentConfig& cfg, const RunPaths& paths) {
  require_file(paths.train_data(), "training data", "gen-data");
  Dataset data = load_dataset(paths.train_data());
  if (data.num_classes != cfg.data.num_classes || data.dim != cfg.data.dim ||
      data.size() != cfg.data.n_train) {
    throw std::runtime_error(paths.train_data() +
                             " does not match the data.* settings; re-run "
                             "`cascade-distill gen-data`");
  }
  return data;
}

Dataset load_test(const ExperimentConfig& cfg, const RunPaths& paths) {
  const std::string path = cfg.sweep_test_set == "imbalanced"
                               ? paths.test_imbalanced()
                               : paths.test_balanced();
  require_file(path, cfg.sweep_test_set + " test data", "gen-data");
  Dataset data = load_dataset(path);
  if (data.num_classes != cfg.data.num_classes || data.dim != cfg.data.dim ||
      data.size() != cfg.data.n_test) {
    throw std::runtime_error(
        path + " does not match the data.* settings; re-run "
               "`cascade-distill gen-data`");
  }
  return data;
}

std::string trained_teacher_tag(const Network& net) {
  std::string tag = "net";
  for (std::size_t i = 0; i < net.widths().size(); ++i) {
    if (i) tag += 'x';
    tag += std::to_string(net.widths()[i]);
  }
  tag += "-s" + std::to_string(net.seed());
  return tag;
}

std::string oracle_teacher_tag(double eta) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "oracle-eta%g", eta);
  return buf;
}

// `labeled` is whichever dataset the oracle mode must know the answers for.
TeacherOracle make_teacher(const ExperimentConfig& cfg, const RunPaths& paths,
                           const Dataset& labeled) {
  if (cfg.teacher_mode == "oracle") {
    return TeacherOracle::oracle(dataset_label_source(labeled),
                                 cfg.data.num_classes, cfg.teacher_eta);
  }
  require_file(paths.teacher_net(), "teacher checkpoint", "train-teacher");
  LoadedNetwork loaded = load_network(paths.teacher_net());
  if (loaded.net.input_width() != cfg.data.dim ||
      loaded.net.output_width() != cfg.data.num_classes) {
    throw std::runtime_error(paths.teacher_net() +
                             " does not match the data.* settings; re-run "
                             "`cascade-distill train-teacher`");
  }
  return TeacherOracle::trained(std::move(loaded.net));
}

std::vector<int> mask_classes(const ExperimentConfig& cfg,
                              const DistillConfig& dcfg) {
  if (!dcfg.l_in.empty()) return dcfg.l_in;
  if (!cfg.distill.l_in.empty()) return cfg.distill.l_in;
  throw std::runtime_error(
      "eval.in_domain=class needs distill.l_in in the config");
}

InDomainMask make_mask(const ExperimentConfig& cfg, const Dataset& test,
                       const TeacherOracle& teacher,
                       const std::vector<int>& l_in) {
  if (cfg.eval_in_domain == "margin") {
    return InDomainMask::by_teacher_margin(teacher, test,
                                           cfg.eval_margin_threshold);
  }
  return InDomainMask::by_class(test.labels, l_in, cfg.data.num_classes);
}

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

DelegationPolicy report_policy(const DistillConfig& dcfg, double report_rho) {
  switch (dcfg.variant) {
    case Variant::kBaseline:
    case Variant::kCd2:
      return DelegationPolicy::margin_based(0.0);
    case Variant::kCd1:
      return DelegationPolicy::class_based(dcfg.l_in);
    case Variant::kCd3:
    case Variant::kMdAbstain:
      return DelegationPolicy::abstain_based();
    case Variant::kMdLs:
      return DelegationPolicy::margin_based(report_rho);
  }
  throw std::logic_error("report_policy: unreachable");
}

}  // namespace

void cmd_gen_data(const ExperimentConfig& cfg) {
  const RunPaths paths{cfg.out_dir};
  const GeneratedData balanced = generate(data_spec(cfg, true));
  const GeneratedData imbalanced = generate(data_spec(cfg, false));
  save_dataset(balanced.train, paths.train_data());
  save_dataset(balanced.test, paths.test_balanced());
  save_dataset(imbalanced.test, paths.test_imbalanced());
}

void cmd_train_teacher(const ExperimentConfig& cfg) {
  if (cfg.teacher_mode == "oracle") {
    throw std::runtime_error(
        "teacher.mode=oracle has nothing to train; run `cascade-distill "
        "cache-scores` directly");
  }
  const RunPaths paths{cfg.out_dir};
  const Dataset train_set = load_train(cfg, paths);

  Network net(cfg.teacher_widths, split_seed(cfg.seed, kSeedStreamTeacherInit));
  TrainSpec spec = cfg.teacher_train;
  spec.shuffle_seed = split_seed(cfg.seed, kSeedStreamTeacherShuffle);

  std::vector<TrainExample> examples(train_set.size());
  for (int i = 0; i < train_set.size(); ++i) {
    const auto row = train_set.row(i);
    examples[i].x.assign(row.begin(), row.end());
    examples[i].target = one_hot(cfg.data.num_classes, train_set.labels[i]);
  }
  net = train(std::move(net), examples, spec, 1.0);
  save_network(net, paths.teacher_net());
}

void cmd_cache_scores(const ExperimentConfig& cfg) {
  const RunPaths paths{cfg.out_dir};
  const Dataset train_set = load_train(cfg, paths);
  const TeacherOracle teacher = make_teacher(cfg, paths, train_set);

  TeacherScoreCache cache;
  cache.num_classes = cfg.data.num_classes;
  cache.tau = cfg.distill.tau;
  cache.teacher_tag = cfg.teacher_mode == "oracle"
                          ? oracle_teacher_tag(cfg.teacher_eta)
                          : trained_teacher_tag(
                                load_network(paths.teacher_net()).net);
  cache.logits.resize(static_cast<std::size_t>(train_set.size()) *
                      cfg.data.num_classes);
  parallel_for(train_set.size(), [&](int i) {
    const LogitVector row = teacher.score(train_set.row(i));
    std::copy(row.begin(), row.end(),
              cache.logits.begin() +
                  static_cast<std::size_t>(i) * cfg.data.num_classes);
  });
  save_score_cache(cache, paths.teacher_scores());
}

void cmd_distill(const ExperimentConfig& cfg) {
  const RunPaths paths{cfg.out_dir};
  const Dataset train_set = load_train(cfg, paths);
  require_file(paths.teacher_scores(), "teacher score cache", "cache-scores");
  const TeacherScoreCache cache = load_score_cache(paths.teacher_scores());
  if (cache.size() != train_set.size() ||
      cache.num_classes != cfg.data.num_classes) {
    throw std::runtime_error(paths.teacher_scores() +
                             " is not aligned with the training data; re-run "
                             "`cascade-distill cache-scores`");
  }
  if (cache.tau != cfg.distill.tau) {
    throw std::runtime_error(paths.teacher_scores() +
                             " was cached for a different distill.tau; re-run "
                             "`cascade-distill cache-scores`");
  }

  Network student(cfg.student_widths,
                  split_seed(cfg.seed, kSeedStreamStudentInit));
  TrainSpec spec = cfg.student_train;
  spec.shuffle_seed = split_seed(cfg.seed, kSeedStreamStudentShuffle);
  student = distill_train(std::move(student), train_set, cache, cfg.distill,
                          spec);
  save_network(student, paths.student_net(cfg.distill_tag),
               distill_meta(cfg.distill));
}

void cmd_sweep(const ExperimentConfig& cfg) {
  const RunPaths paths{cfg.out_dir};
  const Dataset test_set = load_test(cfg, paths);
  const std::string student_path = paths.student_net(cfg.distill_tag);
  require_file(student_path, "student checkpoint", "distill");
  const LoadedNetwork loaded = load_network(student_path);
  const DistillConfig dcfg = distill_config_from_meta(loaded.meta);
  const LabelSpace space = label_space_for(dcfg, cfg.data.num_classes);

  const TeacherOracle teacher = make_teacher(cfg, paths, test_set);
  const InDomainMask mask =
      make_mask(cfg, test_set, teacher,
                cfg.eval_in_domain == "class" ? mask_classes(cfg, dcfg)
                                              : std::vector<int>{});
  const std::vector<TradeoffPoint> points =
      sweep(loaded.net, space, teacher, test_set, mask, cfg.sweep_policy,
            cfg.rho_grid, cfg.cost);
  emit_report(points, paths.tradeoff_stem(cfg.distill_tag), cfg.cost.unit);
}

void cmd_report(const ExperimentConfig& cfg) {
  const RunPaths paths{cfg.out_dir};
  const Dataset test_set = load_test(cfg, paths);
  const TeacherOracle teacher = make_teacher(cfg, paths, test_set);

  std::vector<std::string> checkpoints;
  if (fs::exists(paths.dir)) {
    for (const auto& entry : fs::directory_iterator(paths.dir)) {
      const std::string name = entry.path().filename().string();
      if (name.size() > 12 && name.rfind("student_", 0) == 0 &&
          name.compare(name.size() - 4, 4, ".net") == 0) {
        checkpoints.push_back(name);
      }
    }
  }
  if (checkpoints.empty()) {
    throw std::runtime_error("no student checkpoints in " + paths.dir +
                             "; run `cascade-distill distill` first");
  }
  std::sort(checkpoints.begin(), checkpoints.end());

  // One mask for every row so the columns stay comparable across variants.
  InDomainMask mask;
  if (cfg.eval_in_domain == "margin") {
    mask = InDomainMask::by_teacher_margin(teacher, test_set,
                                           cfg.eval_margin_threshold);
  } else {
    if (cfg.distill.l_in.empty()) {
      throw std::runtime_error(
          "report with eval.in_domain=class needs distill.l_in in the config");
    }
    mask = InDomainMask::by_class(test_set.labels, cfg.distill.l_in,
                                  cfg.data.num_classes);
  }

  std::ofstream csv(paths.report_csv(), std::ios::binary);
  if (!csv) {
    throw std::runtime_error("cannot open for writing: " + paths.report_csv());
  }
  csv << "variant,in_domain_acc,in_domain_fraction,overall_acc,"
         "overall_fraction\n";

  for (const std::string& name : checkpoints) {
    const std::string tag = name.substr(8, name.size() - 12);
    const LoadedNetwork loaded = load_network(paths.dir + "/" + name);
    const DistillConfig dcfg = distill_config_from_meta(loaded.meta);
    const LabelSpace space = label_space_for(dcfg, cfg.data.num_classes);
    if (loaded.net.output_width() != space.width()) {
      throw std::runtime_error(name +
                               ": checkpoint width does not match its "
                               "recorded distill settings");
    }

    std::vector<Decision> decisions(test_set.size());
    if (dcfg.variant == Variant::kCd2 && space.width() < 2) {
      // Single-in-domain-class student: margin is undefined, so no policy
      // can ever delegate; every instance gets the lone class.
      std::cerr << "note: " << tag
                << " has one in-domain class; the student answers "
                   "everything\n";
      for (int i = 0; i < test_set.size(); ++i) {
        decisions[i].final_label = space.to_global(0);
        decisions[i].decider = Decider::kStudent;
      }
    } else {
      const DelegationPolicy policy = report_policy(dcfg, cfg.report_rho);
      parallel_for(test_set.size(), [&](int i) {
        decisions[i] =
            two_stage_predict(loaded.net, space, teacher, policy,
                              test_set.row(i));
      });
    }

    const InDomainStats in_domain =
        in_domain_accuracy(decisions, test_set.labels, mask);
    const double overall = accuracy(decisions, test_set.labels);
    int by_student = 0;
    for (const Decision& d : decisions) {
      by_student += d.decider == Decider::kStudent;
    }
    const double overall_fraction =
        static_cast<double>(by_student) / test_set.size();

    csv << tag << ',' << fmt6(in_domain.accuracy) << ','
        << fmt6(in_domain.fraction_student) << ',' << fmt6(overall) << ','
        << fmt6(overall_fraction) << '\n';
  }
  if (!csv) throw std::runtime_error("write failed: " + paths.report_csv());
}

void run_command(const std::string& command, const ExperimentConfig& cfg) {
  validate_config(cfg);
  fs::create_directories(cfg.out_dir);

  const RunPaths paths{cfg.out_dir};
  std::ofstream frozen(paths.resolved_config(), std::ios::binary);
  if (!frozen) {
    throw std::runtime_error("cannot open for writing: " +
                             paths.resolved_config());
  }
  frozen << serialize_config(cfg);
  frozen.close();

  if (command == "gen-data") cmd_gen_data(cfg);
  else if (command == "train-teacher") cmd_train_teacher(cfg);
  else if (command == "cache-scores") cmd_cache_scores(cfg);
  else if (command == "distill") cmd_distill(cfg);
  else if (command == "sweep") cmd_sweep(cfg);
  else if (command == "report") cmd_report(cfg);
  else throw std::invalid_argument("unknown command '" + command + "'");
}

}  // namespace cdist
