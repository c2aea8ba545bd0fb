// Acceptance gate: ten checks against the reference benchmark config, one
// pass/fail line each. Exit status 0 only when every line says PASS.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "cdist/cascade.hpp"
#include "cdist/config.hpp"
#include "cdist/datagen.hpp"
#include "cdist/distill.hpp"
#include "cdist/eval.hpp"
#include "cdist/experiment.hpp"
#include "cdist/network.hpp"
#include "cdist/prob.hpp"
#include "cdist/rng.hpp"

#include "oracles.hpp"

#ifndef CDIST_CLI_PATH
#error "CDIST_CLI_PATH must point at the cascade-distill binary"
#endif

namespace {

using namespace cdist;

std::string g_config_path;

struct Outcome {
  bool pass = true;
  std::string note;  // shown in brackets on the printed line
};

void fail(Outcome& out, const std::string& why) {
  out.pass = false;
  if (!out.note.empty()) out.note += "; ";
  out.note += why;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

// ----------------------------------------------------------------------
// Shared fixture: the reference pipeline run in-process with the same seed
// streams the CLI uses. Built once, on first use.
// ----------------------------------------------------------------------

struct Bundle {
  ExperimentConfig cfg;
  Dataset train;
  Dataset test;
  Network teacher;
  TeacherScoreCache cache;
  Network student;
  LabelSpace space;
  InDomainMask mask;
};

Bundle build_bundle() {
  ExperimentConfig cfg = load_config(g_config_path);
  validate_config(cfg);

  MixtureSpec spec = cfg.data;
  spec.seed = split_seed(cfg.seed, kSeedStreamData);
  spec.balanced_test = cfg.sweep_test_set == "balanced";
  GeneratedData gen = generate(spec);

  Network teacher(cfg.teacher_widths,
                  split_seed(cfg.seed, kSeedStreamTeacherInit));
  TrainSpec tspec = cfg.teacher_train;
  tspec.shuffle_seed = split_seed(cfg.seed, kSeedStreamTeacherShuffle);
  std::vector<TrainExample> examples(gen.train.size());
  for (int i = 0; i < gen.train.size(); ++i) {
    const auto row = gen.train.row(i);
    examples[i].x.assign(row.begin(), row.end());
    examples[i].target = one_hot(cfg.data.num_classes, gen.train.labels[i]);
  }
  teacher = train(std::move(teacher), examples, tspec, 1.0);

  TeacherScoreCache cache;
  cache.num_classes = cfg.data.num_classes;
  cache.tau = cfg.distill.tau;
  cache.teacher_tag = "acceptance";
  cache.logits.resize(static_cast<std::size_t>(gen.train.size()) *
                      cfg.data.num_classes);
  const TeacherOracle scorer = TeacherOracle::trained(teacher);
  for (int i = 0; i < gen.train.size(); ++i) {
    const LogitVector row = scorer.score(gen.train.row(i));
    std::copy(row.begin(), row.end(),
              cache.logits.begin() +
                  static_cast<std::size_t>(i) * cfg.data.num_classes);
  }

  Network student(cfg.student_widths,
                  split_seed(cfg.seed, kSeedStreamStudentInit));
  TrainSpec sspec = cfg.student_train;
  sspec.shuffle_seed = split_seed(cfg.seed, kSeedStreamStudentShuffle);
  student = distill_train(std::move(student), gen.train, cache, cfg.distill,
                          sspec);

  LabelSpace space = label_space_for(cfg.distill, cfg.data.num_classes);
  InDomainMask mask = InDomainMask::by_class(gen.test.labels, cfg.distill.l_in,
                                             cfg.data.num_classes);
  return Bundle{std::move(cfg),     std::move(gen.train), std::move(gen.test),
                std::move(teacher), std::move(cache),     std::move(student),
                std::move(space),   std::move(mask)};
}

Bundle& bundle() {
  static Bundle b = build_bundle();
  return b;
}

double student_only_accuracy(const Network& student, const LabelSpace& space,
                             const Dataset& test) {
  int correct = 0;
  for (int i = 0; i < test.size(); ++i) {
    const int slot = argmax(student.forward(test.row(i)));
    const int global = space.has_abstain && slot == space.abstain_slot()
                           ? -1
                           : space.to_global(slot);
    if (global == test.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / test.size();
}

double teacher_only_accuracy(const Network& teacher, const Dataset& test) {
  int correct = 0;
  for (int i = 0; i < test.size(); ++i) {
    if (argmax(teacher.forward(test.row(i))) == test.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / test.size();
}

// ----------------------------------------------------------------------
// 1. Every pseudo-label builder yields a valid distribution on randomized
//    inputs: 10,000 trials round-robin over the six variants, < 5 s.
// ----------------------------------------------------------------------
Outcome criterion_label_validity() {
  Outcome out;
  oracles::Rand rnd(0x5eedfacecafe01ULL);
  const Variant variants[] = {Variant::kBaseline, Variant::kCd1,
                              Variant::kCd2,      Variant::kCd3,
                              Variant::kMdLs,     Variant::kMdAbstain};
  int bad = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const int L = 2 + rnd.below(10);
    DistillConfig cfg;
    cfg.variant = variants[trial % 6];
    cfg.a = 0.0;
    cfg.b = 1.0;
    cfg.tau = std::exp(rnd.uniform(std::log(0.1), std::log(10.0)));
    cfg.alpha = rnd.unit();
    if (cfg.variant == Variant::kCd1 || cfg.variant == Variant::kCd2 ||
        cfg.variant == Variant::kCd3) {
      cfg.l_in = rnd.class_subset(L);
    }
    const LogitVector logits = rnd.logits(L, -30.0, 30.0);
    const int y = rnd.below(L);
    const bool easy = rnd.below(2) == 0;

    const ProbDist p = variant_pseudo_label(y, logits, cfg, easy);
    double sum = 0.0;
    double low = 1.0;
    for (double v : p.p) {
      sum += v;
      low = std::min(low, v);
    }
    if (static_cast<int>(p.p.size()) != variant_target_length(cfg, L) ||
        std::abs(sum - 1.0) >= 1e-9 || low < 0.0) {
      ++bad;
    }
  }
  if (bad > 0) fail(out, std::to_string(bad) + "/10000 invalid targets");
  return out;
}

// ----------------------------------------------------------------------
// 2. Analytic gradients match central finite differences on 100 random
//    small nets to 1e-4 relative error, < 30 s.
// ----------------------------------------------------------------------
Outcome criterion_gradients() {
  Outcome out;
  oracles::Rand rnd(0x5eedfacecafe02ULL);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<int> widths{2 + rnd.below(4)};
    const int hidden_layers = 1 + rnd.below(2);
    for (int l = 0; l < hidden_layers; ++l) widths.push_back(2 + rnd.below(5));
    widths.push_back(2 + rnd.below(4));

    Network net(widths, static_cast<std::uint64_t>(trial) * 7919 + 13);
    std::vector<double> x(widths.front());
    for (int attempt = 0; attempt < 64; ++attempt) {
      for (double& v : x) v = rnd.uniform(-2.0, 2.0);
      if (!oracles::near_relu_kink(oracles::hand_forward(net, x))) break;
    }
    const ProbDist target = rnd.dist(widths.back());
    const double tau = rnd.uniform(0.5, 2.0);

    const std::vector<double> analytic = loss_grad(net, x, target, tau);
    const std::vector<double> numeric = oracles::fd_gradient(net, x, target,
                                                             tau);
    worst = std::max(worst, oracles::grad_error(analytic, numeric));
  }
  out.note = "max rel err " + fmt(worst);
  if (!(worst < 1e-4)) fail(out, "exceeds 1e-4");
  return out;
}

// ----------------------------------------------------------------------
// 3. Exact reductions: (a) a=1,b=0 equals plain cross-entropy against the
//    one-hot label, (b) CD1 with the full class set reproduces the baseline
//    targets bit for bit, (c) MD_LS with rho_tr below every teacher margin
//    reproduces the baseline targets bit for bit.
// ----------------------------------------------------------------------
Outcome criterion_reductions() {
  Outcome out;
  oracles::Rand rnd(0x5eedfacecafe03ULL);

  for (int trial = 0; trial < 200; ++trial) {
    const int L = 2 + rnd.below(8);
    const LogitVector teacher = rnd.logits(L);
    const LogitVector student = rnd.logits(L);
    const int y = rnd.below(L);
    DistillConfig cfg;
    cfg.a = 1.0;
    cfg.b = 0.0;
    cfg.tau = rnd.uniform(0.5, 2.0);
    const double lhs = distill_objective(y, teacher, student, cfg);
    const double rhs = cross_entropy(one_hot(L, y), softmax(student, cfg.tau));
    if (lhs != rhs) {
      fail(out, "a=1,b=0 differs from plain cross-entropy");
      break;
    }
  }

  for (int rep = 0; rep < 10; ++rep) {
    const int L = 2 + rnd.below(9);
    const int n = 100;
    TeacherScoreCache cache;
    cache.num_classes = L;
    cache.tau = rnd.uniform(0.5, 2.0);
    cache.teacher_tag = "acc";
    cache.logits.resize(static_cast<std::size_t>(n) * L);
    for (double& v : cache.logits) v = rnd.uniform(-6.0, 6.0);
    std::vector<int> labels(n);
    for (int& y : labels) y = rnd.below(L);

    DistillConfig base;
    base.a = 0.0;
    base.b = 1.0;
    base.tau = cache.tau;
    const std::vector<ProbDist> want = build_train_targets(labels, cache,
                                                           base);

    DistillConfig cd1 = base;
    cd1.variant = Variant::kCd1;
    cd1.alpha = rnd.unit();
    for (int k = 0; k < L; ++k) cd1.l_in.push_back(k);
    const std::vector<ProbDist> got_cd1 = build_train_targets(labels, cache,
                                                              cd1);
    for (int i = 0; i < n; ++i) {
      if (got_cd1[i].p != want[i].p) {
        fail(out, "CD1 over the full class set drifts from baseline");
        return out;
      }
    }

    double min_margin = 1.0;
    for (int i = 0; i < n; ++i) {
      min_margin = std::min(
          min_margin, teacher_margin(softmax(
                          LogitVector(cache.row(i).begin(),
                                      cache.row(i).end()),
                          cache.tau)));
    }
    if (!(min_margin > 0.0)) continue;  // degenerate draw; margins tie
    DistillConfig mdls = base;
    mdls.variant = Variant::kMdLs;
    mdls.alpha = rnd.unit();
    mdls.rho_tr = 0.0;
    const std::vector<ProbDist> got_mdls = build_train_targets(labels, cache,
                                                               mdls);
    for (int i = 0; i < n; ++i) {
      if (got_mdls[i].p != want[i].p) {
        fail(out, "MD_LS below every margin drifts from baseline");
        return out;
      }
    }
  }
  return out;
}

// ----------------------------------------------------------------------
// 4. Sweep endpoints are exact: rho=0 reproduces the student-only accuracy
//    with fraction_student 1, rho=1.01 the teacher-only accuracy with
//    fraction_student 0, costs included.
// ----------------------------------------------------------------------
Outcome criterion_endpoints() {
  Outcome out;
  Bundle& b = bundle();
  if (b.cfg.rho_grid.front() != 0.0 || b.cfg.rho_grid.back() != 1.01) {
    fail(out, "reference grid must span 0 .. 1.01");
    return out;
  }
  const TeacherOracle teacher = TeacherOracle::trained(b.teacher);
  const std::vector<TradeoffPoint> pts =
      sweep(b.student, b.space, teacher, b.test, b.mask,
            DelegationPolicy::Kind::kMarginBased, b.cfg.rho_grid, b.cfg.cost);

  const TradeoffPoint& lo = pts.front();
  if (lo.fraction_student != 1.0) fail(out, "rho=0 fraction_student != 1");
  if (lo.expected_cost != expected_cost(b.cfg.cost, 0.0)) {
    fail(out, "rho=0 cost != student cost");
  }
  if (lo.overall_acc != student_only_accuracy(b.student, b.space, b.test)) {
    fail(out, "rho=0 accuracy != student-only accuracy");
  }

  const TradeoffPoint& hi = pts.back();
  if (hi.fraction_student != 0.0) fail(out, "rho=1.01 fraction_student != 0");
  if (hi.expected_cost != expected_cost(b.cfg.cost, 1.0)) {
    fail(out, "rho=1.01 cost != student+teacher cost");
  }
  if (hi.overall_acc != teacher_only_accuracy(b.teacher, b.test)) {
    fail(out, "rho=1.01 accuracy != teacher-only accuracy");
  }
  out.note = "student " + fmt(lo.overall_acc) + ", teacher " +
             fmt(hi.overall_acc);
  return out;
}

// ----------------------------------------------------------------------
// 5. With an eta=1 ideal teacher, overall accuracy is non-decreasing along
//    any ascending rho grid; zero violations allowed.
// ----------------------------------------------------------------------
Outcome criterion_monotone() {
  Outcome out;
  Bundle& b = bundle();
  const TeacherOracle ideal = TeacherOracle::oracle(
      dataset_label_source(b.test), b.cfg.data.num_classes, 1.0);
  const std::vector<double> irregular{0.0, 0.13, 0.4, 0.77, 0.99, 1.01};
  int violations = 0;
  for (const std::vector<double>& grid : {b.cfg.rho_grid, irregular}) {
    const std::vector<TradeoffPoint> pts =
        sweep(b.student, b.space, ideal, b.test, b.mask,
              DelegationPolicy::Kind::kMarginBased, grid, b.cfg.cost);
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      if (pts[i + 1].overall_acc < pts[i].overall_acc) ++violations;
    }
  }
  if (violations > 0) {
    fail(out, std::to_string(violations) + " monotonicity violations");
  }
  return out;
}

// ----------------------------------------------------------------------
// 6. Smoothing dichotomy for CD1 on the reference benchmark: alpha=0.9
//    drops the mean out-of-domain student margin by at least 0.05 versus
//    alpha=0 and keeps a larger in-domain share at rho in {0.2, 0.4}; same
//    seeds and widths throughout, < 2 min.
// ----------------------------------------------------------------------
Outcome criterion_dichotomy() {
  Outcome out;
  Bundle& b = bundle();
  const auto distill_with = [&](double alpha) {
    DistillConfig dc = b.cfg.distill;
    dc.variant = Variant::kCd1;
    dc.alpha = alpha;
    Network s(b.cfg.student_widths,
              split_seed(b.cfg.seed, kSeedStreamStudentInit));
    TrainSpec sp = b.cfg.student_train;
    sp.shuffle_seed = split_seed(b.cfg.seed, kSeedStreamStudentShuffle);
    return distill_train(std::move(s), b.train, b.cache, dc, sp);
  };
  const Network s_plain = distill_with(0.0);
  const Network s_smooth = distill_with(0.9);

  const auto margins = [&](const Network& net) {
    std::vector<double> m(b.test.size());
    for (int i = 0; i < b.test.size(); ++i) {
      m[i] = student_margin(softmax(net.forward(b.test.row(i)), 1.0));
    }
    return m;
  };
  const std::vector<double> m_plain = margins(s_plain);
  const std::vector<double> m_smooth = margins(s_smooth);

  double ood_plain = 0.0;
  double ood_smooth = 0.0;
  int ood_n = 0;
  for (int i = 0; i < b.test.size(); ++i) {
    if (b.mask.member[i]) continue;
    ood_plain += m_plain[i];
    ood_smooth += m_smooth[i];
    ++ood_n;
  }
  if (ood_n == 0) {
    fail(out, "no out-of-domain test instances");
    return out;
  }
  ood_plain /= ood_n;
  ood_smooth /= ood_n;
  out.note = "ood margin " + fmt(ood_plain) + " vs " + fmt(ood_smooth);
  if (!(ood_smooth <= ood_plain - 0.05)) {
    fail(out, "margin drop under 0.05");
  }

  for (double rho : {0.2, 0.4}) {
    int keep_plain = 0;
    int keep_smooth = 0;
    int in_n = 0;
    for (int i = 0; i < b.test.size(); ++i) {
      if (!b.mask.member[i]) continue;
      ++in_n;
      if (m_plain[i] >= rho) ++keep_plain;
      if (m_smooth[i] >= rho) ++keep_smooth;
    }
    const double f_plain = static_cast<double>(keep_plain) / in_n;
    const double f_smooth = static_cast<double>(keep_smooth) / in_n;
    out.note += "; keep@" + fmt(rho) + " " + fmt(f_plain) + " vs " +
                fmt(f_smooth);
    if (!(f_smooth > f_plain)) {
      fail(out, "in-domain share not higher at rho=" + fmt(rho));
    }
  }
  return out;
}

// ----------------------------------------------------------------------
// 7. With the trained teacher there is a rho whose overall accuracy is
//    within 0.01 of teacher-only while spending at most 60% of the
//    teacher-only cost; the benchmark is calibrated once and frozen, < 5 min.
// ----------------------------------------------------------------------
Outcome criterion_tradeoff() {
  Outcome out;
  Bundle& b = bundle();
  const TeacherOracle teacher = TeacherOracle::trained(b.teacher);
  const std::vector<TradeoffPoint> pts =
      sweep(b.student, b.space, teacher, b.test, b.mask,
            DelegationPolicy::Kind::kMarginBased, b.cfg.rho_grid, b.cfg.cost);
  const double teacher_acc = teacher_only_accuracy(b.teacher, b.test);
  const double cost_cap = 0.6 * b.cfg.cost.teacher_cost;

  const TradeoffPoint* found = nullptr;
  const TradeoffPoint* best = nullptr;
  for (const TradeoffPoint& pt : pts) {
    if (pt.expected_cost > cost_cap) continue;
    if (best == nullptr || pt.overall_acc > best->overall_acc) best = &pt;
    if (pt.overall_acc >= teacher_acc - 0.01) {
      found = &pt;
      break;
    }
  }
  if (found != nullptr) {
    out.note = "rho " + fmt(found->rho) + ": acc " + fmt(found->overall_acc) +
               " vs teacher " + fmt(teacher_acc) + " at " +
               fmt(found->expected_cost / (b.cfg.cost.student_cost +
                                           b.cfg.cost.teacher_cost) *
                   100.0) +
               "% of full cost";
  } else {
    fail(out, "no rho meets acc >= " + fmt(teacher_acc - 0.01) +
                  " within 0.6x teacher cost (best under cap: " +
                  (best ? fmt(best->overall_acc) : std::string("none")) + ")");
  }
  return out;
}

// ----------------------------------------------------------------------
// 8. bayes_reject agrees exactly with the direct rule on 1000 random
//    posteriors x 20 thresholds, and on synthetic data with true posteriors
//    the abstention set shrinks (stays nested) as c grows.
// ----------------------------------------------------------------------
Outcome criterion_reject() {
  Outcome out;
  oracles::Rand rnd(0x5eedfacecafe08ULL);
  int mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int L = 2 + rnd.below(9);
    const ProbDist post = rnd.dist(L);
    for (int j = 1; j <= 20; ++j) {
      const double c = j / 20.0;
      int direct = kAbstainLabel;
      double top = post.p[0];
      int arg = 0;
      for (int k = 1; k < L; ++k) {
        if (post.p[k] > top) {
          top = post.p[k];
          arg = k;
        }
      }
      if (top > 1.0 - c) direct = arg;
      if (bayes_reject(post, c) != direct) ++mismatches;
    }
  }
  if (mismatches > 0) {
    fail(out, std::to_string(mismatches) + " rule mismatches");
  }

  MixtureSpec spec;
  spec.num_classes = 5;
  spec.dim = 4;
  spec.sigma = 1.2;
  spec.n_train = 50;
  spec.n_test = 500;
  spec.seed = 0x5eedfacecafe09ULL;
  const GeneratedData gen = generate(spec);
  std::vector<bool> prev;
  int prev_count = -1;
  int nesting_breaks = 0;
  for (int j = 1; j <= 20; ++j) {
    const double c = j / 20.0;
    std::vector<bool> abst(gen.test.size());
    int count = 0;
    for (int i = 0; i < gen.test.size(); ++i) {
      const ProbDist post = true_posterior(spec, gen.test.row(i));
      abst[i] = bayes_reject(post, c) == kAbstainLabel;
      if (abst[i]) ++count;
    }
    if (!prev.empty()) {
      for (int i = 0; i < gen.test.size(); ++i) {
        if (abst[i] && !prev[i]) ++nesting_breaks;
      }
      if (count > prev_count) ++nesting_breaks;
    }
    prev = std::move(abst);
    prev_count = count;
  }
  if (nesting_breaks > 0) {
    fail(out, std::to_string(nesting_breaks) + " nesting violations");
  }
  return out;
}

// ----------------------------------------------------------------------
// 9. expected_cost matches the definition exactly on 100 random fractions
//    with the shipped presets, including the 0.74 spot value.
// ----------------------------------------------------------------------
Outcome criterion_cost() {
  Outcome out;
  oracles::Rand rnd(0x5eedfacecafe0aULL);
  const CostModel cost;
  for (int trial = 0; trial < 100; ++trial) {
    const double f = rnd.unit();
    if (expected_cost(cost, f) != cost.student_cost + f * cost.teacher_cost) {
      fail(out, "mismatch at fraction " + fmt(f));
      return out;
    }
  }
  if (expected_cost(cost, 0.74) != 353792000000.0) {
    fail(out, "0.74 spot check missed 353792000000");
  }
  return out;
}

// ----------------------------------------------------------------------
// 10. The CLI pipeline, run twice end to end under the reference config,
//     produces byte-identical datasets, checkpoints, score caches, CSVs,
//     and SVGs; each run finishes inside 5 minutes.
// ----------------------------------------------------------------------
Outcome criterion_determinism() {
  Outcome out;
  namespace fs = std::filesystem;
  const fs::path base{"acceptance_scratch"};
  fs::remove_all(base);
  fs::create_directories(base);

  const char* stages[] = {"gen-data", "train-teacher", "cache-scores",
                          "distill",  "sweep",         "report"};
  const auto run_pipeline = [&](const std::string& dir) {
    const auto started = std::chrono::steady_clock::now();
    for (const char* stage : stages) {
      const std::string cmd = std::string(CDIST_CLI_PATH) + " " + stage +
                              " --config " + g_config_path + " --out " + dir +
                              " >> " + (base / "cli.log").string() + " 2>&1";
      if (std::system(cmd.c_str()) != 0) {
        throw std::runtime_error(std::string("stage failed: ") + stage);
      }
    }
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         started)
        .count();
  };

  const std::string dir_a = (base / "run_a").string();
  const std::string dir_b = (base / "run_b").string();
  const double secs_a = run_pipeline(dir_a);
  const double secs_b = run_pipeline(dir_b);
  out.note = "runs " + fmt(secs_a) + "s / " + fmt(secs_b) + "s";
  if (secs_a >= 300.0 || secs_b >= 300.0) fail(out, "run over 5 minutes");

  const std::string tag = load_config(g_config_path).distill_tag;
  const RunPaths a{dir_a};
  const RunPaths b{dir_b};
  const std::pair<std::string, std::string> files[] = {
      {a.train_data(), b.train_data()},
      {a.test_balanced(), b.test_balanced()},
      {a.test_imbalanced(), b.test_imbalanced()},
      {a.teacher_net(), b.teacher_net()},
      {a.teacher_scores(), b.teacher_scores()},
      {a.student_net(tag), b.student_net(tag)},
      {a.tradeoff_stem(tag) + ".csv", b.tradeoff_stem(tag) + ".csv"},
      {a.tradeoff_stem(tag) + ".svg", b.tradeoff_stem(tag) + ".svg"},
      {a.report_csv(), b.report_csv()},
  };
  for (const auto& [lhs, rhs] : files) {
    if (oracles::slurp(lhs) != oracles::slurp(rhs)) {
      fail(out, "differs: " + fs::path(lhs).filename().string());
    }
  }
  return out;
}

struct Criterion {
  const char* name;
  Outcome (*run)();
  double budget_seconds;  // 0 = untimed
};

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::fprintf(stderr, "usage: %s <reference-config>\n", argv[0]);
    return 2;
  }
  g_config_path = argv[1];
  if (!std::ifstream(g_config_path)) {
    std::fprintf(stderr, "cannot read config: %s\n", g_config_path.c_str());
    return 2;
  }

  const Criterion criteria[] = {
      {"pseudo-label validity", criterion_label_validity, 5.0},
      {"gradient check", criterion_gradients, 30.0},
      {"exact reductions", criterion_reductions, 0.0},
      {"sweep endpoints", criterion_endpoints, 0.0},
      {"oracle monotonicity", criterion_monotone, 0.0},
      {"smoothing dichotomy", criterion_dichotomy, 120.0},
      {"cost-accuracy target", criterion_tradeoff, 300.0},
      {"reject rule", criterion_reject, 0.0},
      {"expected cost", criterion_cost, 0.0},
      {"pipeline determinism", criterion_determinism, 0.0},
  };

  int failures = 0;
  int index = 0;
  for (const Criterion& c : criteria) {
    ++index;
    const auto started = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      fail(out, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - started)
                            .count();
    if (c.budget_seconds > 0.0 && secs >= c.budget_seconds) {
      fail(out, "over budget: " + fmt(secs) + "s >= " +
                    fmt(c.budget_seconds) + "s");
    }
    if (!out.pass) ++failures;
    std::printf("criterion %2d (%s): %s [%.1fs]%s%s%s\n", index, c.name,
                out.pass ? "PASS" : "FAIL", secs, out.note.empty() ? "" : " (",
                out.note.c_str(), out.note.empty() ? "" : ")");
    std::fflush(stdout);
  }
  std::printf("%d/10 criteria passed\n", 10 - failures);
  return failures == 0 ? 0 : 1;
}
