#include <benchmark/benchmark.h>

#include <vector>

#include "cdist/cascade.hpp"
#include "cdist/datagen.hpp"
#include "cdist/distill.hpp"
#include "cdist/eval.hpp"
#include "cdist/network.hpp"
#include "cdist/prob.hpp"
#include "cdist/rng.hpp"

namespace {

using namespace cdist;

std::vector<double> probe_input(int dim) {
  SplitMix64 rng(99);
  std::vector<double> x(dim);
  for (double& v : x) v = rng.next_uniform(-2.0, 2.0);
  return x;
}

const GeneratedData& mixture() {
  static const GeneratedData gen = [] {
    MixtureSpec spec;
    spec.n_train = 2000;
    spec.n_test = 1000;
    spec.seed = 7;
    return generate(spec);
  }();
  return gen;
}

const TeacherScoreCache& score_cache() {
  static const TeacherScoreCache cache = [] {
    const Dataset& train = mixture().train;
    TeacherScoreCache c;
    c.num_classes = train.num_classes;
    c.tau = 1.0;
    c.teacher_tag = "bench";
    c.logits.resize(static_cast<std::size_t>(train.size()) * c.num_classes);
    SplitMix64 rng(11);
    for (double& v : c.logits) v = rng.next_uniform(-6.0, 6.0);
    return c;
  }();
  return cache;
}

void BM_ForwardSmall(benchmark::State& state) {
  const Network net({16, 16, 10}, 7);
  const std::vector<double> x = probe_input(16);
  for (auto _ : state) {
    benchmark::DoNotOptimize(net.forward(x));
  }
}
BENCHMARK(BM_ForwardSmall);

void BM_ForwardLarge(benchmark::State& state) {
  const Network net({16, 128, 128, 10}, 7);
  const std::vector<double> x = probe_input(16);
  for (auto _ : state) {
    benchmark::DoNotOptimize(net.forward(x));
  }
}
BENCHMARK(BM_ForwardLarge);

void BM_Softmax(benchmark::State& state) {
  SplitMix64 rng(3);
  LogitVector logits(10);
  for (double& v : logits) v = rng.next_uniform(-5.0, 5.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(softmax(logits, 2.0));
  }
}
BENCHMARK(BM_Softmax);

void BM_LossGrad(benchmark::State& state) {
  const Network net({16, 16, 10}, 7);
  const std::vector<double> x = probe_input(16);
  const ProbDist target = one_hot(10, 3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(loss_grad(net, x, target, 1.0));
  }
}
BENCHMARK(BM_LossGrad);

void BM_TrainTargets(benchmark::State& state) {
  const Dataset& train = mixture().train;
  const TeacherScoreCache& cache = score_cache();
  DistillConfig cfg;
  cfg.variant = static_cast<Variant>(state.range(0));
  cfg.a = 0.0;
  cfg.b = 1.0;
  cfg.alpha = 0.6;
  cfg.rho_tr = 0.4;
  if (cfg.variant == Variant::kCd1 || cfg.variant == Variant::kCd2 ||
      cfg.variant == Variant::kCd3) {
    cfg.l_in = {0, 1, 2, 3, 4};
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_train_targets(train.labels, cache, cfg));
  }
  state.SetItemsProcessed(state.iterations() * train.size());
}
BENCHMARK(BM_TrainTargets)
    ->Arg(static_cast<int>(Variant::kBaseline))
    ->Arg(static_cast<int>(Variant::kCd1))
    ->Arg(static_cast<int>(Variant::kMdAbstain));

void BM_Sweep(benchmark::State& state) {
  const Dataset& test = mixture().test;
  const Network student({16, 16, 10}, 21);
  const LabelSpace space{test.num_classes, {}, false};
  const TeacherOracle teacher =
      TeacherOracle::oracle(dataset_label_source(test), test.num_classes, 0.9);
  const InDomainMask mask =
      InDomainMask::by_class(test.labels, {0, 1, 2, 3, 4}, test.num_classes);
  std::vector<double> grid;
  for (int i = 0; i <= 20; ++i) grid.push_back(i / 20.0);
  grid.push_back(1.01);
  const CostModel cost;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sweep(student, space, teacher, test, mask,
                                   DelegationPolicy::Kind::kMarginBased, grid,
                                   cost));
  }
  state.SetItemsProcessed(state.iterations() * test.size());
}
BENCHMARK(BM_Sweep);

}  // namespace

BENCHMARK_MAIN();
