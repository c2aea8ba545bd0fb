#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cdist/prob.hpp"

namespace cdist {

// Seeded Gaussian-mixture benchmark: class means on a random sphere, shared
// isotropic variance, Zipf class priors (head-heavy for zipf_s > 0).
struct MixtureSpec {
  int num_classes = 10;   // L
  int dim = 16;           // d
  double zipf_s = 1.0;    // prior exponent, 0 = uniform
  double radius = 3.0;    // sphere radius for the class means
  double sigma = 1.0;     // shared per-coordinate standard deviation
  int n_train = 8000;
  int n_test = 4000;
  bool balanced_test = true;
  std::uint64_t seed = 0;
};

void validate_mixture_spec(const MixtureSpec& spec);

struct Dataset {
  int num_classes = 0;
  int dim = 0;
  std::uint64_t seed = 0;
  std::vector<int> labels;       // n
  std::vector<double> features;  // n x dim, row-major

  int size() const { return static_cast<int>(labels.size()); }
  std::span<const double> row(int i) const {
    return {features.data() + static_cast<std::size_t>(i) * dim,
            static_cast<std::size_t>(dim)};
  }
};

// Class priors (k+1)^-zipf_s, normalized.
ProbDist class_priors(const MixtureSpec& spec);

// The class means implied by the spec's seed, num_classes x dim row-major.
std::vector<double> class_means(const MixtureSpec& spec);

// Draws (train, test) independently. Deterministic given the seed; the test
// set is class-balanced when spec.balanced_test is set, otherwise it follows
// the priors like the train set.
struct GeneratedData {
  Dataset train;
  Dataset test;
};
GeneratedData generate(const MixtureSpec& spec);

// Exact mixture posterior Pr(y | x), evaluated in log space.
ProbDist true_posterior(const MixtureSpec& spec, std::span<const double> x);

// Text format: header `datav1 n=<n> d=<d> L=<L> seed=<u64>` then one line
// `label,f1,...,fd` per instance at full round-trip precision.
void save_dataset(const Dataset& data, const std::string& path);
Dataset load_dataset(const std::string& path);

}  // namespace cdist
