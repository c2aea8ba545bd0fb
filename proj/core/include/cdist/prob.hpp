#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace cdist {

// Unnormalized class scores emitted by a network. Entries must be finite.
using LogitVector = std::vector<double>;

// A probability distribution over K classes.
// Invariants: every entry >= 0, entries sum to 1 within 1e-9, K >= 1.
struct ProbDist {
  std::vector<double> p;

  std::size_t size() const { return p.size(); }
  double operator[](std::size_t i) const { return p[i]; }
};

// Returns true iff `p` satisfies the ProbDist invariants.
bool is_valid_prob_dist(const ProbDist& dist);

// Throws std::invalid_argument when the invariants do not hold.
void require_prob_dist(const ProbDist& dist, const char* what);

// One-hot distribution of length k with unit mass at `label`.
ProbDist one_hot(std::size_t k, std::size_t label);

// Tempered softmax: p(i) = exp(tau * s_i) / sum_j exp(tau * s_j),
// evaluated with max-subtraction. Requires finite logits and tau > 0.
ProbDist softmax(const LogitVector& logits, double tau);

// -sum_i target(i) * log(pred(i)) with the 0 * log 0 = 0 convention.
// Returns +infinity when pred(i) == 0 somewhere target(i) > 0.
double cross_entropy(const ProbDist& target, const ProbDist& pred);

// Shannon entropy, -sum_i p(i) * log p(i).
double entropy(const ProbDist& dist);

// Index of the largest entry; ties break to the lowest index.
std::size_t argmax(std::span<const double> values);

// Top-1 probability minus top-2 probability. Requires length >= 2.
double top2_margin(const ProbDist& dist);

}  // namespace cdist
