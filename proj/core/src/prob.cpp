#include "cdist/prob.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace cdist {

bool is_valid_prob_dist(const ProbDist& dist) {
  if (dist.p.empty()) return false;
  double sum = 0.0;
  for (double v : dist.p) {
    if (!std::isfinite(v) || v < 0.0) return false;
    sum += v;
  }
  return std::abs(sum - 1.0) < 1e-9;
}

void require_prob_dist(const ProbDist& dist, const char* what) {
  if (!is_valid_prob_dist(dist)) {
    throw std::invalid_argument(std::string(what) +
                                ": not a valid probability distribution");
  }
}

ProbDist one_hot(std::size_t k, std::size_t label) {
  if (k == 0 || label >= k) {
    throw std::invalid_argument("one_hot: label out of range");
  }
  ProbDist dist;
  dist.p.assign(k, 0.0);
  dist.p[label] = 1.0;
  return dist;
}

ProbDist softmax(const LogitVector& logits, double tau) {
  if (logits.empty()) {
    throw std::invalid_argument("softmax: empty logit vector");
  }
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    throw std::invalid_argument("softmax: tau must be positive and finite");
  }
  for (double v : logits) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("softmax: non-finite logit");
    }
  }
  double m = -std::numeric_limits<double>::infinity();
  for (double v : logits) m = std::max(m, tau * v);

  ProbDist dist;
  dist.p.resize(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    dist.p[i] = std::exp(tau * logits[i] - m);
    sum += dist.p[i];
  }
  for (double& v : dist.p) v /= sum;
  return dist;
}

double cross_entropy(const ProbDist& target, const ProbDist& pred) {
  if (target.size() != pred.size()) {
    throw std::invalid_argument("cross_entropy: length mismatch");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    double t = target.p[i];
    if (t == 0.0) continue;  // 0 * log 0 == 0
    if (pred.p[i] == 0.0) {
      return std::numeric_limits<double>::infinity();
    }
    acc -= t * std::log(pred.p[i]);
  }
  return acc;
}

double entropy(const ProbDist& dist) { return cross_entropy(dist, dist); }

std::size_t argmax(std::span<const double> values) {
  if (values.empty()) {
    throw std::invalid_argument("argmax: empty input");
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

double top2_margin(const ProbDist& dist) {
  if (dist.size() < 2) {
    throw std::invalid_argument("top2_margin: need at least two classes");
  }
  double top1 = -std::numeric_limits<double>::infinity();
  double top2 = top1;
  for (double v : dist.p) {
    if (v > top1) {
      top2 = top1;
      top1 = v;
    } else if (v > top2) {
      top2 = v;
    }
  }
  return top1 - top2;
}

}  // namespace cdist
