#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cdist/prob.hpp"

namespace cdist {

// Mini-batch SGD settings. epochs == 0 is a no-op train.
struct TrainSpec {
  double learning_rate = 0.1;
  int epochs = 1;
  int batch_size = 32;
  std::uint64_t shuffle_seed = 0;
};

// Fully connected feedforward net: linear layers with rectifier activations
// on the hidden layers and raw logits at the output. Parameters live in one
// flat vector laid out layer by layer (weights row-major, then biases), the
// same order the checkpoint format uses. Identical (widths, seed) pairs
// always produce bit-identical initial parameters.
class Network {
 public:
  Network(std::vector<int> widths, std::uint64_t seed);

  const std::vector<int>& widths() const { return widths_; }
  std::uint64_t seed() const { return seed_; }
  int input_width() const { return widths_.front(); }
  int output_width() const { return widths_.back(); }
  std::size_t num_layers() const { return widths_.size() - 1; }
  std::size_t parameter_count() const { return params_.size(); }

  std::span<const double> parameters() const { return params_; }
  std::span<double> mutable_parameters() { return params_; }

  // Row-major [out x in] weight block and [out] bias block of layer l.
  std::span<const double> weights(std::size_t layer) const;
  std::span<double> mutable_weights(std::size_t layer);
  std::span<const double> biases(std::size_t layer) const;
  std::span<double> mutable_biases(std::size_t layer);

  LogitVector forward(std::span<const double> x) const;

  // Forward pass that keeps per-layer pre-activations and activations for
  // backprop. activations[0] is the input, activations.back() the logits.
  void forward_trace(std::span<const double> x,
                     std::vector<std::vector<double>>& activations) const;

 private:
  std::vector<int> widths_;
  std::uint64_t seed_;
  std::vector<double> params_;
  std::vector<std::size_t> weight_offset_;
  std::vector<std::size_t> bias_offset_;
};

// Gradient of the per-example loss H(target, softmax(net(x), tau)) with
// respect to every parameter, flattened in parameter order. The gradient at
// the logits is tau * (softmax(net(x), tau) - target).
std::vector<double> loss_grad(const Network& net, std::span<const double> x,
                              const ProbDist& target, double tau);

// One (feature vector, soft target) training example.
struct TrainExample {
  std::vector<double> x;
  ProbDist target;
};

// Plain mini-batch SGD on mean cross-entropy against the per-example soft
// targets. Deterministic given (net seed, shuffle seed, data order).
Network train(Network net, const std::vector<TrainExample>& examples,
              const TrainSpec& spec, double tau);

// Mean cross-entropy of the net over the examples at temperature tau.
double mean_loss(const Network& net, const std::vector<TrainExample>& examples,
                 double tau);

// ----------------------------------------------------------------------
// Checkpoint I/O.
//
// Format: one text header line
//   netv1 widths=<w0,w1,...> seed=<u64>[ <key>=<value> ...]
// followed by the parameter blob as little-endian 64-bit floats in layer
// order (weights row-major, then biases). The optional key=value tokens
// carry distillation metadata and are absent for plain checkpoints.
// ----------------------------------------------------------------------

using CheckpointMeta = std::vector<std::pair<std::string, std::string>>;

void save_network(const Network& net, const std::string& path,
                  const CheckpointMeta& meta = {});

struct LoadedNetwork {
  Network net;
  CheckpointMeta meta;
};

LoadedNetwork load_network(const std::string& path);

}  // namespace cdist
