#include "cdist/network.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "cdist/rng.hpp"

namespace cdist {

namespace {

void check_widths(const std::vector<int>& widths) {
  if (widths.size() < 2) {
    throw std::invalid_argument("Network: need at least input and output widths");
  }
  for (int w : widths) {
    if (w <= 0) throw std::invalid_argument("Network: widths must be positive");
  }
}

}  // namespace

Network::Network(std::vector<int> widths, std::uint64_t seed)
    : widths_(std::move(widths)), seed_(seed) {
  check_widths(widths_);

  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    weight_offset_.push_back(total);
    total += static_cast<std::size_t>(widths_[l]) * widths_[l + 1];
    bias_offset_.push_back(total);
    total += widths_[l + 1];
  }
  params_.assign(total, 0.0);

  // Uniform init scaled by fan-in; biases start at zero.
  SplitMix64 rng(seed_);
  for (std::size_t l = 0; l < num_layers(); ++l) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(widths_[l]));
    auto w = mutable_weights(l);
    for (double& v : w) v = rng.next_uniform(-scale, scale);
  }
}

std::span<const double> Network::weights(std::size_t layer) const {
  return {params_.data() + weight_offset_[layer],
          static_cast<std::size_t>(widths_[layer]) * widths_[layer + 1]};
}

std::span<double> Network::mutable_weights(std::size_t layer) {
  return {params_.data() + weight_offset_[layer],
          static_cast<std::size_t>(widths_[layer]) * widths_[layer + 1]};
}

std::span<const double> Network::biases(std::size_t layer) const {
  return {params_.data() + bias_offset_[layer],
          static_cast<std::size_t>(widths_[layer + 1])};
}

std::span<double> Network::mutable_biases(std::size_t layer) {
  return {params_.data() + bias_offset_[layer],
          static_cast<std::size_t>(widths_[layer + 1])};
}

void Network::forward_trace(std::span<const double> x,
                            std::vector<std::vector<double>>& acts) const {
  if (static_cast<int>(x.size()) != input_width()) {
    throw std::invalid_argument("Network::forward: input width mismatch");
  }
  acts.assign(widths_.size(), {});
  acts[0].assign(x.begin(), x.end());

  for (std::size_t l = 0; l < num_layers(); ++l) {
    const int in = widths_[l];
    const int out = widths_[l + 1];
    const auto w = weights(l);
    const auto b = biases(l);
    const auto& prev = acts[l];
    auto& cur = acts[l + 1];
    cur.assign(out, 0.0);
    for (int r = 0; r < out; ++r) {
      double z = b[r];
      const double* row = w.data() + static_cast<std::size_t>(r) * in;
      for (int c = 0; c < in; ++c) z += row[c] * prev[c];
      // Hidden layers rectify, the last layer emits raw logits.
      cur[r] = (l + 1 < num_layers()) ? std::max(z, 0.0) : z;
    }
  }
}

LogitVector Network::forward(std::span<const double> x) const {
  std::vector<std::vector<double>> acts;
  forward_trace(x, acts);
  return acts.back();
}

std::vector<double> loss_grad(const Network& net, std::span<const double> x,
                              const ProbDist& target, double tau) {
  require_prob_dist(target, "loss_grad target");
  if (static_cast<int>(target.size()) != net.output_width()) {
    throw std::invalid_argument("loss_grad: target width mismatch");
  }

  std::vector<std::vector<double>> acts;
  net.forward_trace(x, acts);

  ProbDist pred = softmax(acts.back(), tau);

  // delta at the logits: tau * (p_hat - p_tilde)
  std::vector<double> delta(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    delta[i] = tau * (pred.p[i] - target.p[i]);
  }

  std::vector<double> grad(net.parameter_count(), 0.0);
  const auto& widths = net.widths();
  for (std::size_t l = net.num_layers(); l-- > 0;) {
    const int in = widths[l];
    const int out = widths[l + 1];
    const auto w = net.weights(l);
    const auto& prev = acts[l];

    // Offsets of this layer's blocks inside the flat parameter vector.
    const std::size_t w_off =
        static_cast<std::size_t>(w.data() - net.parameters().data());
    const std::size_t b_off = w_off + static_cast<std::size_t>(in) * out;

    for (int r = 0; r < out; ++r) {
      const double d = delta[r];
      double* grow = grad.data() + w_off + static_cast<std::size_t>(r) * in;
      for (int c = 0; c < in; ++c) grow[c] = d * prev[c];
      grad[b_off + r] = d;
    }

    if (l > 0) {
      std::vector<double> prev_delta(in, 0.0);
      for (int r = 0; r < out; ++r) {
        const double d = delta[r];
        const double* row = w.data() + static_cast<std::size_t>(r) * in;
        for (int c = 0; c < in; ++c) prev_delta[c] += row[c] * d;
      }
      // Rectifier gate: prev[c] > 0 iff the pre-activation was positive.
      for (int c = 0; c < in; ++c) {
        if (prev[c] <= 0.0) prev_delta[c] = 0.0;
      }
      delta = std::move(prev_delta);
    }
  }
  return grad;
}

double mean_loss(const Network& net, const std::vector<TrainExample>& examples,
                 double tau) {
  if (examples.empty()) {
    throw std::invalid_argument("mean_loss: empty example list");
  }
  double acc = 0.0;
  for (const auto& ex : examples) {
    acc += cross_entropy(ex.target, softmax(net.forward(ex.x), tau));
  }
  return acc / static_cast<double>(examples.size());
}

Network train(Network net, const std::vector<TrainExample>& examples,
              const TrainSpec& spec, double tau) {
  if (examples.empty()) {
    throw std::invalid_argument("train: empty example list");
  }
  if (!(spec.learning_rate > 0.0)) {
    throw std::invalid_argument("train: learning rate must be positive");
  }
  if (spec.epochs < 0) {
    throw std::invalid_argument("train: negative epoch count");
  }
  if (spec.batch_size <= 0 ||
      spec.batch_size > static_cast<int>(examples.size())) {
    throw std::invalid_argument("train: batch size must be in [1, n]");
  }
  for (const auto& ex : examples) {
    if (static_cast<int>(ex.x.size()) != net.input_width() ||
        static_cast<int>(ex.target.size()) != net.output_width()) {
      throw std::invalid_argument("train: example width mismatch");
    }
    require_prob_dist(ex.target, "train target");
  }

  const std::size_t n = examples.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  SplitMix64 rng(spec.shuffle_seed);

  std::vector<double> grad_sum(net.parameter_count());
  for (int epoch = 0; epoch < spec.epochs; ++epoch) {
    // Fisher-Yates with our own generator; std::shuffle is not portable
    // across standard library implementations.
    for (std::size_t i = n - 1; i > 0; --i) {
      std::size_t j = rng.next_below(i + 1);
      std::swap(order[i], order[j]);
    }

    for (std::size_t start = 0; start < n;
         start += static_cast<std::size_t>(spec.batch_size)) {
      const std::size_t stop =
          std::min(n, start + static_cast<std::size_t>(spec.batch_size));
      std::fill(grad_sum.begin(), grad_sum.end(), 0.0);
      for (std::size_t k = start; k < stop; ++k) {
        const auto& ex = examples[order[k]];
        std::vector<double> g = loss_grad(net, ex.x, ex.target, tau);
        for (std::size_t i = 0; i < g.size(); ++i) grad_sum[i] += g[i];
      }
      const double step =
          spec.learning_rate / static_cast<double>(stop - start);
      auto params = net.mutable_parameters();
      for (std::size_t i = 0; i < params.size(); ++i) {
        params[i] -= step * grad_sum[i];
      }
    }
  }
  return net;
}

// ----------------------------------------------------------------------
// Checkpoint I/O
// ----------------------------------------------------------------------

namespace {

void write_f64_le(std::ostream& os, double v) {
  const std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) {
    buf[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
  }
  os.write(reinterpret_cast<const char*>(buf), 8);
}

double read_f64_le(std::istream& is) {
  unsigned char buf[8];
  is.read(reinterpret_cast<char*>(buf), 8);
  if (!is) throw std::runtime_error("checkpoint: truncated parameter blob");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) {
    bits |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  }
  return std::bit_cast<double>(bits);
}

}  // namespace

void save_network(const Network& net, const std::string& path,
                  const CheckpointMeta& meta) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);

  os << "netv1 widths=";
  const auto& w = net.widths();
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (i) os << ',';
    os << w[i];
  }
  os << " seed=" << net.seed();
  for (const auto& [key, value] : meta) {
    os << ' ' << key << '=' << value;
  }
  os << '\n';

  for (double v : net.parameters()) write_f64_le(os, v);
  if (!os) throw std::runtime_error("write failed: " + path);
}

LoadedNetwork load_network(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint: " + path);

  std::string header;
  if (!std::getline(is, header)) {
    throw std::runtime_error("checkpoint: missing header line: " + path);
  }

  std::istringstream hs(header);
  std::string magic;
  hs >> magic;
  if (magic != "netv1") {
    throw std::runtime_error("checkpoint: bad magic '" + magic + "' in " + path);
  }

  std::vector<int> widths;
  std::uint64_t seed = 0;
  bool have_widths = false, have_seed = false;
  CheckpointMeta meta;

  std::string token;
  while (hs >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("checkpoint: malformed header token '" + token + "'");
    }
    const std::string key = token.substr(0, eq);
    const std::string value = token.substr(eq + 1);
    if (key == "widths") {
      std::istringstream ws(value);
      std::string part;
      while (std::getline(ws, part, ',')) widths.push_back(std::stoi(part));
      have_widths = true;
    } else if (key == "seed") {
      seed = std::stoull(value);
      have_seed = true;
    } else {
      meta.emplace_back(key, value);
    }
  }
  if (!have_widths || !have_seed) {
    throw std::runtime_error("checkpoint: header missing widths/seed: " + path);
  }

  Network net(widths, seed);
  auto params = net.mutable_parameters();
  for (double& v : params) v = read_f64_le(is);

  char extra;
  if (is.read(&extra, 1)) {
    throw std::runtime_error("checkpoint: trailing bytes after blob: " + path);
  }
  return {std::move(net), std::move(meta)};
}

}  // namespace cdist
