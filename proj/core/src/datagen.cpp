#include "cdist/datagen.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include "cdist/rng.hpp"

namespace cdist {

namespace {

// Stream indices carved out of the spec seed.
constexpr std::uint64_t kMeansStream = 1;
constexpr std::uint64_t kTrainStream = 2;
constexpr std::uint64_t kTestStream = 3;

int sample_label(const ProbDist& priors, SplitMix64& rng) {
  const double u = rng.next_unit();
  double cum = 0.0;
  const int last = static_cast<int>(priors.size()) - 1;
  for (int k = 0; k < last; ++k) {
    cum += priors.p[k];
    if (u < cum) return k;
  }
  return last;
}

void fill_features(Dataset& out, const std::vector<double>& means,
                   double sigma, SplitMix64& rng) {
  const int d = out.dim;
  out.features.resize(static_cast<std::size_t>(out.size()) * d);
  for (int i = 0; i < out.size(); ++i) {
    const double* mu = means.data() + static_cast<std::size_t>(out.labels[i]) * d;
    double* row = out.features.data() + static_cast<std::size_t>(i) * d;
    for (int j = 0; j < d; ++j) row[j] = mu[j] + sigma * rng.next_gauss();
  }
}

}  // namespace

void validate_mixture_spec(const MixtureSpec& spec) {
  if (spec.num_classes < 2) {
    throw std::invalid_argument("MixtureSpec: need at least 2 classes");
  }
  if (spec.dim < 1) throw std::invalid_argument("MixtureSpec: dim must be >= 1");
  if (!(spec.sigma > 0.0)) {
    throw std::invalid_argument("MixtureSpec: sigma must be positive");
  }
  if (!(spec.radius > 0.0)) {
    throw std::invalid_argument("MixtureSpec: radius must be positive");
  }
  if (spec.zipf_s < 0.0) {
    throw std::invalid_argument("MixtureSpec: zipf exponent must be >= 0");
  }
  if (spec.n_train < 1 || spec.n_test < 1) {
    throw std::invalid_argument("MixtureSpec: dataset sizes must be positive");
  }
}

ProbDist class_priors(const MixtureSpec& spec) {
  ProbDist priors;
  priors.p.resize(spec.num_classes);
  double sum = 0.0;
  for (int k = 0; k < spec.num_classes; ++k) {
    priors.p[k] = std::pow(static_cast<double>(k + 1), -spec.zipf_s);
    sum += priors.p[k];
  }
  for (double& v : priors.p) v /= sum;
  return priors;
}

std::vector<double> class_means(const MixtureSpec& spec) {
  SplitMix64 rng(split_seed(spec.seed, kMeansStream));
  std::vector<double> means(static_cast<std::size_t>(spec.num_classes) *
                            spec.dim);
  for (int k = 0; k < spec.num_classes; ++k) {
    double* mu = means.data() + static_cast<std::size_t>(k) * spec.dim;
    double norm2 = 0.0;
    for (int j = 0; j < spec.dim; ++j) {
      mu[j] = rng.next_gauss();
      norm2 += mu[j] * mu[j];
    }
    const double scale = spec.radius / std::sqrt(norm2);
    for (int j = 0; j < spec.dim; ++j) mu[j] *= scale;
  }
  return means;
}

GeneratedData generate(const MixtureSpec& spec) {
  validate_mixture_spec(spec);
  if (spec.num_classes > spec.n_train) {
    std::cerr << "warning: more classes (" << spec.num_classes
              << ") than training examples (" << spec.n_train << ")\n";
  }

  const ProbDist priors = class_priors(spec);
  const std::vector<double> means = class_means(spec);

  GeneratedData out;
  out.train.num_classes = spec.num_classes;
  out.train.dim = spec.dim;
  out.train.seed = spec.seed;
  out.test = out.train;

  SplitMix64 train_rng(split_seed(spec.seed, kTrainStream));
  out.train.labels.resize(spec.n_train);
  for (int i = 0; i < spec.n_train; ++i) {
    out.train.labels[i] = sample_label(priors, train_rng);
  }
  fill_features(out.train, means, spec.sigma, train_rng);

  SplitMix64 test_rng(split_seed(spec.seed, kTestStream));
  out.test.labels.resize(spec.n_test);
  for (int i = 0; i < spec.n_test; ++i) {
    out.test.labels[i] = spec.balanced_test ? i % spec.num_classes
                                            : sample_label(priors, test_rng);
  }
  fill_features(out.test, means, spec.sigma, test_rng);

  return out;
}

ProbDist true_posterior(const MixtureSpec& spec, std::span<const double> x) {
  if (static_cast<int>(x.size()) != spec.dim) {
    throw std::invalid_argument("true_posterior: dimension mismatch");
  }
  const ProbDist priors = class_priors(spec);
  const std::vector<double> means = class_means(spec);

  // log prior_k - ||x - mu_k||^2 / (2 sigma^2); the shared Gaussian
  // normalization constant cancels in the softmax.
  LogitVector logw(spec.num_classes);
  const double inv2s2 = 1.0 / (2.0 * spec.sigma * spec.sigma);
  for (int k = 0; k < spec.num_classes; ++k) {
    const double* mu = means.data() + static_cast<std::size_t>(k) * spec.dim;
    double d2 = 0.0;
    for (int j = 0; j < spec.dim; ++j) {
      const double diff = x[j] - mu[j];
      d2 += diff * diff;
    }
    logw[k] = std::log(priors.p[k]) - d2 * inv2s2;
  }
  return softmax(logw, 1.0);
}

void save_dataset(const Dataset& data, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);

  os << "datav1 n=" << data.size() << " d=" << data.dim
     << " L=" << data.num_classes << " seed=" << data.seed << '\n';

  char buf[64];
  for (int i = 0; i < data.size(); ++i) {
    os << data.labels[i];
    const auto row = data.row(i);
    for (double v : row) {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      os << ',' << buf;
    }
    os << '\n';
  }
  if (!os) throw std::runtime_error("write failed: " + path);
}

namespace {

[[noreturn]] void parse_fail(const std::string& path, int line,
                             const std::string& what) {
  std::ostringstream msg;
  msg << path << ":" << line << ": " << what;
  throw std::runtime_error(msg.str());
}

}  // namespace

Dataset load_dataset(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open dataset: " + path);

  std::string header;
  if (!std::getline(is, header) || header.empty()) {
    parse_fail(path, 1, "missing header line");
  }

  Dataset data;
  long n = -1;
  {
    std::istringstream hs(header);
    std::string magic;
    hs >> magic;
    if (magic != "datav1") parse_fail(path, 1, "bad magic '" + magic + "'");
    std::string token;
    while (hs >> token) {
      const auto eq = token.find('=');
      if (eq == std::string::npos) {
        parse_fail(path, 1, "malformed header token '" + token + "'");
      }
      const std::string key = token.substr(0, eq);
      const char* value = token.c_str() + eq + 1;
      if (key == "n") n = std::strtol(value, nullptr, 10);
      else if (key == "d") data.dim = static_cast<int>(std::strtol(value, nullptr, 10));
      else if (key == "L") data.num_classes = static_cast<int>(std::strtol(value, nullptr, 10));
      else if (key == "seed") data.seed = std::strtoull(value, nullptr, 10);
      else parse_fail(path, 1, "unknown header key '" + key + "'");
    }
  }
  if (n < 0 || data.dim <= 0 || data.num_classes <= 0) {
    parse_fail(path, 1, "header missing n/d/L fields");
  }

  data.labels.reserve(n);
  data.features.reserve(static_cast<std::size_t>(n) * data.dim);
  std::string line;
  for (long i = 0; i < n; ++i) {
    if (!std::getline(is, line)) {
      parse_fail(path, static_cast<int>(i) + 2, "truncated body");
    }
    const char* cur = line.c_str();
    char* end = nullptr;
    const long label = std::strtol(cur, &end, 10);
    if (end == cur || label < 0 || label >= data.num_classes) {
      parse_fail(path, static_cast<int>(i) + 2, "bad label field");
    }
    cur = end;
    for (int j = 0; j < data.dim; ++j) {
      if (*cur != ',') {
        parse_fail(path, static_cast<int>(i) + 2,
                   "expected ',' at offset " +
                       std::to_string(cur - line.c_str()));
      }
      ++cur;
      const double v = std::strtod(cur, &end);
      if (end == cur) {
        parse_fail(path, static_cast<int>(i) + 2,
                   "bad float at offset " + std::to_string(cur - line.c_str()));
      }
      cur = end;
      data.features.push_back(v);
    }
    if (*cur != '\0') {
      parse_fail(path, static_cast<int>(i) + 2, "trailing characters");
    }
    data.labels.push_back(static_cast<int>(label));
  }
  return data;
}

}  // namespace cdist
