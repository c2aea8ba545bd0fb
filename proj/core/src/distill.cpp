#include "cdist/distill.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace cdist {

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::kBaseline: return "BASELINE";
    case Variant::kCd1: return "CD1";
    case Variant::kCd2: return "CD2";
    case Variant::kCd3: return "CD3";
    case Variant::kMdLs: return "MD_LS";
    case Variant::kMdAbstain: return "MD_ABSTAIN";
  }
  throw std::logic_error("variant_name: unreachable");
}

Variant parse_variant(const std::string& name) {
  if (name == "BASELINE") return Variant::kBaseline;
  if (name == "CD1") return Variant::kCd1;
  if (name == "CD2") return Variant::kCd2;
  if (name == "CD3") return Variant::kCd3;
  if (name == "MD_LS") return Variant::kMdLs;
  if (name == "MD_ABSTAIN") return Variant::kMdAbstain;
  throw std::invalid_argument("unknown distillation variant '" + name + "'");
}

namespace {

bool uses_l_in(Variant v) {
  return v == Variant::kCd1 || v == Variant::kCd2 || v == Variant::kCd3;
}

bool uses_margin_partition(Variant v) {
  return v == Variant::kMdLs || v == Variant::kMdAbstain;
}

bool contains(const std::vector<int>& sorted, int y) {
  return std::binary_search(sorted.begin(), sorted.end(), y);
}

// Position of y inside the sorted in-domain set; y must be a member.
int restricted_slot(const std::vector<int>& l_in, int y) {
  return static_cast<int>(std::lower_bound(l_in.begin(), l_in.end(), y) -
                          l_in.begin());
}

ProbDist smoothed_one_hot(int num_classes, int y, double alpha) {
  ProbDist dist;
  dist.p.assign(num_classes, alpha / num_classes);
  dist.p[y] += 1.0 - alpha;
  return dist;
}

// Teacher softmax renormalized over the in-domain classes only.
ProbDist restricted_softmax(std::span<const double> logits,
                            const std::vector<int>& l_in, double tau) {
  LogitVector sub(l_in.size());
  for (std::size_t i = 0; i < l_in.size(); ++i) sub[i] = logits[l_in[i]];
  return softmax(sub, tau);
}

double raw_top2_gap(std::span<const double> scores) {
  double top1 = -std::numeric_limits<double>::infinity();
  double top2 = top1;
  for (double v : scores) {
    if (v > top1) {
      top2 = top1;
      top1 = v;
    } else if (v > top2) {
      top2 = v;
    }
  }
  return top1 - top2;
}

}  // namespace

void validate_distill_config(const DistillConfig& cfg, int num_classes) {
  if (num_classes < 2) {
    throw std::invalid_argument("distill config: need at least 2 classes");
  }
  if (cfg.a < 0.0 || cfg.b < 0.0 || cfg.a + cfg.b <= 0.0) {
    throw std::invalid_argument("distill config: need a, b >= 0 and a + b > 0");
  }
  if (!(cfg.tau > 0.0)) {
    throw std::invalid_argument("distill config: tau must be positive");
  }
  if (cfg.alpha < 0.0 || cfg.alpha > 1.0) {
    throw std::invalid_argument("distill config: alpha must be in [0, 1]");
  }
  if (uses_margin_partition(cfg.variant) &&
      cfg.margin_space == MarginSpace::kProbability &&
      (cfg.rho_tr < 0.0 || cfg.rho_tr > 1.0)) {
    throw std::invalid_argument(
        "distill config: probability-space rho_tr must be in [0, 1]");
  }
  if (uses_l_in(cfg.variant)) {
    if (cfg.l_in.empty()) {
      throw std::invalid_argument("distill config: l_in must be nonempty");
    }
    if (!std::is_sorted(cfg.l_in.begin(), cfg.l_in.end())) {
      throw std::invalid_argument("distill config: l_in must be sorted");
    }
    if (std::adjacent_find(cfg.l_in.begin(), cfg.l_in.end()) != cfg.l_in.end()) {
      throw std::invalid_argument("distill config: l_in has duplicates");
    }
    if (cfg.l_in.front() < 0 || cfg.l_in.back() >= num_classes) {
      throw std::invalid_argument("distill config: l_in class out of range");
    }
  }
}

int variant_target_length(const DistillConfig& cfg, int num_classes) {
  switch (cfg.variant) {
    case Variant::kBaseline:
    case Variant::kCd1:
    case Variant::kMdLs:
      return num_classes;
    case Variant::kCd2:
      return static_cast<int>(cfg.l_in.size());
    case Variant::kCd3:
      return static_cast<int>(cfg.l_in.size()) + 1;
    case Variant::kMdAbstain:
      return num_classes + 1;
  }
  throw std::logic_error("variant_target_length: unreachable");
}

Partition partition_by_class(const std::vector<int>& labels,
                             const std::vector<int>& l_in, int num_classes) {
  Partition part;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int y = labels[i];
    if (y < 0 || y >= num_classes) {
      throw std::invalid_argument("partition_by_class: label out of range");
    }
    (contains(l_in, y) ? part.easy : part.hard).push_back(static_cast<int>(i));
  }
  return part;
}

double teacher_margin(const ProbDist& teacher_dist) {
  return top2_margin(teacher_dist);
}

std::vector<bool> easy_mask_by_margin(const TeacherScoreCache& cache,
                                      double rho_tr, double tau,
                                      MarginSpace space) {
  std::vector<bool> easy(cache.size());
  for (int i = 0; i < cache.size(); ++i) {
    const double margin = space == MarginSpace::kProbability
                              ? teacher_margin(softmax(LogitVector(
                                                           cache.row(i).begin(),
                                                           cache.row(i).end()),
                                                       tau))
                              : raw_top2_gap(cache.row(i));
    easy[i] = margin > rho_tr;  // strict
  }
  return easy;
}

Partition partition_by_margin(const TeacherScoreCache& cache, double rho_tr,
                              double tau, MarginSpace space) {
  const std::vector<bool> easy = easy_mask_by_margin(cache, rho_tr, tau, space);
  Partition part;
  for (int i = 0; i < cache.size(); ++i) {
    (easy[i] ? part.easy : part.hard).push_back(i);
  }
  return part;
}

ProbDist pseudo_label_baseline(std::span<const double> teacher_logits,
                               double tau) {
  return softmax(LogitVector(teacher_logits.begin(), teacher_logits.end()),
                 tau);
}

ProbDist pseudo_label_cd1(int y, std::span<const double> teacher_logits,
                          double alpha, const std::vector<int>& l_in,
                          double tau) {
  if (contains(l_in, y)) return pseudo_label_baseline(teacher_logits, tau);
  return smoothed_one_hot(static_cast<int>(teacher_logits.size()), y, alpha);
}

ProbDist pseudo_label_cd2(int y, std::span<const double> teacher_logits,
                          const std::vector<int>& l_in, double tau) {
  if (contains(l_in, y)) return restricted_softmax(teacher_logits, l_in, tau);
  ProbDist dist;
  dist.p.assign(l_in.size(), 1.0 / static_cast<double>(l_in.size()));
  return dist;
}

ProbDist pseudo_label_cd3(int y, std::span<const double> teacher_logits,
                          const std::vector<int>& l_in, double tau) {
  const int abstain = static_cast<int>(l_in.size());
  if (!contains(l_in, y)) return one_hot(l_in.size() + 1, abstain);
  ProbDist dist = restricted_softmax(teacher_logits, l_in, tau);
  dist.p.push_back(0.0);
  return dist;
}

ProbDist pseudo_label_md_ls(int y, std::span<const double> teacher_logits,
                            bool is_easy, double alpha, double tau) {
  if (is_easy) return pseudo_label_baseline(teacher_logits, tau);
  return smoothed_one_hot(static_cast<int>(teacher_logits.size()), y, alpha);
}

ProbDist pseudo_label_md_abstain(int y, std::span<const double> teacher_logits,
                                 bool is_easy, double tau) {
  const int L = static_cast<int>(teacher_logits.size());
  if (!is_easy) return one_hot(L + 1, L);
  (void)y;
  ProbDist dist = pseudo_label_baseline(teacher_logits, tau);
  dist.p.push_back(0.0);
  return dist;
}

ProbDist variant_pseudo_label(int y, std::span<const double> teacher_logits,
                              const DistillConfig& cfg, bool is_easy) {
  switch (cfg.variant) {
    case Variant::kBaseline:
      return pseudo_label_baseline(teacher_logits, cfg.tau);
    case Variant::kCd1:
      return pseudo_label_cd1(y, teacher_logits, cfg.alpha, cfg.l_in, cfg.tau);
    case Variant::kCd2:
      return pseudo_label_cd2(y, teacher_logits, cfg.l_in, cfg.tau);
    case Variant::kCd3:
      return pseudo_label_cd3(y, teacher_logits, cfg.l_in, cfg.tau);
    case Variant::kMdLs:
      return pseudo_label_md_ls(y, teacher_logits, is_easy, cfg.alpha, cfg.tau);
    case Variant::kMdAbstain:
      return pseudo_label_md_abstain(y, teacher_logits, is_easy, cfg.tau);
  }
  throw std::logic_error("variant_pseudo_label: unreachable");
}

ProbDist variant_true_target(int y, const DistillConfig& cfg, int num_classes,
                             bool is_easy) {
  switch (cfg.variant) {
    case Variant::kBaseline:
    case Variant::kCd1:
    case Variant::kMdLs:
      return one_hot(num_classes, y);
    case Variant::kCd2: {
      if (contains(cfg.l_in, y)) {
        return one_hot(cfg.l_in.size(), restricted_slot(cfg.l_in, y));
      }
      ProbDist dist;
      dist.p.assign(cfg.l_in.size(), 1.0 / static_cast<double>(cfg.l_in.size()));
      return dist;
    }
    case Variant::kCd3: {
      const std::size_t k = cfg.l_in.size() + 1;
      if (contains(cfg.l_in, y)) return one_hot(k, restricted_slot(cfg.l_in, y));
      return one_hot(k, k - 1);
    }
    case Variant::kMdAbstain: {
      const std::size_t k = static_cast<std::size_t>(num_classes) + 1;
      return is_easy ? one_hot(k, y) : one_hot(k, k - 1);
    }
  }
  throw std::logic_error("variant_true_target: unreachable");
}

double distill_objective(int y, std::span<const double> teacher_logits,
                         const LogitVector& student_logits,
                         const DistillConfig& cfg) {
  const int L = static_cast<int>(teacher_logits.size());
  validate_distill_config(cfg, L);
  if (static_cast<int>(student_logits.size()) !=
      variant_target_length(cfg, L)) {
    throw std::invalid_argument("distill_objective: student width mismatch");
  }

  bool is_easy = false;
  if (uses_margin_partition(cfg.variant)) {
    const double margin =
        cfg.margin_space == MarginSpace::kProbability
            ? teacher_margin(softmax(
                  LogitVector(teacher_logits.begin(), teacher_logits.end()),
                  cfg.tau))
            : raw_top2_gap(teacher_logits);
    is_easy = margin > cfg.rho_tr;
  }

  const ProbDist student = softmax(student_logits, cfg.tau);
  double loss = 0.0;
  if (cfg.a != 0.0) {
    loss += cfg.a *
            cross_entropy(variant_true_target(y, cfg, L, is_easy), student);
  }
  if (cfg.b != 0.0) {
    loss += cfg.b *
            cross_entropy(variant_pseudo_label(y, teacher_logits, cfg, is_easy),
                          student);
  }
  return loss;
}

namespace {

std::vector<bool> easy_mask_for(const std::vector<int>& labels,
                                const TeacherScoreCache& cache,
                                const DistillConfig& cfg) {
  if (uses_margin_partition(cfg.variant)) {
    return easy_mask_by_margin(cache, cfg.rho_tr, cfg.tau, cfg.margin_space);
  }
  // Class variants never consult the flag; anything index-aligned works.
  return std::vector<bool>(labels.size(), false);
}

}  // namespace

std::vector<ProbDist> build_pseudo_labels(const std::vector<int>& labels,
                                          const TeacherScoreCache& cache,
                                          const DistillConfig& cfg) {
  validate_distill_config(cfg, cache.num_classes);
  if (static_cast<int>(labels.size()) != cache.size()) {
    throw std::invalid_argument("build_pseudo_labels: cache/labels size mismatch");
  }
  const std::vector<bool> easy = easy_mask_for(labels, cache, cfg);
  std::vector<ProbDist> out;
  out.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out.push_back(variant_pseudo_label(labels[i],
                                       cache.row(static_cast<int>(i)), cfg,
                                       easy[i]));
  }
  return out;
}

std::vector<ProbDist> build_train_targets(const std::vector<int>& labels,
                                          const TeacherScoreCache& cache,
                                          const DistillConfig& cfg) {
  validate_distill_config(cfg, cache.num_classes);
  if (static_cast<int>(labels.size()) != cache.size()) {
    throw std::invalid_argument("build_train_targets: cache/labels size mismatch");
  }
  const std::vector<bool> easy = easy_mask_for(labels, cache, cfg);
  const double total = cfg.a + cfg.b;

  std::vector<ProbDist> out;
  out.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int y = labels[i];
    const auto row = cache.row(static_cast<int>(i));
    ProbDist target = variant_pseudo_label(y, row, cfg, easy[i]);
    if (cfg.a == 0.0) {
      out.push_back(std::move(target));
      continue;
    }
    const ProbDist truth =
        variant_true_target(y, cfg, cache.num_classes, easy[i]);
    for (std::size_t j = 0; j < target.size(); ++j) {
      target.p[j] = (cfg.a * truth.p[j] + cfg.b * target.p[j]) / total;
    }
    out.push_back(std::move(target));
  }
  return out;
}

Network distill_train(Network student, const Dataset& data,
                      const TeacherScoreCache& cache, const DistillConfig& cfg,
                      const TrainSpec& spec) {
  validate_distill_config(cfg, cache.num_classes);
  if (data.size() != cache.size()) {
    throw std::invalid_argument("distill_train: dataset/cache size mismatch");
  }
  if (data.num_classes != cache.num_classes) {
    throw std::invalid_argument("distill_train: dataset/cache class mismatch");
  }
  const int want = variant_target_length(cfg, cache.num_classes);
  if (student.output_width() != want) {
    std::ostringstream msg;
    msg << "distill_train: student output width " << student.output_width()
        << " does not match variant " << variant_name(cfg.variant)
        << " target length " << want;
    throw std::invalid_argument(msg.str());
  }

  const std::vector<ProbDist> targets =
      build_train_targets(data.labels, cache, cfg);
  std::vector<TrainExample> examples(data.size());
  for (int i = 0; i < data.size(); ++i) {
    const auto row = data.row(i);
    examples[i].x.assign(row.begin(), row.end());
    examples[i].target = targets[i];
  }
  return train(std::move(student), examples, spec, cfg.tau);
}

CheckpointMeta distill_meta(const DistillConfig& cfg) {
  char buf[64];
  CheckpointMeta meta;
  meta.emplace_back("variant", variant_name(cfg.variant));
  auto put = [&](const char* key, double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    meta.emplace_back(key, buf);
  };
  put("a", cfg.a);
  put("b", cfg.b);
  put("tau", cfg.tau);
  put("alpha", cfg.alpha);
  put("rho_tr", cfg.rho_tr);
  if (!cfg.l_in.empty()) {
    std::string joined;
    for (std::size_t i = 0; i < cfg.l_in.size(); ++i) {
      if (i) joined += ',';
      joined += std::to_string(cfg.l_in[i]);
    }
    meta.emplace_back("l_in", joined);
  }
  meta.emplace_back("margin_space", cfg.margin_space == MarginSpace::kLogit
                                        ? "logit"
                                        : "prob");
  return meta;
}

DistillConfig distill_config_from_meta(const CheckpointMeta& meta) {
  DistillConfig cfg;
  for (const auto& [key, value] : meta) {
    if (key == "variant") cfg.variant = parse_variant(value);
    else if (key == "a") cfg.a = std::strtod(value.c_str(), nullptr);
    else if (key == "b") cfg.b = std::strtod(value.c_str(), nullptr);
    else if (key == "tau") cfg.tau = std::strtod(value.c_str(), nullptr);
    else if (key == "alpha") cfg.alpha = std::strtod(value.c_str(), nullptr);
    else if (key == "rho_tr") cfg.rho_tr = std::strtod(value.c_str(), nullptr);
    else if (key == "margin_space") {
      cfg.margin_space =
          value == "logit" ? MarginSpace::kLogit : MarginSpace::kProbability;
    } else if (key == "l_in") {
      cfg.l_in.clear();
      std::istringstream ls(value);
      std::string part;
      while (std::getline(ls, part, ',')) cfg.l_in.push_back(std::stoi(part));
    }
  }
  return cfg;
}

// ----------------------------------------------------------------------
// Score cache I/O
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
  if (!is) throw std::runtime_error("score cache: truncated body");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) {
    bits |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  }
  return std::bit_cast<double>(bits);
}

}  // namespace

void save_score_cache(const TeacherScoreCache& cache, const std::string& path) {
  if (cache.teacher_tag.find(' ') != std::string::npos) {
    throw std::invalid_argument("score cache: teacher tag must not contain spaces");
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);

  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", cache.tau);
  os << "scorev1 n=" << cache.size() << " L=" << cache.num_classes
     << " tau=" << buf << " teacher=" << cache.teacher_tag << '\n';
  for (double v : cache.logits) write_f64_le(os, v);
  if (!os) throw std::runtime_error("write failed: " + path);
}

TeacherScoreCache load_score_cache(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open score cache: " + path);

  std::string header;
  if (!std::getline(is, header)) {
    throw std::runtime_error("score cache: missing header: " + path);
  }
  std::istringstream hs(header);
  std::string magic;
  hs >> magic;
  if (magic != "scorev1") {
    throw std::runtime_error("score cache: bad magic in " + path);
  }

  TeacherScoreCache cache;
  long n = -1;
  std::string token;
  while (hs >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("score cache: malformed header token '" + token +
                               "'");
    }
    const std::string key = token.substr(0, eq);
    const std::string value = token.substr(eq + 1);
    if (key == "n") n = std::stol(value);
    else if (key == "L") cache.num_classes = std::stoi(value);
    else if (key == "tau") cache.tau = std::strtod(value.c_str(), nullptr);
    else if (key == "teacher") cache.teacher_tag = value;
    else throw std::runtime_error("score cache: unknown header key '" + key + "'");
  }
  if (n < 0 || cache.num_classes <= 0) {
    throw std::runtime_error("score cache: header missing n/L: " + path);
  }

  cache.logits.resize(static_cast<std::size_t>(n) * cache.num_classes);
  for (double& v : cache.logits) v = read_f64_le(is);
  char extra;
  if (is.read(&extra, 1)) {
    throw std::runtime_error("score cache: trailing bytes: " + path);
  }
  return cache;
}

}  // namespace cdist
