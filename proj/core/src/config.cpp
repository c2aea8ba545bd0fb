#include "cdist/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace cdist {

namespace {

std::string trim(const std::string& s) {
  std::size_t lo = s.find_first_not_of(" \t\r");
  if (lo == std::string::npos) return "";
  std::size_t hi = s.find_last_not_of(" \t\r");
  return s.substr(lo, hi - lo + 1);
}

double parse_double(const std::string& v) {
  if (v.empty()) throw std::runtime_error("empty number");
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (end != v.c_str() + v.size()) {
    throw std::runtime_error("bad number '" + v + "'");
  }
  return x;
}

long long parse_ll(const std::string& v) {
  if (v.empty()) throw std::runtime_error("empty integer");
  char* end = nullptr;
  const long long x = std::strtoll(v.c_str(), &end, 10);
  if (end != v.c_str() + v.size()) {
    throw std::runtime_error("bad integer '" + v + "'");
  }
  return x;
}

int parse_int(const std::string& v) { return static_cast<int>(parse_ll(v)); }

std::uint64_t parse_u64(const std::string& v) {
  if (v.empty()) throw std::runtime_error("empty integer");
  if (v[0] == '-') throw std::runtime_error("seed must be nonnegative");
  char* end = nullptr;
  const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
  if (end != v.c_str() + v.size()) {
    throw std::runtime_error("bad integer '" + v + "'");
  }
  return x;
}

template <typename T, typename Parse>
std::vector<T> parse_list(const std::string& v, Parse parse) {
  std::vector<T> out;
  if (trim(v).empty()) return out;
  std::istringstream ss(v);
  std::string part;
  while (std::getline(ss, part, ',')) out.push_back(parse(trim(part)));
  return out;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

void apply_key(ExperimentConfig& cfg, const std::string& key,
               const std::string& value) {
  if (key == "data.num_classes") cfg.data.num_classes = parse_int(value);
  else if (key == "data.dim") cfg.data.dim = parse_int(value);
  else if (key == "data.zipf_s") cfg.data.zipf_s = parse_double(value);
  else if (key == "data.radius") cfg.data.radius = parse_double(value);
  else if (key == "data.sigma") cfg.data.sigma = parse_double(value);
  else if (key == "data.n_train") cfg.data.n_train = parse_int(value);
  else if (key == "data.n_test") cfg.data.n_test = parse_int(value);
  else if (key == "teacher.mode") cfg.teacher_mode = value;
  else if (key == "teacher.eta") cfg.teacher_eta = parse_double(value);
  else if (key == "teacher.widths") cfg.teacher_widths = parse_list<int>(value, parse_int);
  else if (key == "teacher.learning_rate") cfg.teacher_train.learning_rate = parse_double(value);
  else if (key == "teacher.epochs") cfg.teacher_train.epochs = parse_int(value);
  else if (key == "teacher.batch_size") cfg.teacher_train.batch_size = parse_int(value);
  else if (key == "student.widths") cfg.student_widths = parse_list<int>(value, parse_int);
  else if (key == "student.learning_rate") cfg.student_train.learning_rate = parse_double(value);
  else if (key == "student.epochs") cfg.student_train.epochs = parse_int(value);
  else if (key == "student.batch_size") cfg.student_train.batch_size = parse_int(value);
  else if (key == "distill.variant") cfg.distill.variant = parse_variant(value);
  else if (key == "distill.a") cfg.distill.a = parse_double(value);
  else if (key == "distill.b") cfg.distill.b = parse_double(value);
  else if (key == "distill.tau") cfg.distill.tau = parse_double(value);
  else if (key == "distill.alpha") cfg.distill.alpha = parse_double(value);
  else if (key == "distill.rho_tr") cfg.distill.rho_tr = parse_double(value);
  else if (key == "distill.l_in") cfg.distill.l_in = parse_list<int>(value, parse_int);
  else if (key == "distill.margin_space") {
    if (value == "prob") cfg.distill.margin_space = MarginSpace::kProbability;
    else if (value == "logit") cfg.distill.margin_space = MarginSpace::kLogit;
    else throw std::runtime_error("distill.margin_space must be prob or logit");
  } else if (key == "distill.tag") cfg.distill_tag = value;
  else if (key == "sweep.policy") {
    if (value == "MARGIN_BASED") cfg.sweep_policy = DelegationPolicy::Kind::kMarginBased;
    else if (value == "ABSTAIN_MARGIN") cfg.sweep_policy = DelegationPolicy::Kind::kAbstainMargin;
    else throw std::runtime_error("sweep.policy must be MARGIN_BASED or ABSTAIN_MARGIN");
  } else if (key == "sweep.rho_grid") cfg.rho_grid = parse_list<double>(value, parse_double);
  else if (key == "sweep.test_set") cfg.sweep_test_set = value;
  else if (key == "eval.in_domain") cfg.eval_in_domain = value;
  else if (key == "eval.margin_threshold") cfg.eval_margin_threshold = parse_double(value);
  else if (key == "report.rho") cfg.report_rho = parse_double(value);
  else if (key == "cost.student") cfg.cost.student_cost = parse_double(value);
  else if (key == "cost.teacher") cfg.cost.teacher_cost = parse_double(value);
  else if (key == "cost.unit") cfg.cost.unit = value;
  else if (key == "out_dir") cfg.out_dir = value;
  else if (key == "seed") cfg.seed = parse_u64(value);
  else throw std::runtime_error("unknown config key '" + key + "'");
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

template <typename T, typename Fmt>
std::string join(const std::vector<T>& xs, Fmt fmt) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    out += fmt(xs[i]);
  }
  return out;
}

void check_class_set(const std::vector<int>& l_in, int num_classes,
                     const char* key) {
  if (!std::is_sorted(l_in.begin(), l_in.end()) ||
      std::adjacent_find(l_in.begin(), l_in.end()) != l_in.end()) {
    throw std::invalid_argument(std::string(key) +
                                " must be sorted and duplicate-free");
  }
  if (!l_in.empty() && (l_in.front() < 0 || l_in.back() >= num_classes)) {
    throw std::invalid_argument(std::string(key) + " has classes outside [0, L)");
  }
}

void check_train_spec(const TrainSpec& spec, const char* who) {
  if (!(spec.learning_rate > 0.0)) {
    throw std::invalid_argument(std::string(who) + ".learning_rate must be > 0");
  }
  if (spec.epochs < 0) {
    throw std::invalid_argument(std::string(who) + ".epochs must be >= 0");
  }
  if (spec.batch_size < 1) {
    throw std::invalid_argument(std::string(who) + ".batch_size must be >= 1");
  }
}

}  // namespace

ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config: " + path);

  ExperimentConfig cfg;
  std::vector<std::string> seen;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    const auto fail = [&](const std::string& what) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + what);
    };
    if (eq == std::string::npos) fail("expected key=value");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty()) fail("empty key");
    if (std::find(seen.begin(), seen.end(), key) != seen.end()) {
      fail("duplicate key '" + key + "'");
    }
    seen.push_back(key);
    try {
      apply_key(cfg, key, value);
    } catch (const std::exception& e) {
      fail(e.what());
    }
  }

  if (cfg.distill_tag.empty()) {
    cfg.distill_tag = lower(variant_name(cfg.distill.variant));
  }
  validate_config(cfg);
  return cfg;
}

void validate_config(const ExperimentConfig& cfg) {
  MixtureSpec data = cfg.data;
  data.seed = 0;
  validate_mixture_spec(data);
  validate_distill_config(cfg.distill, cfg.data.num_classes);

  if (cfg.teacher_mode != "trained" && cfg.teacher_mode != "oracle") {
    throw std::invalid_argument("teacher.mode must be trained or oracle");
  }
  if (cfg.teacher_mode == "oracle" &&
      (!(cfg.teacher_eta > 1.0 / cfg.data.num_classes) || cfg.teacher_eta > 1.0)) {
    throw std::invalid_argument("teacher.eta must be in (1/L, 1]");
  }
  if (cfg.teacher_mode == "trained") {
    if (cfg.teacher_widths.size() < 2) {
      throw std::invalid_argument("teacher.widths needs >= 2 entries");
    }
    if (cfg.teacher_widths.front() != cfg.data.dim) {
      throw std::invalid_argument("teacher.widths must start at data.dim");
    }
    if (cfg.teacher_widths.back() != cfg.data.num_classes) {
      throw std::invalid_argument("teacher.widths must end at data.num_classes");
    }
    check_train_spec(cfg.teacher_train, "teacher");
  }

  if (cfg.student_widths.size() < 2) {
    throw std::invalid_argument("student.widths needs >= 2 entries");
  }
  if (cfg.student_widths.front() != cfg.data.dim) {
    throw std::invalid_argument("student.widths must start at data.dim");
  }
  const int want =
      variant_target_length(cfg.distill, cfg.data.num_classes);
  if (cfg.student_widths.back() != want) {
    throw std::invalid_argument(
        "student.widths must end at " + std::to_string(want) + " for variant " +
        variant_name(cfg.distill.variant));
  }
  check_train_spec(cfg.student_train, "student");
  check_class_set(cfg.distill.l_in, cfg.data.num_classes, "distill.l_in");

  if (cfg.rho_grid.empty()) {
    throw std::invalid_argument("sweep.rho_grid must be nonempty");
  }
  if (!std::is_sorted(cfg.rho_grid.begin(), cfg.rho_grid.end())) {
    throw std::invalid_argument("sweep.rho_grid must be ascending");
  }
  if (!(cfg.rho_grid.front() >= 0.0)) {
    throw std::invalid_argument("sweep.rho_grid values must be >= 0");
  }
  if (cfg.sweep_test_set != "balanced" && cfg.sweep_test_set != "imbalanced") {
    throw std::invalid_argument("sweep.test_set must be balanced or imbalanced");
  }
  if (cfg.eval_in_domain != "class" && cfg.eval_in_domain != "margin") {
    throw std::invalid_argument("eval.in_domain must be class or margin");
  }
  if (!(cfg.eval_margin_threshold >= 0.0)) {
    throw std::invalid_argument("eval.margin_threshold must be >= 0");
  }
  if (!(cfg.report_rho >= 0.0)) {
    throw std::invalid_argument("report.rho must be >= 0");
  }
  validate_cost_model(cfg.cost);
  if (cfg.cost.unit.empty() ||
      cfg.cost.unit.find_first_of(", \t") != std::string::npos) {
    throw std::invalid_argument("cost.unit must be nonempty without commas/spaces");
  }

  if (cfg.out_dir.empty()) throw std::invalid_argument("out_dir must be set");
  if (cfg.distill_tag.empty()) {
    throw std::invalid_argument("distill.tag must be nonempty");
  }
  for (const char c : cfg.distill_tag) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '_' || c == '-' || c == '.';
    if (!ok) {
      throw std::invalid_argument(
          "distill.tag may only use letters, digits, '_', '-', '.'");
    }
  }
}

std::string serialize_config(const ExperimentConfig& cfg) {
  const auto num = [](double v) { return fmt_double(v); };
  const auto ints = [](const std::vector<int>& xs) {
    return join(xs, [](int v) { return std::to_string(v); });
  };

  std::ostringstream os;
  os << "data.num_classes=" << cfg.data.num_classes << '\n'
     << "data.dim=" << cfg.data.dim << '\n'
     << "data.zipf_s=" << num(cfg.data.zipf_s) << '\n'
     << "data.radius=" << num(cfg.data.radius) << '\n'
     << "data.sigma=" << num(cfg.data.sigma) << '\n'
     << "data.n_train=" << cfg.data.n_train << '\n'
     << "data.n_test=" << cfg.data.n_test << '\n'
     << "teacher.mode=" << cfg.teacher_mode << '\n'
     << "teacher.eta=" << num(cfg.teacher_eta) << '\n'
     << "teacher.widths=" << ints(cfg.teacher_widths) << '\n'
     << "teacher.learning_rate=" << num(cfg.teacher_train.learning_rate) << '\n'
     << "teacher.epochs=" << cfg.teacher_train.epochs << '\n'
     << "teacher.batch_size=" << cfg.teacher_train.batch_size << '\n'
     << "student.widths=" << ints(cfg.student_widths) << '\n'
     << "student.learning_rate=" << num(cfg.student_train.learning_rate) << '\n'
     << "student.epochs=" << cfg.student_train.epochs << '\n'
     << "student.batch_size=" << cfg.student_train.batch_size << '\n'
     << "distill.variant=" << variant_name(cfg.distill.variant) << '\n'
     << "distill.a=" << num(cfg.distill.a) << '\n'
     << "distill.b=" << num(cfg.distill.b) << '\n'
     << "distill.tau=" << num(cfg.distill.tau) << '\n'
     << "distill.alpha=" << num(cfg.distill.alpha) << '\n'
     << "distill.rho_tr=" << num(cfg.distill.rho_tr) << '\n'
     << "distill.l_in=" << ints(cfg.distill.l_in) << '\n'
     << "distill.margin_space="
     << (cfg.distill.margin_space == MarginSpace::kLogit ? "logit" : "prob")
     << '\n'
     << "distill.tag=" << cfg.distill_tag << '\n'
     << "sweep.policy=" << policy_kind_name(cfg.sweep_policy) << '\n'
     << "sweep.rho_grid=" << join(cfg.rho_grid, num) << '\n'
     << "sweep.test_set=" << cfg.sweep_test_set << '\n'
     << "eval.in_domain=" << cfg.eval_in_domain << '\n'
     << "eval.margin_threshold=" << num(cfg.eval_margin_threshold) << '\n'
     << "report.rho=" << num(cfg.report_rho) << '\n'
     << "cost.student=" << num(cfg.cost.student_cost) << '\n'
     << "cost.teacher=" << num(cfg.cost.teacher_cost) << '\n'
     << "cost.unit=" << cfg.cost.unit << '\n'
     << "out_dir=" << cfg.out_dir << '\n'
     << "seed=" << cfg.seed << '\n';
  return os.str();
}

}  // namespace cdist
