#include "cdist/cascade.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>

namespace cdist {

int LabelSpace::to_global(int slot) const {
  if (slot < 0 || slot >= real_slots()) {
    throw std::invalid_argument("label space: slot " + std::to_string(slot) +
                                " is not a real class slot");
  }
  return restricted() ? l_in[slot] : slot;
}

LabelSpace label_space_for(const DistillConfig& cfg, int num_classes) {
  validate_distill_config(cfg, num_classes);
  LabelSpace space;
  space.num_classes = num_classes;
  switch (cfg.variant) {
    case Variant::kBaseline:
    case Variant::kCd1:
    case Variant::kMdLs:
      break;
    case Variant::kCd2:
      space.l_in = cfg.l_in;
      break;
    case Variant::kCd3:
      space.l_in = cfg.l_in;
      space.has_abstain = true;
      break;
    case Variant::kMdAbstain:
      space.has_abstain = true;
      break;
  }
  return space;
}

DelegationPolicy DelegationPolicy::class_based(std::vector<int> l_in) {
  DelegationPolicy p;
  p.kind = Kind::kClassBased;
  p.l_in = std::move(l_in);
  return p;
}

DelegationPolicy DelegationPolicy::margin_based(double rho) {
  DelegationPolicy p;
  p.kind = Kind::kMarginBased;
  p.rho = rho;
  return p;
}

DelegationPolicy DelegationPolicy::abstain_based() {
  DelegationPolicy p;
  p.kind = Kind::kAbstainBased;
  return p;
}

DelegationPolicy DelegationPolicy::abstain_margin(double rho) {
  DelegationPolicy p;
  p.kind = Kind::kAbstainMargin;
  p.rho = rho;
  return p;
}

std::string policy_kind_name(DelegationPolicy::Kind kind) {
  switch (kind) {
    case DelegationPolicy::Kind::kClassBased: return "CLASS_BASED";
    case DelegationPolicy::Kind::kMarginBased: return "MARGIN_BASED";
    case DelegationPolicy::Kind::kAbstainBased: return "ABSTAIN_BASED";
    case DelegationPolicy::Kind::kAbstainMargin: return "ABSTAIN_MARGIN";
  }
  throw std::logic_error("policy_kind_name: unreachable");
}

void validate_policy(const DelegationPolicy& policy, int num_classes) {
  const bool uses_rho = policy.kind == DelegationPolicy::Kind::kMarginBased ||
                        policy.kind == DelegationPolicy::Kind::kAbstainMargin;
  if (uses_rho && !(policy.rho >= 0.0)) {
    throw std::invalid_argument("delegation policy: rho must be >= 0");
  }
  if (policy.kind == DelegationPolicy::Kind::kClassBased) {
    if (policy.l_in.empty()) {
      throw std::invalid_argument("delegation policy: l_in must be nonempty");
    }
    if (!std::is_sorted(policy.l_in.begin(), policy.l_in.end()) ||
        std::adjacent_find(policy.l_in.begin(), policy.l_in.end()) !=
            policy.l_in.end()) {
      throw std::invalid_argument(
          "delegation policy: l_in must be sorted and unique");
    }
    if (policy.l_in.front() < 0 || policy.l_in.back() >= num_classes) {
      throw std::invalid_argument("delegation policy: l_in class out of range");
    }
  } else if (!policy.l_in.empty()) {
    throw std::invalid_argument("delegation policy: l_in only valid for CLASS_BASED");
  }
}

void validate_policy_space(const DelegationPolicy& policy,
                           const LabelSpace& space) {
  const std::string kind = policy_kind_name(policy.kind);
  switch (policy.kind) {
    case DelegationPolicy::Kind::kClassBased:
      if (space.restricted() || space.has_abstain) {
        throw std::invalid_argument(
            kind + " routing needs a full " +
            std::to_string(space.num_classes) + "-way student");
      }
      break;
    case DelegationPolicy::Kind::kMarginBased:
      if (space.has_abstain) {
        throw std::invalid_argument(
            kind + " routing does not apply to abstain-slot students");
      }
      if (space.width() < 2) {
        throw std::invalid_argument(
            kind + " routing is undefined for a single-class student");
      }
      break;
    case DelegationPolicy::Kind::kAbstainBased:
    case DelegationPolicy::Kind::kAbstainMargin:
      if (!space.has_abstain) {
        throw std::invalid_argument(
            kind + " routing needs a student with an abstain slot");
      }
      break;
  }
}

TeacherOracle TeacherOracle::trained(Network net) {
  if (net.output_width() < 2) {
    throw std::invalid_argument("teacher network must emit >= 2 classes");
  }
  TeacherOracle t;
  t.num_classes_ = net.output_width();
  t.net_.emplace(std::move(net));
  return t;
}

TeacherOracle TeacherOracle::oracle(LabelSource source, int num_classes,
                                    double eta) {
  if (num_classes < 2) {
    throw std::invalid_argument("oracle teacher needs >= 2 classes");
  }
  if (!source) {
    throw std::invalid_argument("oracle teacher needs a label source");
  }
  if (!(eta > 1.0 / num_classes) || eta > 1.0) {
    throw std::invalid_argument("oracle teacher: eta must be in (1/L, 1]");
  }
  TeacherOracle t;
  t.source_ = std::move(source);
  t.num_classes_ = num_classes;
  t.eta_ = eta;
  return t;
}

ProbDist TeacherOracle::predict(std::span<const double> x) const {
  if (net_) return softmax(net_->forward(x), 1.0);
  const int y = source_(x);
  if (y < 0 || y >= num_classes_) {
    throw std::out_of_range("oracle label source returned a bad label");
  }
  ProbDist dist;
  dist.p.assign(num_classes_, (1.0 - eta_) / (num_classes_ - 1));
  dist.p[y] = eta_;
  return dist;
}

int TeacherOracle::predict_label(std::span<const double> x) const {
  if (net_) return argmax(net_->forward(x));
  const int y = source_(x);
  if (y < 0 || y >= num_classes_) {
    throw std::out_of_range("oracle label source returned a bad label");
  }
  return y;
}

LogitVector TeacherOracle::score(std::span<const double> x) const {
  if (net_) return net_->forward(x);
  return oracle_logits(predict_label(x), num_classes_, eta_);
}

LogitVector oracle_logits(int y, int num_classes, double eta) {
  if (num_classes < 2 || y < 0 || y >= num_classes) {
    throw std::invalid_argument("oracle_logits: bad label/class count");
  }
  if (!(eta > 1.0 / num_classes) || eta > 1.0) {
    throw std::invalid_argument("oracle_logits: eta must be in (1/L, 1]");
  }
  const double off = (1.0 - eta) / (num_classes - 1);
  const double low = off > 0.0 ? std::max(std::log(off), -700.0) : -700.0;
  LogitVector logits(num_classes, low);
  logits[y] = std::log(eta);
  return logits;
}

TeacherOracle::LabelSource dataset_label_source(const Dataset& data) {
  auto table = std::make_shared<std::unordered_map<std::string, int>>();
  table->reserve(static_cast<std::size_t>(data.size()));
  for (int i = 0; i < data.size(); ++i) {
    const auto row = data.row(i);
    std::string key(reinterpret_cast<const char*>(row.data()),
                    row.size() * sizeof(double));
    table->emplace(std::move(key), data.labels[i]);
  }
  return [table](std::span<const double> x) -> int {
    std::string key(reinterpret_cast<const char*>(x.data()),
                    x.size() * sizeof(double));
    const auto it = table->find(key);
    if (it == table->end()) {
      throw std::invalid_argument(
          "oracle label source: feature vector not in the reference dataset");
    }
    return it->second;
  };
}

double student_margin(const ProbDist& dist) { return top2_margin(dist); }

Decider delegate_class_based(const LogitVector& student_logits,
                             const std::vector<int>& l_in) {
  const int label = argmax(student_logits);
  return std::binary_search(l_in.begin(), l_in.end(), label)
             ? Decider::kStudent
             : Decider::kTeacher;
}

Decider delegate_margin_based(const ProbDist& student_dist, double rho) {
  return student_margin(student_dist) >= rho ? Decider::kStudent
                                             : Decider::kTeacher;
}

Decider delegate_abstain(const ProbDist& student_dist) {
  if (student_dist.size() < 2) {
    throw std::invalid_argument("delegate_abstain: need >= 2 slots");
  }
  const int last = static_cast<int>(student_dist.size()) - 1;
  return argmax(student_dist.p) == last ? Decider::kTeacher : Decider::kStudent;
}

Decider delegate_abstain_margin(const ProbDist& student_dist, double rho) {
  if (delegate_abstain(student_dist) == Decider::kTeacher) {
    return Decider::kTeacher;
  }
  return student_margin(student_dist) >= rho ? Decider::kStudent
                                             : Decider::kTeacher;
}

Decision two_stage_predict(const Network& student, const LabelSpace& space,
                           const TeacherOracle& teacher,
                           const DelegationPolicy& policy,
                           std::span<const double> x) {
  if (space.num_classes != teacher.num_classes()) {
    throw std::invalid_argument(
        "two_stage_predict: student label space and teacher disagree on L");
  }
  if (student.output_width() != space.width()) {
    throw std::invalid_argument(
        "two_stage_predict: student width does not match its label space");
  }
  validate_policy(policy, space.num_classes);
  validate_policy_space(policy, space);

  const LogitVector logits = student.forward(x);
  const ProbDist dist = softmax(logits, 1.0);
  const int top = argmax(dist.p);

  Decision d;
  d.student_margin = student_margin(dist);
  d.abstained = space.has_abstain && top == space.abstain_slot();

  switch (policy.kind) {
    case DelegationPolicy::Kind::kClassBased:
      d.decider = delegate_class_based(logits, policy.l_in);
      break;
    case DelegationPolicy::Kind::kMarginBased:
      d.decider = delegate_margin_based(dist, policy.rho);
      break;
    case DelegationPolicy::Kind::kAbstainBased:
      d.decider = delegate_abstain(dist);
      break;
    case DelegationPolicy::Kind::kAbstainMargin:
      d.decider = delegate_abstain_margin(dist, policy.rho);
      break;
  }

  d.final_label = d.decider == Decider::kTeacher ? teacher.predict_label(x)
                                                 : space.to_global(top);
  return d;
}

int bayes_reject(const ProbDist& posterior, double c) {
  require_prob_dist(posterior, "bayes_reject posterior");
  if (!(c > 0.0) || c > 1.0) {
    throw std::invalid_argument("bayes_reject: c must be in (0, 1]");
  }
  const int top = argmax(posterior.p);
  return posterior.p[top] <= 1.0 - c ? kAbstainLabel : top;
}

}  // namespace cdist
