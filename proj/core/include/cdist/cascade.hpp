#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "cdist/datagen.hpp"
#include "cdist/distill.hpp"
#include "cdist/network.hpp"
#include "cdist/prob.hpp"

namespace cdist {

// Returned by bayes_reject when no class clears the rejection threshold.
inline constexpr int kAbstainLabel = -1;

// The label space a student's output row lives in. A restricted space maps
// slot k to the k-th smallest class of l_in; an abstain space appends one
// trailing reject slot that must never surface as a final label.
struct LabelSpace {
  int num_classes = 0;    // global class count L
  std::vector<int> l_in;  // nonempty => restricted to these classes
  bool has_abstain = false;

  bool restricted() const { return !l_in.empty(); }
  int real_slots() const {
    return restricted() ? static_cast<int>(l_in.size()) : num_classes;
  }
  int width() const { return real_slots() + (has_abstain ? 1 : 0); }
  int abstain_slot() const { return has_abstain ? real_slots() : -1; }
  int to_global(int slot) const;  // real slot -> global class index
};

// Label space produced by training a student under the given config.
LabelSpace label_space_for(const DistillConfig& cfg, int num_classes);

enum class Decider { kStudent, kTeacher };

struct DelegationPolicy {
  enum class Kind { kClassBased, kMarginBased, kAbstainBased, kAbstainMargin };

  Kind kind = Kind::kMarginBased;
  double rho = 0.0;        // kMarginBased, kAbstainMargin
  std::vector<int> l_in;   // kClassBased only

  static DelegationPolicy class_based(std::vector<int> l_in);
  static DelegationPolicy margin_based(double rho);
  static DelegationPolicy abstain_based();
  static DelegationPolicy abstain_margin(double rho);
};

std::string policy_kind_name(DelegationPolicy::Kind kind);

void validate_policy(const DelegationPolicy& policy, int num_classes);

// Rejects policy/label-space pairings that the routing rules cannot serve:
// class routing needs a full L-way student, margin routing any non-abstain
// space with >= 2 slots, abstain routing an abstain slot.
void validate_policy_space(const DelegationPolicy& policy,
                           const LabelSpace& space);

struct Decision {
  int final_label = 0;  // always a global class index
  Decider decider = Decider::kStudent;
  double student_margin = 0.0;
  bool abstained = false;  // student's argmax hit the abstain slot
};

// Second-stage model: either a trained network scored at tau=1 or an ideal
// teacher that knows the true label and spreads 1-eta over the other classes.
class TeacherOracle {
 public:
  using LabelSource = std::function<int(std::span<const double>)>;

  static TeacherOracle trained(Network net);
  // Requires eta in (1/L, 1] so the true label is always the argmax.
  static TeacherOracle oracle(LabelSource source, int num_classes,
                              double eta = 1.0);

  bool is_oracle() const { return !net_.has_value(); }
  int num_classes() const { return num_classes_; }
  double eta() const { return eta_; }

  ProbDist predict(std::span<const double> x) const;
  int predict_label(std::span<const double> x) const;
  // Raw logits for score caches: network outputs, or clamped log-probs of
  // the eta distribution for the ideal mode.
  LogitVector score(std::span<const double> x) const;

 private:
  TeacherOracle() = default;

  std::optional<Network> net_;
  LabelSource source_;
  int num_classes_ = 0;
  double eta_ = 1.0;
};

// Logit row whose softmax is the eta distribution for true label y; the
// zero-probability case (eta = 1) is floored at -700 to stay finite.
LogitVector oracle_logits(int y, int num_classes, double eta);

// Exact-match lookup from feature row to label over a fixed dataset; throws
// when asked about a vector it has never seen.
TeacherOracle::LabelSource dataset_label_source(const Dataset& data);

// Student's top1-top2 probability gap; same contract as teacher_margin.
double student_margin(const ProbDist& dist);

// STUDENT iff argmax(student_logits) lies in l_in.
Decider delegate_class_based(const LogitVector& student_logits,
                             const std::vector<int>& l_in);

// STUDENT iff margin >= rho (non-strict).
Decider delegate_margin_based(const ProbDist& student_dist, double rho);

// TEACHER iff the trailing abstain slot wins the argmax.
Decider delegate_abstain(const ProbDist& student_dist);

// STUDENT iff a real class wins the argmax AND the margin over the full
// distribution is >= rho.
Decider delegate_abstain_margin(const ProbDist& student_dist, double rho);

// Runs the student forward at tau=1, applies the policy, and falls back to
// the teacher when the policy fires. Restricted argmaxes are mapped back to
// global class indices; the abstain slot never leaks into final_label.
Decision two_stage_predict(const Network& student, const LabelSpace& space,
                           const TeacherOracle& teacher,
                           const DelegationPolicy& policy,
                           std::span<const double> x);

// Reject-option reference rule: kAbstainLabel iff max posterior <= 1 - c,
// else the argmax. c is the rejection cost, in (0, 1].
int bayes_reject(const ProbDist& posterior, double c);

}  // namespace cdist
