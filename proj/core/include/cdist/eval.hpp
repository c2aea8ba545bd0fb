#pragma once

#include <string>
#include <vector>

#include "cdist/cascade.hpp"
#include "cdist/datagen.hpp"
#include "cdist/network.hpp"

namespace cdist {

// Abstract per-inference costs. Defaults are the shipped FLOP presets for a
// small/large pair; any nonnegative unit works.
struct CostModel {
  double student_cost = 72e6;
  double teacher_cost = 478e9;
  std::string unit = "FLOPs";
};

void validate_cost_model(const CostModel& cost);

struct TradeoffPoint {
  double rho = 0.0;
  double fraction_student = 0.0;
  double overall_acc = 0.0;
  double in_domain_acc = 0.0;
  double expected_cost = 0.0;
};

// Marks which test instances count as in-domain, either by class membership
// or by the teacher's confidence margin (at least `threshold`).
struct InDomainMask {
  enum class Kind { kByClass, kByTeacherMargin };

  Kind kind = Kind::kByClass;
  std::vector<bool> member;
  std::vector<int> l_in;    // kByClass
  double threshold = 0.4;   // kByTeacherMargin

  static InDomainMask by_class(const std::vector<int>& labels,
                               std::vector<int> l_in, int num_classes);
  static InDomainMask by_teacher_margin(const TeacherOracle& teacher,
                                        const Dataset& data,
                                        double threshold = 0.4);

  int size() const { return static_cast<int>(member.size()); }
  int count() const;
};

// Fraction of decisions whose final label matches. Empty input throws.
double accuracy(const std::vector<Decision>& decisions,
                const std::vector<int>& labels);

struct InDomainStats {
  double accuracy = 0.0;
  double fraction_student = 0.0;
  bool defined = true;  // false (with NaN stats) when the mask is empty
};

// Accuracy restricted to masked instances plus the fraction of them the
// student decided.
InDomainStats in_domain_accuracy(const std::vector<Decision>& decisions,
                                 const std::vector<int>& labels,
                                 const InDomainMask& mask);

// student_cost + fraction_delegated * teacher_cost; the student always runs.
double expected_cost(const CostModel& cost, double fraction_delegated);

// Threshold sweep over an ascending rho grid for the margin-family policies
// (kMarginBased or kAbstainMargin). Student forwards are computed once; the
// teacher is consulted only on instances some grid point delegates.
std::vector<TradeoffPoint> sweep(const Network& student,
                                 const LabelSpace& space,
                                 const TeacherOracle& teacher,
                                 const Dataset& testset,
                                 const InDomainMask& mask,
                                 DelegationPolicy::Kind family,
                                 const std::vector<double>& rho_grid,
                                 const CostModel& cost);

struct LatencyStats {
  double median_seconds = 0.0;  // per instance
  double p90_seconds = 0.0;
};

// Wall-clock forward cost per instance over >= 3 repetitions of the full
// testset. Self-relative numbers only; never mixed with abstract cost units.
LatencyStats measure_latency(const Network& net, const Dataset& testset,
                             int repetitions);

// Writes <stem>.csv (header rho,fraction_student,overall_acc,in_domain_acc,
// expected_cost,unit; 6-decimal floats; \n endings) and <stem>.svg with one
// polyline vertex per point for the (fraction_student, accuracy) and
// (expected_cost, accuracy) series. Byte-deterministic given inputs.
void emit_report(const std::vector<TradeoffPoint>& points,
                 const std::string& stem, const std::string& unit = "FLOPs");

}  // namespace cdist
