#include "cdist/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "cdist/parallel.hpp"

namespace cdist {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

void require_sorted_unique_classes(const std::vector<int>& l_in,
                                   int num_classes, const char* who) {
  if (l_in.empty()) {
    throw std::invalid_argument(std::string(who) + ": l_in must be nonempty");
  }
  if (!std::is_sorted(l_in.begin(), l_in.end()) ||
      std::adjacent_find(l_in.begin(), l_in.end()) != l_in.end()) {
    throw std::invalid_argument(std::string(who) +
                                ": l_in must be sorted and unique");
  }
  if (l_in.front() < 0 || l_in.back() >= num_classes) {
    throw std::invalid_argument(std::string(who) + ": l_in class out of range");
  }
}

}  // namespace

void validate_cost_model(const CostModel& cost) {
  if (!(cost.student_cost >= 0.0) || !(cost.teacher_cost >= 0.0)) {
    throw std::invalid_argument("cost model: costs must be nonnegative");
  }
}

InDomainMask InDomainMask::by_class(const std::vector<int>& labels,
                                    std::vector<int> l_in, int num_classes) {
  require_sorted_unique_classes(l_in, num_classes, "in-domain mask");
  InDomainMask mask;
  mask.kind = Kind::kByClass;
  mask.l_in = std::move(l_in);
  mask.member.resize(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= num_classes) {
      throw std::invalid_argument("in-domain mask: label out of range");
    }
    mask.member[i] =
        std::binary_search(mask.l_in.begin(), mask.l_in.end(), labels[i]);
  }
  return mask;
}

InDomainMask InDomainMask::by_teacher_margin(const TeacherOracle& teacher,
                                             const Dataset& data,
                                             double threshold) {
  if (!(threshold >= 0.0)) {
    throw std::invalid_argument("in-domain mask: threshold must be >= 0");
  }
  if (data.num_classes != teacher.num_classes()) {
    throw std::invalid_argument("in-domain mask: dataset/teacher class mismatch");
  }
  InDomainMask mask;
  mask.kind = Kind::kByTeacherMargin;
  mask.threshold = threshold;
  mask.member.resize(data.size());

  std::vector<double> margins(data.size());
  parallel_for(data.size(), [&](int i) {
    margins[i] = top2_margin(teacher.predict(data.row(i)));
  });
  for (int i = 0; i < data.size(); ++i) mask.member[i] = margins[i] >= threshold;
  return mask;
}

int InDomainMask::count() const {
  return static_cast<int>(std::count(member.begin(), member.end(), true));
}

double accuracy(const std::vector<Decision>& decisions,
                const std::vector<int>& labels) {
  if (decisions.empty()) {
    throw std::invalid_argument("accuracy: empty decision list");
  }
  if (decisions.size() != labels.size()) {
    throw std::invalid_argument("accuracy: decisions/labels length mismatch");
  }
  int correct = 0;
  for (std::size_t i = 0; i < decisions.size(); ++i) {
    correct += decisions[i].final_label == labels[i];
  }
  return static_cast<double>(correct) / static_cast<double>(decisions.size());
}

InDomainStats in_domain_accuracy(const std::vector<Decision>& decisions,
                                 const std::vector<int>& labels,
                                 const InDomainMask& mask) {
  if (decisions.size() != labels.size() ||
      decisions.size() != mask.member.size()) {
    throw std::invalid_argument("in_domain_accuracy: length mismatch");
  }
  int masked = 0;
  int correct = 0;
  int by_student = 0;
  for (std::size_t i = 0; i < decisions.size(); ++i) {
    if (!mask.member[i]) continue;
    ++masked;
    correct += decisions[i].final_label == labels[i];
    by_student += decisions[i].decider == Decider::kStudent;
  }
  if (masked == 0) return {kNan, kNan, false};
  return {static_cast<double>(correct) / masked,
          static_cast<double>(by_student) / masked, true};
}

double expected_cost(const CostModel& cost, double fraction_delegated) {
  validate_cost_model(cost);
  if (!(fraction_delegated >= 0.0) || fraction_delegated > 1.0) {
    throw std::invalid_argument("expected_cost: fraction must be in [0, 1]");
  }
  return cost.student_cost + fraction_delegated * cost.teacher_cost;
}

std::vector<TradeoffPoint> sweep(const Network& student,
                                 const LabelSpace& space,
                                 const TeacherOracle& teacher,
                                 const Dataset& testset,
                                 const InDomainMask& mask,
                                 DelegationPolicy::Kind family,
                                 const std::vector<double>& rho_grid,
                                 const CostModel& cost) {
  if (family != DelegationPolicy::Kind::kMarginBased &&
      family != DelegationPolicy::Kind::kAbstainMargin) {
    throw std::invalid_argument("sweep: family must be a margin policy");
  }
  if (rho_grid.empty()) throw std::invalid_argument("sweep: empty rho grid");
  if (!std::is_sorted(rho_grid.begin(), rho_grid.end())) {
    throw std::invalid_argument("sweep: rho grid must be ascending");
  }
  if (!(rho_grid.front() >= 0.0)) {
    throw std::invalid_argument("sweep: rho must be >= 0");
  }
  validate_cost_model(cost);
  if (space.num_classes != teacher.num_classes()) {
    throw std::invalid_argument("sweep: label space/teacher class mismatch");
  }
  if (testset.num_classes != space.num_classes) {
    throw std::invalid_argument("sweep: dataset/label space class mismatch");
  }
  if (student.output_width() != space.width()) {
    throw std::invalid_argument("sweep: student width does not match label space");
  }
  if (mask.size() != testset.size()) {
    throw std::invalid_argument("sweep: mask/testset length mismatch");
  }
  const DelegationPolicy probe = family == DelegationPolicy::Kind::kMarginBased
                                     ? DelegationPolicy::margin_based(0.0)
                                     : DelegationPolicy::abstain_margin(0.0);
  validate_policy_space(probe, space);

  const int n = testset.size();
  const bool with_abstain = family == DelegationPolicy::Kind::kAbstainMargin;

  // One student pass per instance, shared by every grid point.
  std::vector<double> margins(n);
  std::vector<char> abstained(n, 0);
  std::vector<int> student_label(n, -1);
  parallel_for(n, [&](int i) {
    const ProbDist dist = softmax(student.forward(testset.row(i)), 1.0);
    margins[i] = top2_margin(dist);
    const int top = argmax(dist.p);
    if (space.has_abstain && top == space.abstain_slot()) {
      abstained[i] = 1;
    } else {
      student_label[i] = space.to_global(top);
    }
  });

  auto delegated_at = [&](int i, double rho) {
    if (with_abstain && abstained[i]) return true;
    return margins[i] < rho;
  };

  // Teacher labels only where the widest grid point delegates (the delegated
  // sets are nested in rho, so the last grid value covers every point).
  std::vector<int> teacher_label(n, -1);
  parallel_for(n, [&](int i) {
    if (delegated_at(i, rho_grid.back())) {
      teacher_label[i] = teacher.predict_label(testset.row(i));
    }
  });

  const int masked = mask.count();
  std::vector<TradeoffPoint> points;
  points.reserve(rho_grid.size());
  for (const double rho : rho_grid) {
    int delegated = 0;
    int correct = 0;
    int masked_correct = 0;
    for (int i = 0; i < n; ++i) {
      const bool to_teacher = delegated_at(i, rho);
      delegated += to_teacher;
      const int final_label = to_teacher ? teacher_label[i] : student_label[i];
      const bool ok = final_label == testset.labels[i];
      correct += ok;
      masked_correct += ok && mask.member[i];
    }
    const double fraction_delegated = static_cast<double>(delegated) / n;
    TradeoffPoint pt;
    pt.rho = rho;
    pt.fraction_student = 1.0 - fraction_delegated;
    pt.overall_acc = static_cast<double>(correct) / n;
    pt.in_domain_acc =
        masked == 0 ? kNan : static_cast<double>(masked_correct) / masked;
    pt.expected_cost = expected_cost(cost, fraction_delegated);
    points.push_back(pt);
  }
  return points;
}

LatencyStats measure_latency(const Network& net, const Dataset& testset,
                             int repetitions) {
  if (repetitions < 3) {
    throw std::invalid_argument("measure_latency: need >= 3 repetitions");
  }
  if (testset.size() == 0) {
    throw std::invalid_argument("measure_latency: empty testset");
  }

  std::vector<double> per_instance(repetitions);
  double live = 0.0;
  for (int rep = 0; rep < repetitions; ++rep) {
    const auto start = std::chrono::steady_clock::now();
    for (int i = 0; i < testset.size(); ++i) {
      live += net.forward(testset.row(i))[0];
    }
    const auto stop = std::chrono::steady_clock::now();
    per_instance[rep] =
        std::chrono::duration<double>(stop - start).count() / testset.size();
  }
  if (std::isnan(live)) {
    throw std::runtime_error("measure_latency: forward produced NaN");
  }

  std::sort(per_instance.begin(), per_instance.end());
  const int r = repetitions;
  const double median = r % 2 == 1
                            ? per_instance[r / 2]
                            : 0.5 * (per_instance[r / 2 - 1] + per_instance[r / 2]);
  const int rank90 = static_cast<int>(std::ceil(0.9 * r)) - 1;
  return {median, per_instance[std::clamp(rank90, 0, r - 1)]};
}

namespace {

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

// One panel: frame, y gridline labels (accuracy fixed to [0,1]) and a single
// polyline through the series points.
void write_panel(std::ostream& os, double x0, double y0, double w, double h,
                 const std::vector<double>& xs, const std::vector<double>& ys,
                 double xmin, double xmax, const std::string& x_label,
                 const std::string& color) {
  os << "  <rect x=\"" << fmt2(x0) << "\" y=\"" << fmt2(y0) << "\" width=\""
     << fmt2(w) << "\" height=\"" << fmt2(h)
     << "\" fill=\"none\" stroke=\"#888\"/>\n";
  for (int tick = 0; tick <= 4; ++tick) {
    const double acc = tick / 4.0;
    const double y = y0 + (1.0 - acc) * h;
    os << "  <text x=\"" << fmt2(x0 - 8) << "\" y=\"" << fmt2(y + 4)
       << "\" font-size=\"11\" text-anchor=\"end\">" << fmt2(acc)
       << "</text>\n";
  }
  os << "  <text x=\"" << fmt2(x0 + w / 2) << "\" y=\"" << fmt2(y0 + h + 32)
     << "\" font-size=\"12\" text-anchor=\"middle\">" << x_label
     << "</text>\n";
  os << "  <text x=\"" << fmt2(x0) << "\" y=\"" << fmt2(y0 + h + 16)
     << "\" font-size=\"11\" text-anchor=\"middle\">" << fmt2(xmin)
     << "</text>\n";
  os << "  <text x=\"" << fmt2(x0 + w) << "\" y=\"" << fmt2(y0 + h + 16)
     << "\" font-size=\"11\" text-anchor=\"middle\">" << fmt2(xmax)
     << "</text>\n";

  const double span = xmax - xmin;
  os << "  <polyline fill=\"none\" stroke=\"" << color
     << "\" stroke-width=\"1.5\" points=\"";
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double fx = span > 0.0 ? (xs[i] - xmin) / span : 0.5;
    const double x = x0 + fx * w;
    const double y = y0 + (1.0 - std::clamp(ys[i], 0.0, 1.0)) * h;
    if (i) os << ' ';
    os << fmt2(x) << ',' << fmt2(y);
  }
  os << "\"/>\n";
}

}  // namespace

void emit_report(const std::vector<TradeoffPoint>& points,
                 const std::string& stem, const std::string& unit) {
  if (points.empty()) throw std::invalid_argument("emit_report: no points");

  const std::string csv_path = stem + ".csv";
  std::ofstream csv(csv_path, std::ios::binary);
  if (!csv) throw std::runtime_error("cannot open for writing: " + csv_path);
  csv << "rho,fraction_student,overall_acc,in_domain_acc,expected_cost,unit\n";
  for (const TradeoffPoint& pt : points) {
    csv << fmt6(pt.rho) << ',' << fmt6(pt.fraction_student) << ','
        << fmt6(pt.overall_acc) << ',' << fmt6(pt.in_domain_acc) << ','
        << fmt6(pt.expected_cost) << ',' << unit << '\n';
  }
  if (!csv) throw std::runtime_error("write failed: " + csv_path);
  csv.close();

  std::vector<double> fractions, accs, costs;
  fractions.reserve(points.size());
  accs.reserve(points.size());
  costs.reserve(points.size());
  for (const TradeoffPoint& pt : points) {
    fractions.push_back(pt.fraction_student);
    accs.push_back(pt.overall_acc);
    costs.push_back(pt.expected_cost);
  }
  const auto [cost_lo, cost_hi] = std::minmax_element(costs.begin(), costs.end());

  const std::string svg_path = stem + ".svg";
  std::ofstream svg(svg_path, std::ios::binary);
  if (!svg) throw std::runtime_error("cannot open for writing: " + svg_path);
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"960\" "
         "height=\"520\" viewBox=\"0 0 960 520\">\n";
  svg << "  <text x=\"480\" y=\"24\" font-size=\"14\" "
         "text-anchor=\"middle\">accuracy vs. student fraction and expected "
         "cost</text>\n";
  write_panel(svg, 70, 40, 380, 400, fractions, accs, 0.0, 1.0,
              "fraction decided by student", "#1f6fb2");
  write_panel(svg, 550, 40, 380, 400, costs, accs, *cost_lo, *cost_hi,
              "expected cost (" + unit + ")", "#b23a1f");
  svg << "</svg>\n";
  if (!svg) throw std::runtime_error("write failed: " + svg_path);
}

}  // namespace cdist
