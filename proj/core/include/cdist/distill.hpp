#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cdist/datagen.hpp"
#include "cdist/network.hpp"
#include "cdist/prob.hpp"

namespace cdist {

// The six distillation target constructions. BASELINE distills against the
// full teacher softmax everywhere; the CD variants specialize the student to
// a class subset, the MD variants to a teacher-margin partition.
enum class Variant { kBaseline, kCd1, kCd2, kCd3, kMdLs, kMdAbstain };

std::string variant_name(Variant v);
Variant parse_variant(const std::string& name);

// Margin used when partitioning training data by teacher confidence.
// kProbability is the top1-top2 softmax gap in [0, 1]; kLogit measures the
// same gap on raw scores and admits thresholds above 1.
enum class MarginSpace { kProbability, kLogit };

struct DistillConfig {
  Variant variant = Variant::kBaseline;
  double a = 0.0;      // weight of the true-label loss term
  double b = 1.0;      // weight of the distillation loss term
  double tau = 1.0;    // softmax temperature, shared by teacher and student
  double alpha = 0.0;  // label smoothing (CD1, MD_LS)
  double rho_tr = 0.0; // teacher-margin partition threshold (MD_LS, MD_ABSTAIN)
  std::vector<int> l_in;  // in-domain classes, sorted ascending (CD1/2/3)
  MarginSpace margin_space = MarginSpace::kProbability;
};

// Throws std::invalid_argument when the config violates its invariants for
// the given class count.
void validate_distill_config(const DistillConfig& cfg, int num_classes);

// Output width a student must have to be trained with this config.
int variant_target_length(const DistillConfig& cfg, int num_classes);

// Frozen teacher scores, one logit row per training example.
struct TeacherScoreCache {
  int num_classes = 0;
  double tau = 1.0;
  std::string teacher_tag;
  std::vector<double> logits;  // n x num_classes, row-major

  int size() const {
    return num_classes == 0 ? 0
                            : static_cast<int>(logits.size()) / num_classes;
  }
  std::span<const double> row(int i) const {
    return {logits.data() + static_cast<std::size_t>(i) * num_classes,
            static_cast<std::size_t>(num_classes)};
  }
};

// File format: header `scorev1 n=<n> L=<L> tau=<f64> teacher=<tag>` followed
// by n rows of L little-endian 64-bit floats.
void save_score_cache(const TeacherScoreCache& cache, const std::string& path);
TeacherScoreCache load_score_cache(const std::string& path);

// Disjoint index sets covering the training set.
struct Partition {
  std::vector<int> easy;
  std::vector<int> hard;
};

// easy = {i : labels[i] in l_in}, hard = the rest.
Partition partition_by_class(const std::vector<int>& labels,
                             const std::vector<int>& l_in, int num_classes);

// Teacher's top1-top2 softmax gap; the hardness proxy.
double teacher_margin(const ProbDist& teacher_dist);

// easy = {i : margin(teacher row i) > rho_tr}, strict inequality.
Partition partition_by_margin(const TeacherScoreCache& cache, double rho_tr,
                              double tau,
                              MarginSpace space = MarginSpace::kProbability);

// Per-example easy membership, index-aligned with the cache.
std::vector<bool> easy_mask_by_margin(const TeacherScoreCache& cache,
                                      double rho_tr, double tau,
                                      MarginSpace space);

// ----------------------------------------------------------------------
// Pseudo-label builders. Each returns a valid ProbDist in the variant's
// label space; `teacher_logits` is one cache row.
// ----------------------------------------------------------------------

// Full teacher softmax at tau.
ProbDist pseudo_label_baseline(std::span<const double> teacher_logits,
                               double tau);

// In-domain labels keep the teacher softmax; out-of-domain labels get the
// label-smoothed one-hot (1 - alpha) * e_y + (alpha / L) * 1.
ProbDist pseudo_label_cd1(int y, std::span<const double> teacher_logits,
                          double alpha, const std::vector<int>& l_in,
                          double tau);

// L'-way target: teacher softmax renormalized over l_in, or uniform 1/L'.
ProbDist pseudo_label_cd2(int y, std::span<const double> teacher_logits,
                          const std::vector<int>& l_in, double tau);

// (L'+1)-way target with a trailing abstain slot.
ProbDist pseudo_label_cd3(int y, std::span<const double> teacher_logits,
                          const std::vector<int>& l_in, double tau);

// Margin-partition flavor of CD1: easy keeps the teacher softmax, hard gets
// the label-smoothed one-hot.
ProbDist pseudo_label_md_ls(int y, std::span<const double> teacher_logits,
                            bool is_easy, double alpha, double tau);

// (L+1)-way target: easy -> (teacher softmax, 0), hard -> abstain one-hot.
ProbDist pseudo_label_md_abstain(int y, std::span<const double> teacher_logits,
                                 bool is_easy, double tau);

// Dispatches to the variant's builder. `is_easy` is consulted only by the
// margin variants; class variants derive membership from y and l_in.
ProbDist variant_pseudo_label(int y, std::span<const double> teacher_logits,
                              const DistillConfig& cfg, bool is_easy);

// One-hot true-label target mapped into the variant's label space. For the
// reduced/extended spaces: restricted one-hot when y is in-domain, abstain
// one-hot for out-of-domain/hard, uniform for CD2 out-of-domain (which has
// no abstain slot).
ProbDist variant_true_target(int y, const DistillConfig& cfg, int num_classes,
                             bool is_easy);

// Per-instance loss a * H(p_y, p_f) + b * H(p_tilde, p_f) where p_f is the
// student softmax at cfg.tau. Zero-weight terms are skipped entirely.
double distill_objective(int y, std::span<const double> teacher_logits,
                         const LogitVector& student_logits,
                         const DistillConfig& cfg);

// The variant pseudo-labels for a whole dataset, index-aligned.
std::vector<ProbDist> build_pseudo_labels(const std::vector<int>& labels,
                                          const TeacherScoreCache& cache,
                                          const DistillConfig& cfg);

// Per-instance SGD targets (a * p_y + b * p_tilde) / (a + b); minimizing
// cross-entropy against these is the combined objective up to the constant
// factor a + b.
std::vector<ProbDist> build_train_targets(const std::vector<int>& labels,
                                          const TeacherScoreCache& cache,
                                          const DistillConfig& cfg);

// Runs nn-core SGD on the variant targets. The student's output width must
// match variant_target_length; mismatches throw before any training step.
Network distill_train(Network student, const Dataset& data,
                      const TeacherScoreCache& cache, const DistillConfig& cfg,
                      const TrainSpec& spec);

// Checkpoint metadata recording the distillation settings, and its inverse.
CheckpointMeta distill_meta(const DistillConfig& cfg);
DistillConfig distill_config_from_meta(const CheckpointMeta& meta);

}  // namespace cdist
