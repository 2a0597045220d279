#pragma once

#include "kgan/gan.hpp"

namespace kgan {

struct DistillConfig {
  double temperature = 4.0;  // T of the softened distributions
  double alpha = 0.7;        // soft-label weight
  double beta = 0.3;         // hard-label weight
  double gamma = 1.0;        // generator imitation weight
  double scale = 0.5;        // student channel fraction

  void validate() const;
};

struct TeacherStudentPair {
  GanModel teacher;  // frozen throughout student training
  GanModel student;
};

/// Batch mean of cross_entropy(softmax_t(student_i, T), softmax_t(teacher_i, T))
/// over rows of [m,K] logits. At T = 1 the soft distributions coincide with
/// plain softmax output.
Tensor soft_label_loss(const Tensor& student_logits, const Tensor& teacher_logits,
                       double temperature);

/// Binary cross-entropy -(1/m) sum [y log p + (1-y) log(1-p)] with labels
/// restricted to {0, 1}.
Tensor hard_label_loss(const Tensor& probs, const Tensor& labels);

/// alpha * soft + beta * hard.
double distill_loss(double soft, double hard, const DistillConfig& cfg);
Tensor distill_loss(const Tensor& soft, const Tensor& hard, const DistillConfig& cfg);

/// Knowledge-distillation training. Per batch:
///  (a) student discriminator minimizes alpha * L_soft + beta * L_hard,
///      where L_soft softens student-vs-teacher discriminator logits on the
///      same real and fake inputs, and L_hard is the real/fake label loss
///      (composed identically to discriminator_loss, which it equals);
///  (b) student generator minimizes its adversarial loss plus
///      gamma * mean |G_s(x) - G_t(x)|.
/// Teacher parameters are never touched. Zero-weight terms are skipped, so
/// alpha = gamma = 0 reduces to plain train_gan draws and trajectories.
std::pair<GanModel, TrainingHistory> train_student(const GanModel& teacher,
                                                   GanModel student,
                                                   const std::vector<ImagePair>& data,
                                                   const TrainingConfig& cfg,
                                                   const DistillConfig& dcfg,
                                                   const StepObserver& observer = {});

}  // namespace kgan
