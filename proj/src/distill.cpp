#include "kgan/distill.hpp"

#include <chrono>
#include <cmath>

namespace kgan {

void DistillConfig::validate() const {
  if (!(temperature > 0.0))
    throw std::invalid_argument("distill temperature must be positive");
  if (alpha < 0.0 || beta < 0.0 || gamma < 0.0)
    throw std::invalid_argument("distill weights must be non-negative");
  if (!(alpha + beta > 0.0))
    throw std::invalid_argument("alpha + beta must be positive");
  if (!(scale > 0.0) || scale > 1.0)
    throw std::invalid_argument("student scale must lie in (0, 1]");
}

Tensor soft_label_loss(const Tensor& student_logits, const Tensor& teacher_logits,
                       double temperature) {
  if (!(temperature > 0.0))
    throw std::invalid_argument("soft_label_loss: temperature must be positive");
  if (student_logits.shape != teacher_logits.shape)
    throw std::invalid_argument("soft_label_loss: logit shapes differ");
  const long rows = student_logits.rank() == 2 ? student_logits.shape[0] : 1;
  Tensor q_student = softmax_t(student_logits, temperature);
  Tensor q_teacher = softmax_t(teacher_logits, temperature);
  Tensor total =
      sum(mul(q_teacher, log_safe(clamp(q_student, kLogFloor, 1.0))));
  return mul(total, -1.0 / static_cast<double>(rows));
}

Tensor hard_label_loss(const Tensor& probs, const Tensor& labels) {
  if (probs.shape != labels.shape)
    throw std::invalid_argument("hard_label_loss: shape mismatch");
  for (long i = 0; i < labels.size(); ++i)
    if (labels.data[i] != 0.0 && labels.data[i] != 1.0)
      throw std::invalid_argument("hard_label_loss: labels must be 0 or 1");
  Tensor pos = mul(labels, log_safe(clamp(probs, kLogFloor, 1.0)));
  Tensor neg_term =
      mul(sub(1.0, labels), log_safe(clamp(sub(1.0, probs), kLogFloor, 1.0)));
  return neg(mean(add(pos, neg_term)));
}

double distill_loss(double soft, double hard, const DistillConfig& cfg) {
  return cfg.alpha * soft + cfg.beta * hard;
}

Tensor distill_loss(const Tensor& soft, const Tensor& hard, const DistillConfig& cfg) {
  return add(mul(soft, cfg.alpha), mul(hard, cfg.beta));
}

namespace {

void check_finite(double loss, int epoch, int batch, const char* which) {
  if (!std::isfinite(loss))
    throw TrainAbort("non-finite " + std::string(which) + " loss at epoch " +
                     std::to_string(epoch) + ", batch " + std::to_string(batch));
}

}  // namespace

std::pair<GanModel, TrainingHistory> train_student(const GanModel& teacher,
                                                   GanModel student,
                                                   const std::vector<ImagePair>& data,
                                                   const TrainingConfig& cfg,
                                                   const DistillConfig& dcfg,
                                                   const StepObserver& observer) {
  cfg.validate(student.mode);
  dcfg.validate();
  if (student.mode != GanMode::kStandard)
    throw std::invalid_argument("train_student requires standard-mode models");
  if (teacher.image_size != student.image_size)
    throw std::invalid_argument("teacher and student image sizes differ");
  if (teacher.conditioning != student.conditioning)
    throw std::invalid_argument("teacher and student conditioning differ");
  if (data.empty()) throw std::invalid_argument("train_student: dataset is empty");
  for (const ImagePair& p : data)
    if (p.a.height != student.image_size || p.a.width != student.image_size)
      throw std::invalid_argument("train_student: dataset images do not match model");

  const bool use_soft = dcfg.alpha > 0.0;
  const bool use_imitation = dcfg.gamma > 0.0;

  Rng rng(cfg.seed);
  TrainingHistory history;
  history.reserve(static_cast<std::size_t>(cfg.epochs));
  long global_step = 0;

  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto epoch_start = std::chrono::steady_clock::now();
    rng.shuffle(order);

    double sum_loss_g = 0.0, sum_loss_d = 0.0;
    double sum_d_real = 0.0, sum_d_fake = 0.0;
    long n_g_steps = 0, n_d_steps = 0;

    for (std::size_t start = 0, batch_idx = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch_size), ++batch_idx) {
      const std::size_t m =
          std::min<std::size_t>(cfg.batch_size, order.size() - start);

      std::vector<ImagePair> batch;
      batch.reserve(m);
      for (std::size_t i = 0; i < m; ++i) {
        const ImagePair& p = data[order[start + i]];
        batch.push_back(cfg.augment ? augment_flip(p, rng) : p);
      }
      std::vector<const ImageGray*> real_imgs, cond_imgs;
      for (const ImagePair& p : batch) {
        real_imgs.push_back(&p.b);
        cond_imgs.push_back(&p.a);
      }
      const Tensor real = batch_to_tensor(real_imgs);
      const Tensor cond = student.conditioning == Conditioning::kImage
                              ? batch_to_tensor(cond_imgs)
                              : Tensor();

      // (a) Student discriminator step(s).
      for (int k = 0; k < cfg.d_steps_per_g_step; ++k) {
        const Tensor gen_in = student.conditioning == Conditioning::kImage
                                  ? cond
                                  : noise_batch(rng, static_cast<int>(m),
                                                student.image_size);
        const Tensor fake = generator_forward(student, student.gen_params, gen_in);

        Graph g;
        ParameterSet bound_d = student.disc_params.bind(g);
        const Tensor logits_real = discriminator_logits(student, bound_d, real);
        const Tensor logits_fake = discriminator_logits(student, bound_d, fake);
        const Tensor p_real = disc_probability(logits_real);
        const Tensor p_fake = disc_probability(logits_fake);

        // Hard-label part, composed exactly like discriminator_loss so that
        // alpha = 0, beta = 1 reproduces plain adversarial training.
        Tensor hard = discriminator_loss(p_real, p_fake);
        Tensor loss;
        if (use_soft) {
          // Teacher logits on the same inputs; soft loss averaged over the
          // real and fake halves of the combined batch.
          const Tensor t_logits_real =
              discriminator_logits(teacher, teacher.disc_params, real);
          const Tensor t_logits_fake =
              discriminator_logits(teacher, teacher.disc_params, fake);
          Tensor soft = mul(
              add(soft_label_loss(logits_real, t_logits_real, dcfg.temperature),
                  soft_label_loss(logits_fake, t_logits_fake, dcfg.temperature)),
              0.5);
          loss = distill_loss(soft, hard, dcfg);
        } else {
          loss = mul(hard, dcfg.beta);
        }
        check_finite(loss.scalar(), epoch, static_cast<int>(batch_idx),
                     "student discriminator");
        GradientMap grads = g.backward(loss);
        optimizer_step(student.disc_params, bound_d, grads, student.opt_d, cfg.lr_d,
                       cfg);

        sum_loss_d += loss.scalar();
        sum_d_real += p_real.data.mean();
        sum_d_fake += p_fake.data.mean();
        ++n_d_steps;
        if (observer)
          observer(StepEvent{epoch, static_cast<int>(batch_idx), global_step, true,
                             loss.scalar(), p_real.data.mean(), p_fake.data.mean(),
                             &student});
      }

      // (b) Student generator step.
      {
        const Tensor gen_in = student.conditioning == Conditioning::kImage
                                  ? cond
                                  : noise_batch(rng, static_cast<int>(m),
                                                student.image_size);
        Graph g;
        ParameterSet bound_g = student.gen_params.bind(g);
        const Tensor fake = generator_forward(student, bound_g, gen_in);
        const Tensor logits_fake =
            discriminator_logits(student, student.disc_params, fake);
        Tensor loss = generator_loss(disc_probability(logits_fake));
        if (use_imitation) {
          const Tensor teacher_fake =
              generator_forward(teacher, teacher.gen_params, gen_in);
          loss = add(loss, mul(mean_abs_diff(fake, g.constant(teacher_fake)),
                               dcfg.gamma));
        }
        check_finite(loss.scalar(), epoch, static_cast<int>(batch_idx),
                     "student generator");
        GradientMap grads = g.backward(loss);
        optimizer_step(student.gen_params, bound_g, grads, student.opt_g, cfg.lr_g,
                       cfg);

        sum_loss_g += loss.scalar();
        ++n_g_steps;
        ++global_step;
        if (observer)
          observer(StepEvent{epoch, static_cast<int>(batch_idx), global_step, false,
                             loss.scalar(), 0.0, 0.0, &student});
      }
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss_g = sum_loss_g / static_cast<double>(n_g_steps);
    rec.loss_d = sum_loss_d / static_cast<double>(n_d_steps);
    rec.mean_d_real = sum_d_real / static_cast<double>(n_d_steps);
    rec.mean_d_fake = sum_d_fake / static_cast<double>(n_d_steps);
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                                     epoch_start)
                           .count();
    history.push_back(rec);
  }
  return {std::move(student), std::move(history)};
}

}  // namespace kgan
