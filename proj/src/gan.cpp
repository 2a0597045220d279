#include "kgan/gan.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace kgan {

void TrainingConfig::validate(GanMode mode) const {
  if (epochs < 0) throw std::invalid_argument("epochs must be >= 0");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (!(lr_g > 0.0) || !(lr_d > 0.0))
    throw std::invalid_argument("learning rates must be positive");
  if (d_steps_per_g_step < 1)
    throw std::invalid_argument("d_steps_per_g_step must be >= 1");
  if (mode == GanMode::kWasserstein && !(clip_w > 0.0))
    throw std::invalid_argument("wasserstein mode requires clip_w > 0");
  if (optimizer == OptimKind::kAdam) {
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) ||
        !(adam_beta2 >= 0.0 && adam_beta2 < 1.0) || !(adam_eps > 0.0))
      throw std::invalid_argument("invalid adam hyperparameters");
  }
}

bool gan_size_supported(int image_size) {
  return image_size == 8 || image_size == 16 || image_size == 32 ||
         image_size == 64 || image_size == 128 || image_size == 256;
}

namespace {

int scaled_channels(int base, double scale) {
  return std::max(1, static_cast<int>(std::ceil(base * scale)));
}

GanModel build_model(int image_size, std::uint64_t seed, double scale) {
  if (!gan_size_supported(image_size))
    throw std::invalid_argument("image size " + std::to_string(image_size) +
                                " unsupported (use 8/16/32/64/128/256)");
  if (!(scale > 0.0) || scale > 1.0)
    throw std::invalid_argument("channel scale must lie in (0, 1]");

  const int g1 = scaled_channels(32, scale);
  const int g2 = scaled_channels(64, scale);
  const int d1 = scaled_channels(16, scale);
  const int d2 = scaled_channels(32, scale);
  const int d3 = scaled_channels(64, scale);

  GanModel m;
  m.image_size = image_size;
  m.scale = scale;
  m.seed = seed;

  m.gen_spec = {
      conv_layer("g1", 1, g1, 3, 1, 1),  relu_layer(),
      conv_layer("g2", g1, g2, 3, 1, 1), relu_layer(),
      conv_layer("g3", g2, g2, 3, 1, 1), relu_layer(),
      conv_layer("g4", g2, g1, 3, 1, 1), relu_layer(),
      conv_layer("g5", g1, 1, 3, 1, 1),  sigmoid_layer(),
  };

  const int spatial = image_size / 8;  // three stride-2 convs
  m.disc_spec = {
      conv_layer("d1", 1, d1, 3, 2, 1),   leaky_relu_layer(0.2),
      conv_layer("d2", d1, d2, 3, 2, 1),  leaky_relu_layer(0.2),
      conv_layer("d3", d2, d3, 3, 2, 1),  leaky_relu_layer(0.2),
      dense_layer("d4", d3 * spatial * spatial, 2),
  };

  m.gen_params = init_params(m.gen_spec, derive_seed(seed, 0));
  m.disc_params = init_params(m.disc_spec, derive_seed(seed, 1));
  return m;
}

}  // namespace

GanModel build_teacher(int image_size, std::uint64_t seed) {
  return build_model(image_size, seed, 1.0);
}

GanModel build_student(int image_size, std::uint64_t seed, double scale) {
  return build_model(image_size, seed, scale);
}

Tensor generator_forward(const GanModel& m, const ParameterSet& gen_params,
                         const Tensor& input) {
  if (input.rank() != 4)
    throw std::invalid_argument("generator expects [N,1,H,W] input");
  return forward_stack(m.gen_spec, gen_params, input);
}

Tensor discriminator_logits(const GanModel& m, const ParameterSet& disc_params,
                            const Tensor& images) {
  if (images.rank() != 4)
    throw std::invalid_argument("discriminator expects [N,1,H,W] input");
  return forward_stack(m.disc_spec, disc_params, images);
}

namespace {

// logits [m,2] -> [m,1] of logit_real - logit_fake via a constant selector.
Tensor logit_margin(const Tensor& logits) {
  if (logits.rank() != 2 || logits.shape[1] != 2)
    throw std::invalid_argument("expected [m,2] discriminator logits");
  return matmul(logits, tensor_of({2, 1}, std::vector<Scalar>{-1.0, 1.0}));
}

}  // namespace

Tensor disc_probability(const Tensor& logits) { return sigmoid(logit_margin(logits)); }

Tensor disc_score(const Tensor& logits) { return logit_margin(logits); }

Tensor generator_loss(const Tensor& d_on_fake) {
  return neg(mean(log_safe(clamp(d_on_fake, kLogFloor, 1.0))));
}

Tensor discriminator_loss(const Tensor& d_on_real, const Tensor& d_on_fake) {
  if (d_on_real.size() != d_on_fake.size())
    throw std::invalid_argument("discriminator_loss: batch size mismatch");
  Tensor real_term = neg(mean(log_safe(clamp(d_on_real, kLogFloor, 1.0))));
  Tensor fake_term = neg(mean(log_safe(clamp(sub(1.0, d_on_fake), kLogFloor, 1.0))));
  return add(real_term, fake_term);
}

WganLosses wgan_losses(const Tensor& critic_on_real, const Tensor& critic_on_fake) {
  if (critic_on_real.size() != critic_on_fake.size())
    throw std::invalid_argument("wgan_losses: batch size mismatch");
  WganLosses out;
  out.critic_objective = sub(mean(critic_on_real), mean(critic_on_fake));
  out.generator_loss = neg(mean(critic_on_fake));
  return out;
}

// ---------------------------------------------------------------------------
// Optimizers

namespace {

const Tensor& grad_for(const ParameterSet& bound, const GradientMap& grads,
                       std::size_t index) {
  const Tensor& b = bound.items[index].second;
  auto it = grads.find(b.node);
  if (it == grads.end())
    throw std::invalid_argument("missing gradient for parameter " +
                                bound.items[index].first);
  return it->second;
}

}  // namespace

void sgd_step(ParameterSet& params, const ParameterSet& bound, const GradientMap& grads,
              double lr) {
  for (std::size_t i = 0; i < params.items.size(); ++i) {
    const Tensor& g = grad_for(bound, grads, i);
    Tensor& p = params.items[i].second;
    if (g.size() != p.size())
      throw std::invalid_argument("gradient shape mismatch for " + params.items[i].first);
    p.data -= lr * g.data;
  }
}

void adam_step(ParameterSet& params, const ParameterSet& bound, const GradientMap& grads,
               AdamState& state, double lr, double beta1, double beta2, double eps) {
  if (state.m.size() != params.items.size()) {
    state.m.assign(params.items.size(), Array());
    state.v.assign(params.items.size(), Array());
    for (std::size_t i = 0; i < params.items.size(); ++i) {
      state.m[i] = Array::Zero(params.items[i].second.size());
      state.v[i] = Array::Zero(params.items[i].second.size());
    }
    state.t = 0;
  }
  state.t += 1;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.items.size(); ++i) {
    const Tensor& g = grad_for(bound, grads, i);
    Tensor& p = params.items[i].second;
    if (g.size() != p.size())
      throw std::invalid_argument("gradient shape mismatch for " + params.items[i].first);
    Array& m = state.m[i];
    Array& v = state.v[i];
    m = beta1 * m + (1.0 - beta1) * g.data;
    v = beta2 * v + (1.0 - beta2) * g.data * g.data;
    p.data -= lr * (m / bc1) / ((v / bc2).sqrt() + eps);
  }
}

void optimizer_step(ParameterSet& params, const ParameterSet& bound,
                    const GradientMap& grads, AdamState& state, double lr,
                    const TrainingConfig& cfg) {
  if (cfg.optimizer == OptimKind::kSgd)
    sgd_step(params, bound, grads, lr);
  else
    adam_step(params, bound, grads, state, lr, cfg.adam_beta1, cfg.adam_beta2,
              cfg.adam_eps);
}

void clip_params(ParameterSet& params, double w) {
  for (auto& [name, t] : params.items) t.data = t.data.min(w).max(-w);
}

// ---------------------------------------------------------------------------
// Training loop

Tensor batch_to_tensor(const std::vector<const ImageGray*>& images) {
  if (images.empty()) throw std::invalid_argument("empty batch");
  const int h = images[0]->height;
  const int w = images[0]->width;
  Array data(static_cast<long>(images.size()) * h * w);
  long off = 0;
  for (const ImageGray* img : images) {
    if (img->height != h || img->width != w)
      throw std::invalid_argument("batch images disagree on size");
    data.segment(off, img->size()) = img->pixels;
    off += img->size();
  }
  return Tensor({static_cast<int>(images.size()), 1, h, w}, std::move(data));
}

ImageGray tensor_to_image(const Tensor& t, int sample_index) {
  if (t.rank() != 4 || t.shape[1] != 1)
    throw std::invalid_argument("expected [N,1,H,W] tensor");
  const int h = t.shape[2];
  const int w = t.shape[3];
  ImageGray img(h, w);
  img.pixels = t.data.segment(static_cast<long>(sample_index) * h * w, long(h) * w)
                   .min(1.0)
                   .max(0.0);
  return img;
}

Tensor noise_batch(Rng& rng, int n, int size) {
  Array z(static_cast<long>(n) * size * size);
  long off = 0;
  for (int i = 0; i < n; ++i) {
    const ImageGray field = smooth_noise_image(rng, size);
    z.segment(off, field.size()) = field.pixels;
    off += field.size();
  }
  return Tensor({n, 1, size, size}, std::move(z));
}

namespace {

void check_finite(double loss, int epoch, int batch, const char* which) {
  if (!std::isfinite(loss))
    throw TrainAbort("non-finite " + std::string(which) + " loss at epoch " +
                     std::to_string(epoch) + ", batch " + std::to_string(batch));
}

}  // namespace

std::pair<GanModel, TrainingHistory> train_gan(GanModel model,
                                               const std::vector<ImagePair>& data,
                                               const TrainingConfig& cfg,
                                               const StepObserver& observer) {
  cfg.validate(model.mode);
  if (data.empty()) throw std::invalid_argument("train_gan: dataset is empty");
  for (const ImagePair& p : data)
    if (p.a.height != model.image_size || p.a.width != model.image_size)
      throw std::invalid_argument("train_gan: dataset images do not match model size");

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

      // Materialize the batch, flipping each pair jointly when augmenting.
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
      const Tensor cond = model.conditioning == Conditioning::kImage
                              ? batch_to_tensor(cond_imgs)
                              : Tensor();

      for (int k = 0; k < cfg.d_steps_per_g_step; ++k) {
        const Tensor gen_in = model.conditioning == Conditioning::kImage
                                  ? cond
                                  : noise_batch(rng, static_cast<int>(m),
                                                model.image_size);
        const Tensor fake = generator_forward(model, model.gen_params, gen_in);

        Graph g;
        ParameterSet bound_d = model.disc_params.bind(g);
        const Tensor logits_real = discriminator_logits(model, bound_d, real);
        const Tensor logits_fake = discriminator_logits(model, bound_d, fake);

        Tensor loss;
        double d_real_stat, d_fake_stat;
        if (model.mode == GanMode::kStandard) {
          const Tensor p_real = disc_probability(logits_real);
          const Tensor p_fake = disc_probability(logits_fake);
          loss = discriminator_loss(p_real, p_fake);
          d_real_stat = p_real.data.mean();
          d_fake_stat = p_fake.data.mean();
        } else {
          const Tensor s_real = disc_score(logits_real);
          const Tensor s_fake = disc_score(logits_fake);
          loss = neg(wgan_losses(s_real, s_fake).critic_objective);
          d_real_stat = s_real.data.mean();
          d_fake_stat = s_fake.data.mean();
        }
        check_finite(loss.scalar(), epoch, static_cast<int>(batch_idx),
                     "discriminator");
        GradientMap grads = g.backward(loss);
        optimizer_step(model.disc_params, bound_d, grads, model.opt_d, cfg.lr_d, cfg);
        if (model.mode == GanMode::kWasserstein) clip_params(model.disc_params, cfg.clip_w);

        sum_loss_d += loss.scalar();
        sum_d_real += d_real_stat;
        sum_d_fake += d_fake_stat;
        ++n_d_steps;
        if (observer)
          observer(StepEvent{epoch, static_cast<int>(batch_idx), global_step, true,
                             loss.scalar(), d_real_stat, d_fake_stat, &model});
      }

      // Generator update; discriminator parameters stay plain so gradients
      // flow through its ops without being accumulated for them.
      {
        const Tensor gen_in = model.conditioning == Conditioning::kImage
                                  ? cond
                                  : noise_batch(rng, static_cast<int>(m),
                                                model.image_size);
        Graph g;
        ParameterSet bound_g = model.gen_params.bind(g);
        const Tensor fake = generator_forward(model, bound_g, gen_in);
        const Tensor logits_fake = discriminator_logits(model, model.disc_params, fake);

        Tensor loss;
        if (model.mode == GanMode::kStandard)
          loss = generator_loss(disc_probability(logits_fake));
        else
          loss = neg(mean(disc_score(logits_fake)));
        check_finite(loss.scalar(), epoch, static_cast<int>(batch_idx), "generator");
        GradientMap grads = g.backward(loss);
        optimizer_step(model.gen_params, bound_g, grads, model.opt_g, cfg.lr_g, cfg);

        sum_loss_g += loss.scalar();
        ++n_g_steps;
        ++global_step;
        if (observer)
          observer(StepEvent{epoch, static_cast<int>(batch_idx), global_step, false,
                             loss.scalar(), 0.0, 0.0, &model});
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
  return {std::move(model), std::move(history)};
}

std::string history_csv(const TrainingHistory& history) {
  std::ostringstream out;
  out << "epoch,loss_g,loss_d,mean_d_real,mean_d_fake\n";
  char buf[512];
  for (const EpochRecord& r : history) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g\n", r.epoch, r.loss_g,
                  r.loss_d, r.mean_d_real, r.mean_d_fake);
    out << buf;
  }
  return out.str();
}

void write_history_csv(const TrainingHistory& history, const std::string& path) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << history_csv(history);
}

}  // namespace kgan
