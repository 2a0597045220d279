#pragma once

#include "kgan/layers.hpp"
#include "kgan/phantom.hpp"

#include <functional>
#include <stdexcept>
#include <utility>

namespace kgan {

enum class GanMode { kStandard, kWasserstein };
enum class Conditioning { kNoise, kImage };
enum class OptimKind { kSgd, kAdam };

struct TrainingConfig {
  int epochs = 10;
  int batch_size = 8;
  double lr_g = 2e-4;
  double lr_d = 2e-4;
  OptimKind optimizer = OptimKind::kAdam;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double clip_w = 0.01;           // wasserstein weight truncation
  int d_steps_per_g_step = 1;     // 5 is the usual wasserstein setting
  std::uint64_t seed = 0;
  bool augment = true;            // joint random flips on training pairs

  void validate(GanMode mode) const;
};

struct EpochRecord {
  int epoch = 0;
  double loss_g = 0.0;
  double loss_d = 0.0;
  double mean_d_real = 0.0;
  double mean_d_fake = 0.0;
  double wall_seconds = 0.0;      // in-memory only, never serialized
};
using TrainingHistory = std::vector<EpochRecord>;

/// Adam moments aligned index-for-index with a ParameterSet.
struct AdamState {
  std::vector<Array> m;
  std::vector<Array> v;
  long t = 0;
};

/// Paired generator/discriminator with everything needed to train and
/// checkpoint them. The discriminator ends in a 2-logit head (fake, real);
/// standard mode reads a probability from it, wasserstein mode a raw score.
struct GanModel {
  std::vector<LayerSpec> gen_spec;
  std::vector<LayerSpec> disc_spec;
  ParameterSet gen_params;
  ParameterSet disc_params;
  GanMode mode = GanMode::kStandard;
  Conditioning conditioning = Conditioning::kImage;
  int image_size = 0;
  double scale = 1.0;
  std::uint64_t seed = 0;
  AdamState opt_g;
  AdamState opt_d;

  long param_count() const { return gen_params.count() + disc_params.count(); }
};

bool gan_size_supported(int image_size);

/// Full-width model: generator is a 4-hidden-layer conv encoder-decoder
/// (channels 32-64-64-32, kernel 3, stride 1, pad 1) with a sigmoid output
/// conv; discriminator is 3 stride-2 convs (16-32-64, leaky 0.2) plus a
/// dense 2-logit head. Deterministic in seed.
GanModel build_teacher(int image_size, std::uint64_t seed);

/// Same topology with channel counts scaled by `scale` (ceil, min 1).
GanModel build_student(int image_size, std::uint64_t seed, double scale = 0.5);

// Forward helpers. Tracking follows the parameter tensors: bind them to a
// Graph first to record gradients.
Tensor generator_forward(const GanModel& m, const ParameterSet& gen_params,
                         const Tensor& input);
Tensor discriminator_logits(const GanModel& m, const ParameterSet& disc_params,
                            const Tensor& images);
/// sigmoid(logit_real - logit_fake), i.e. the softmax probability of "real"
/// over the 2-logit head at T = 1.
Tensor disc_probability(const Tensor& logits);
/// Unbounded critic score logit_real - logit_fake (wasserstein head).
Tensor disc_score(const Tensor& logits);

/// Eq-style non-saturating generator loss -(1/m) sum log D(G(z)).
Tensor generator_loss(const Tensor& d_on_fake);
/// -(1/m) sum log D(x) - (1/m) sum log(1 - D(G(z))).
Tensor discriminator_loss(const Tensor& d_on_real, const Tensor& d_on_fake);

struct WganLosses {
  Tensor critic_objective;  // mean T(x) - mean T(x~); the critic maximizes this
  Tensor generator_loss;    // -mean T(x~)
};
WganLosses wgan_losses(const Tensor& critic_on_real, const Tensor& critic_on_fake);

// Optimizer steps. `bound` is the graph-bound twin of `params` whose node
// ids key into grads.
void sgd_step(ParameterSet& params, const ParameterSet& bound, const GradientMap& grads,
              double lr);
void adam_step(ParameterSet& params, const ParameterSet& bound, const GradientMap& grads,
               AdamState& state, double lr, double beta1, double beta2, double eps);
void optimizer_step(ParameterSet& params, const ParameterSet& bound,
                    const GradientMap& grads, AdamState& state, double lr,
                    const TrainingConfig& cfg);
/// Clamp every parameter to [-w, w].
void clip_params(ParameterSet& params, double w);

/// Raised when a training loss turns non-finite; names epoch and batch.
struct TrainAbort : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct StepEvent {
  int epoch = 0;
  int batch = 0;
  long global_step = 0;
  bool discriminator_step = false;
  double loss = 0.0;
  double mean_d_real = 0.0;
  double mean_d_fake = 0.0;
  const GanModel* model = nullptr;
};
using StepObserver = std::function<void(const StepEvent&)>;

/// Alternating adversarial training: per batch, d_steps_per_g_step
/// discriminator updates then one generator update. Epoch batch order is a
/// seeded shuffle; the whole run is deterministic in (cfg.seed, data).
std::pair<GanModel, TrainingHistory> train_gan(GanModel model,
                                               const std::vector<ImagePair>& data,
                                               const TrainingConfig& cfg,
                                               const StepObserver& observer = {});

// Tensor packing shared with the distillation loop.
Tensor batch_to_tensor(const std::vector<const ImageGray*>& images);
ImageGray tensor_to_image(const Tensor& t, int sample_index);
/// [n,1,size,size] batch of smooth noise fields for noise conditioning.
Tensor noise_batch(Rng& rng, int n, int size);

std::string history_csv(const TrainingHistory& history);
void write_history_csv(const TrainingHistory& history, const std::string& path);

}  // namespace kgan
