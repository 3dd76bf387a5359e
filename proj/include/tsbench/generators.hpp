#pragma once
// The six pretraining-data generators and the generation budget policy.
//
// Simple generators: random walks, sinusoid sums, and a per-frequency
// Gaussian fitted in the spectral domain (no cross-frequency covariance).
// Trained generators: a reconstruction-regularized critic GAN, a beta-VAE
// and a DDPM-style 1D diffusion model, all built from strided conv encoders
// and upsample+conv decoders on an internal length rounded up to a multiple
// of four (outputs are resampled back).

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "tsbench/backbones.hpp"
#include "tsbench/checkpoint.hpp"
#include "tsbench/datasets.hpp"
#include "tsbench/optim.hpp"
#include "tsbench/rng.hpp"
#include "tsbench/tensor.hpp"

namespace tsbench {

enum class GeneratorKind { None, RandomWalk, Sinusoidal, MultivariateGaussian, Gan, BetaVae, Diffusion };

std::string generator_kind_name(GeneratorKind k);
GeneratorKind generator_kind_from_name(const std::string& name);

// Number of series to generate: the archive threshold when the pretraining
// set is smaller, otherwise the pretraining set size.
std::int64_t n_gen_policy(std::int64_t pretrain_size, std::int64_t threshold);

inline constexpr std::int64_t kUcrGenThreshold = 1494;
inline constexpr std::int64_t kUeaGenThreshold = 3398;

struct GeneratorConfig {
  std::int64_t latent_dim = 128;
  std::int64_t hidden_channels = 32;
  std::int64_t diff_steps = 100;
  double diff_beta_min = 1e-4;
  double diff_beta_max = 0.02;
  double beta = 1.0;       // beta-VAE weight
  std::int64_t epochs = 100;
  std::int64_t batch_size = 64;
  double lr = 1e-3;
  double gan_clip = 0.05;  // critic weight clipping
};

// --- simple generators --------------------------------------------------------

// Per-channel random walks: x[0] = 0, i.i.d. standard normal increments.
std::vector<Series> gen_random_walk(std::int64_t n, std::int64_t length,
                                    std::int64_t channels, Rng& rng);

struct SinusoidParams {
  double amp1, freq1, phase1, offset1;
  double amp2, freq2, phase2, offset2;
};
SinusoidParams sample_sw_params(std::int64_t length, Rng& rng);
void render_sw(const SinusoidParams& p, double* out, std::int64_t length);
// Each channel is the sum of two random sinusoids.
std::vector<Series> gen_sinusoidal(std::int64_t n, std::int64_t length,
                                   std::int64_t channels, Rng& rng);

// --- spectral Gaussian ----------------------------------------------------------

struct MgModel {
  std::int64_t channels = 0, length = 0;
  // [channels x bins], real and imaginary parts fitted independently.
  std::vector<double> mean_re, var_re, mean_im, var_im;
};

MgModel fit_mg(std::span<const Series> pretrain);
std::vector<Series> sample_mg(const MgModel& model, std::int64_t n, Rng& rng);

// --- trained generators ---------------------------------------------------------

struct ConvEncoder {
  Tensor c1w, c1b, c2w, c2b;  // two stride-2 convs
  Tensor fc_w, fc_b;          // flatten -> latent
  std::int64_t channels = 0, lm = 0, latent = 0, hidden = 0;

  ConvEncoder() = default;
  ConvEncoder(std::int64_t channels, std::int64_t lm, std::int64_t latent,
              std::int64_t hidden, Rng& rng);
  Tensor features(const Tensor& x) const;  // [B,c,Lm] -> [B,feat_dim]
  Tensor forward(const Tensor& x) const;   // [B,c,Lm] -> [B,latent]
  std::int64_t feat_dim() const { return 2 * hidden * (lm / 4); }
  void collect(const std::string& prefix, ParamList& out) const;
};

struct ConvDecoder {
  Tensor fc_w, fc_b;          // latent -> feature map
  Tensor c1w, c1b, c2w, c2b;  // two upsample+conv stages
  std::int64_t channels = 0, lm = 0, latent = 0, hidden = 0;

  ConvDecoder() = default;
  ConvDecoder(std::int64_t channels, std::int64_t lm, std::int64_t latent,
              std::int64_t hidden, Rng& rng);
  Tensor forward(const Tensor& z) const;  // [B,latent] -> [B,c,Lm]
  void collect(const std::string& prefix, ParamList& out) const;
};

struct GanModel {
  std::int64_t channels = 0, length = 0, lm = 0;
  GeneratorConfig cfg;
  ConvEncoder encoder;
  ConvDecoder generator;
  ConvEncoder critic;  // conv trunk into a single score unit

  Tensor critic_score(const Tensor& x) const;  // [B,c,Lm] -> [B,1]
  Tensor recon_loss(const Tensor& x) const;    // MSE(X, G(E(X)))
  // mean(D(fake)) - mean(D(real))
  Tensor critic_loss(const Tensor& real, const Tensor& fake) const;
  Tensor generator_loss(const Tensor& fake) const;  // -mean(D(fake))
  ParamList encoder_params() const;
  ParamList generator_params() const;
  ParamList critic_params() const;
};

struct VaeModel {
  std::int64_t channels = 0, length = 0, lm = 0;
  GeneratorConfig cfg;
  ConvEncoder trunk;          // shared conv trunk (fc unused)
  Tensor mu_w, mu_b, logvar_w, logvar_b;  // parallel heads
  ConvDecoder decoder;

  // (mu, logvar) of the latent posterior for x.
  std::pair<Tensor, Tensor> encode(const Tensor& x) const;
  // (reconstruction MSE, KL) for input x under the reparameterized draw
  // z = mu + sigma * eps; the training objective is recon + beta * kl.
  std::pair<Tensor, Tensor> loss_parts(const Tensor& x, const Tensor& eps) const;
  ParamList params() const;
};

// Mean over batch of sum over dims of (mu^2 + sigma^2 - 1 - log sigma^2)/2.
Tensor vae_kl(const Tensor& mu, const Tensor& logvar);

struct DiffusionModel {
  std::int64_t channels = 0, length = 0, lm = 0;
  GeneratorConfig cfg;
  std::vector<double> betas, alpha_bar;
  // U-style denoiser with one down/up stage and a skip concatenation.
  Tensor in_w, in_b, down_w, down_b, mid_w, mid_b;
  Tensor temb_w, temb_b;  // timestep embedding -> mid-channel bias
  Tensor up_w, up_b, fuse_w, fuse_b, out_w, out_b;

  // eps prediction for noised input at integer timesteps t (1-based).
  Tensor predict_noise(const Tensor& x_t, const std::vector<std::int64_t>& t) const;
  ParamList params() const;
};

// x_t = sqrt(abar) * x0 + sqrt(1 - abar) * eps
Series noised_sample(const Series& x0, double abar, const Series& eps);

GanModel train_gan(std::span<const Series> pretrain, const GeneratorConfig& cfg, Rng& rng);
std::vector<Series> sample_gan(const GanModel& model, std::int64_t n, Rng& rng);

VaeModel train_vae(std::span<const Series> pretrain, const GeneratorConfig& cfg, Rng& rng);
std::vector<Series> sample_vae(const VaeModel& model, std::int64_t n, Rng& rng);

DiffusionModel train_diffusion(std::span<const Series> pretrain, const GeneratorConfig& cfg,
                               Rng& rng);
std::vector<Series> sample_diffusion(const DiffusionModel& model, std::int64_t n, Rng& rng);

// --- tagged union ----------------------------------------------------------------

struct RwGenerator {
  std::int64_t channels = 1, length = 0;
};
struct SwGenerator {
  std::int64_t channels = 1, length = 0;
};

struct GeneratorModel {
  GeneratorKind kind = GeneratorKind::None;
  std::variant<std::monostate, RwGenerator, SwGenerator, MgModel, GanModel, VaeModel,
               DiffusionModel>
      model;
};

// Fits (or just shapes) a generator on the pretraining split. Series must
// share (channels, length); resample beforehand if they do not.
GeneratorModel fit_generator(GeneratorKind kind, std::span<const Series> pretrain,
                             const GeneratorConfig& cfg, Rng& rng);
std::vector<Series> sample_generator(const GeneratorModel& model, std::int64_t n, Rng& rng);

Checkpoint generator_checkpoint(const GeneratorModel& model);
GeneratorModel generator_from_checkpoint(const Checkpoint& ckpt);

// Linear resampling to a new length (used to unify variable-length sets).
Series resample_series(const Series& s, std::int64_t new_length);
std::int64_t median_length(std::span<const Series> data);

}  // namespace tsbench
