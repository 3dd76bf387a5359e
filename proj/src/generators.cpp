#include "tsbench/generators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <json.hpp>

#include "tsbench/errors.hpp"
#include "tsbench/fft.hpp"

namespace tsbench {

using nlohmann::json;

namespace {

Tensor init_weight(Shape shape, std::int64_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  return Tensor::uniform(std::move(shape), bound, rng, true);
}

// Internal model length: multiple of 4, at least 8.
std::int64_t model_length(std::int64_t l) {
  const std::int64_t lm = std::max<std::int64_t>(l, 8);
  return (lm + 3) / 4 * 4;
}

void check_uniform_shapes(std::span<const Series> data, const char* who) {
  if (data.empty()) throw UsageError(std::string(who) + ": empty pretraining set");
  for (const auto& s : data)
    if (s.channels != data[0].channels || s.length != data[0].length)
      throw ShapeError(std::string(who) +
                       ": series shapes differ; resample to a common length first");
}

Tensor series_to_tensor(std::span<const Series> batch, std::int64_t lm) {
  std::vector<double> data;
  const std::int64_t c = batch[0].channels;
  data.reserve(batch.size() * static_cast<std::size_t>(c * lm));
  for (const auto& s : batch) {
    const Series r = s.length == lm ? s : resample_series(s, lm);
    data.insert(data.end(), r.values.begin(), r.values.end());
  }
  return Tensor::from_data({static_cast<std::int64_t>(batch.size()), c, lm},
                           std::move(data));
}

std::vector<Series> tensor_to_series(const Tensor& t, std::int64_t out_length) {
  const std::int64_t n = t.dim(0), c = t.dim(1), lm = t.dim(2);
  std::vector<Series> out;
  out.reserve(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    Series s(c, lm);
    std::copy(t.data() + i * c * lm, t.data() + (i + 1) * c * lm, s.values.begin());
    out.push_back(lm == out_length ? std::move(s) : resample_series(s, out_length));
  }
  return out;
}

Tensor gaussian_tensor(Shape shape, Rng& rng) {
  Tensor t = Tensor::zeros(std::move(shape));
  for (auto& v : t.vec()) v = rng.normal();
  return t;
}

}  // namespace

std::string generator_kind_name(GeneratorKind k) {
  switch (k) {
    case GeneratorKind::None: return "ng";
    case GeneratorKind::RandomWalk: return "rw";
    case GeneratorKind::Sinusoidal: return "sw";
    case GeneratorKind::MultivariateGaussian: return "mg";
    case GeneratorKind::Gan: return "gan";
    case GeneratorKind::BetaVae: return "bvae";
    case GeneratorKind::Diffusion: return "diff";
  }
  return "unknown";
}

GeneratorKind generator_kind_from_name(const std::string& name) {
  if (name == "ng" || name == "none") return GeneratorKind::None;
  if (name == "rw") return GeneratorKind::RandomWalk;
  if (name == "sw") return GeneratorKind::Sinusoidal;
  if (name == "mg") return GeneratorKind::MultivariateGaussian;
  if (name == "gan") return GeneratorKind::Gan;
  if (name == "bvae" || name == "vae") return GeneratorKind::BetaVae;
  if (name == "diff" || name == "diffusion") return GeneratorKind::Diffusion;
  throw UsageError("unknown generator '" + name + "'");
}

std::int64_t n_gen_policy(std::int64_t pretrain_size, std::int64_t threshold) {
  if (pretrain_size < 1 || threshold < 1)
    throw UsageError("n_gen_policy: inputs must be positive");
  return pretrain_size < threshold ? threshold : pretrain_size;
}

// ---------------------------------------------------------------------------
// Resampling helpers
// ---------------------------------------------------------------------------

Series resample_series(const Series& s, std::int64_t new_length) {
  if (new_length < 1) throw UsageError("resample_series: bad length");
  if (new_length == s.length) return s;
  Series out(s.channels, new_length);
  for (std::int64_t c = 0; c < s.channels; ++c) {
    const double* src = s.values.data() + c * s.length;
    double* dst = out.values.data() + c * new_length;
    if (s.length == 1) {
      for (std::int64_t t = 0; t < new_length; ++t) dst[t] = src[0];
      continue;
    }
    const double step = static_cast<double>(s.length - 1) /
                        static_cast<double>(std::max<std::int64_t>(new_length - 1, 1));
    for (std::int64_t t = 0; t < new_length; ++t) {
      const double pos = static_cast<double>(t) * step;
      const std::int64_t lo =
          std::min<std::int64_t>(static_cast<std::int64_t>(pos), s.length - 2);
      const double frac = pos - static_cast<double>(lo);
      dst[t] = src[lo] * (1.0 - frac) + src[lo + 1] * frac;
    }
  }
  return out;
}

std::int64_t median_length(std::span<const Series> data) {
  if (data.empty()) throw UsageError("median_length: empty set");
  std::vector<std::int64_t> lens;
  lens.reserve(data.size());
  for (const auto& s : data) lens.push_back(s.length);
  std::sort(lens.begin(), lens.end());
  return lens[lens.size() / 2];
}

// ---------------------------------------------------------------------------
// Random walk and sinusoids
// ---------------------------------------------------------------------------

std::vector<Series> gen_random_walk(std::int64_t n, std::int64_t length,
                                    std::int64_t channels, Rng& rng) {
  if (n < 1 || length < 1 || channels < 1)
    throw UsageError("gen_random_walk: n, length, channels must be positive");
  std::vector<Series> out;
  out.reserve(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    Series s(channels, length);
    for (std::int64_t c = 0; c < channels; ++c) {
      double* row = s.values.data() + c * length;
      row[0] = 0.0;
      for (std::int64_t t = 1; t < length; ++t) row[t] = row[t - 1] + rng.normal();
    }
    out.push_back(std::move(s));
  }
  return out;
}

SinusoidParams sample_sw_params(std::int64_t length, Rng& rng) {
  SinusoidParams p;
  const double max_freq = std::max(1.0, static_cast<double>(length) / 4.0);
  p.amp1 = rng.uniform(0.5, 2.0);
  p.freq1 = rng.uniform(1.0, max_freq);
  p.phase1 = rng.uniform(0.0, 2.0 * std::numbers::pi);
  p.offset1 = rng.uniform(-1.0, 1.0);
  p.amp2 = rng.uniform(0.5, 2.0);
  p.freq2 = rng.uniform(1.0, max_freq);
  p.phase2 = rng.uniform(0.0, 2.0 * std::numbers::pi);
  p.offset2 = rng.uniform(-1.0, 1.0);
  return p;
}

void render_sw(const SinusoidParams& p, double* out, std::int64_t length) {
  for (std::int64_t t = 0; t < length; ++t) {
    const double phase = 2.0 * std::numbers::pi * static_cast<double>(t) /
                         static_cast<double>(length);
    out[t] = p.amp1 * std::sin(p.freq1 * phase + p.phase1) + p.offset1 +
             p.amp2 * std::sin(p.freq2 * phase + p.phase2) + p.offset2;
  }
}

std::vector<Series> gen_sinusoidal(std::int64_t n, std::int64_t length,
                                   std::int64_t channels, Rng& rng) {
  if (n < 1 || length < 1 || channels < 1)
    throw UsageError("gen_sinusoidal: n, length, channels must be positive");
  std::vector<Series> out;
  out.reserve(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    Series s(channels, length);
    for (std::int64_t c = 0; c < channels; ++c)
      render_sw(sample_sw_params(length, rng), s.values.data() + c * length, length);
    out.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Spectral Gaussian
// ---------------------------------------------------------------------------

MgModel fit_mg(std::span<const Series> pretrain) {
  check_uniform_shapes(pretrain, "fit_mg");
  if (pretrain.size() < 2)
    throw UsageError("fit_mg: need at least 2 series for a variance estimate");
  MgModel m;
  m.channels = pretrain[0].channels;
  m.length = pretrain[0].length;
  const std::int64_t bins = m.length / 2 + 1;
  const std::size_t total = static_cast<std::size_t>(m.channels * bins);
  m.mean_re.assign(total, 0.0);
  m.var_re.assign(total, 0.0);
  m.mean_im.assign(total, 0.0);
  m.var_im.assign(total, 0.0);
  const double inv_n = 1.0 / static_cast<double>(pretrain.size());
  std::vector<std::vector<fft::cplx>> spectra;
  spectra.reserve(pretrain.size() * static_cast<std::size_t>(m.channels));
  for (const auto& s : pretrain)
    for (std::int64_t c = 0; c < m.channels; ++c)
      spectra.push_back(fft::rfft(s.values.data() + c * s.length,
                                  static_cast<std::size_t>(s.length)));
  for (std::int64_t c = 0; c < m.channels; ++c)
    for (std::int64_t k = 0; k < bins; ++k) {
      const std::size_t idx = static_cast<std::size_t>(c * bins + k);
      double mre = 0, mim = 0;
      for (std::size_t i = 0; i < pretrain.size(); ++i) {
        const auto& sp = spectra[i * m.channels + c];
        mre += sp[k].real();
        mim += sp[k].imag();
      }
      mre *= inv_n;
      mim *= inv_n;
      double vre = 0, vim = 0;
      for (std::size_t i = 0; i < pretrain.size(); ++i) {
        const auto& sp = spectra[i * m.channels + c];
        vre += (sp[k].real() - mre) * (sp[k].real() - mre);
        vim += (sp[k].imag() - mim) * (sp[k].imag() - mim);
      }
      m.mean_re[idx] = mre;
      m.var_re[idx] = vre * inv_n;
      m.mean_im[idx] = mim;
      m.var_im[idx] = vim * inv_n;
    }
  return m;
}

std::vector<Series> sample_mg(const MgModel& m, std::int64_t n, Rng& rng) {
  if (n < 1) throw UsageError("sample_mg: n must be positive");
  const std::int64_t bins = m.length / 2 + 1;
  const bool even = m.length % 2 == 0;
  std::vector<Series> out;
  out.reserve(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    Series s(m.channels, m.length);
    for (std::int64_t c = 0; c < m.channels; ++c) {
      std::vector<fft::cplx> half(static_cast<std::size_t>(bins));
      for (std::int64_t k = 0; k < bins; ++k) {
        const std::size_t idx = static_cast<std::size_t>(c * bins + k);
        double re = m.mean_re[idx] + std::sqrt(m.var_re[idx]) * rng.normal();
        double im = m.mean_im[idx] + std::sqrt(m.var_im[idx]) * rng.normal();
        // DC (and Nyquist for even length) must stay real.
        if (k == 0 || (even && k == bins - 1)) im = 0.0;
        half[k] = fft::cplx(re, im);
      }
      const std::vector<double> row = fft::irfft(half, static_cast<std::size_t>(m.length));
      std::copy(row.begin(), row.end(), s.values.begin() + c * m.length);
    }
    out.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Conv encoder/decoder building blocks
// ---------------------------------------------------------------------------

ConvEncoder::ConvEncoder(std::int64_t channels_, std::int64_t lm_, std::int64_t latent_,
                         std::int64_t hidden_, Rng& rng)
    : channels(channels_), lm(lm_), latent(latent_), hidden(hidden_) {
  c1w = init_weight({hidden, channels, 5}, channels * 5, rng);
  c1b = init_weight({hidden}, channels * 5, rng);
  c2w = init_weight({2 * hidden, hidden, 5}, hidden * 5, rng);
  c2b = init_weight({2 * hidden}, hidden * 5, rng);
  fc_w = init_weight({latent, feat_dim()}, feat_dim(), rng);
  fc_b = init_weight({latent}, feat_dim(), rng);
}

Tensor ConvEncoder::features(const Tensor& x) const {
  Tensor h = relu(conv1d(x, c1w, c1b, 2, 2));   // [B,h,Lm/2]
  h = relu(conv1d(h, c2w, c2b, 2, 2));          // [B,2h,Lm/4]
  return reshape(h, {x.dim(0), feat_dim()});
}

Tensor ConvEncoder::forward(const Tensor& x) const {
  return linear(features(x), fc_w, fc_b);
}

void ConvEncoder::collect(const std::string& prefix, ParamList& out) const {
  out.add(prefix + "c1w", c1w);
  out.add(prefix + "c1b", c1b);
  out.add(prefix + "c2w", c2w);
  out.add(prefix + "c2b", c2b);
  out.add(prefix + "fc_w", fc_w);
  out.add(prefix + "fc_b", fc_b);
}

ConvDecoder::ConvDecoder(std::int64_t channels_, std::int64_t lm_, std::int64_t latent_,
                         std::int64_t hidden_, Rng& rng)
    : channels(channels_), lm(lm_), latent(latent_), hidden(hidden_) {
  const std::int64_t feat = 2 * hidden * (lm / 4);
  fc_w = init_weight({feat, latent}, latent, rng);
  fc_b = init_weight({feat}, latent, rng);
  c1w = init_weight({hidden, 2 * hidden, 5}, 2 * hidden * 5, rng);
  c1b = init_weight({hidden}, 2 * hidden * 5, rng);
  c2w = init_weight({channels, hidden, 5}, hidden * 5, rng);
  c2b = init_weight({channels}, hidden * 5, rng);
}

Tensor ConvDecoder::forward(const Tensor& z) const {
  Tensor h = reshape(linear(z, fc_w, fc_b), {z.dim(0), 2 * hidden, lm / 4});
  h = relu(conv1d(upsample2_nearest(h), c1w, c1b, 1, 2));  // [B,h,Lm/2]
  return conv1d(upsample2_nearest(h), c2w, c2b, 1, 2);     // [B,c,Lm]
}

void ConvDecoder::collect(const std::string& prefix, ParamList& out) const {
  out.add(prefix + "fc_w", fc_w);
  out.add(prefix + "fc_b", fc_b);
  out.add(prefix + "c1w", c1w);
  out.add(prefix + "c1b", c1b);
  out.add(prefix + "c2w", c2w);
  out.add(prefix + "c2b", c2b);
}

// ---------------------------------------------------------------------------
// GAN
// ---------------------------------------------------------------------------

Tensor GanModel::critic_score(const Tensor& x) const { return critic.forward(x); }

Tensor GanModel::recon_loss(const Tensor& x) const {
  return mse(x, generator.forward(encoder.forward(x)));
}

Tensor GanModel::critic_loss(const Tensor& real, const Tensor& fake) const {
  return sub(mean_all(critic_score(fake)), mean_all(critic_score(real)));
}

Tensor GanModel::generator_loss(const Tensor& fake) const {
  return neg(mean_all(critic_score(fake)));
}

ParamList GanModel::encoder_params() const {
  ParamList p;
  encoder.collect("encoder.", p);
  return p;
}
ParamList GanModel::generator_params() const {
  ParamList p;
  generator.collect("generator.", p);
  return p;
}
ParamList GanModel::critic_params() const {
  ParamList p;
  critic.collect("critic.", p);
  return p;
}

namespace {

void clip_params(ParamList& params, double limit) {
  for (auto& [name, t] : params.items)
    for (auto& v : t.vec()) v = std::clamp(v, -limit, limit);
}

std::vector<std::span<const Series>> make_batches(std::span<const Series> data,
                                                  std::vector<std::size_t>& order,
                                                  std::int64_t batch_size, Rng& rng,
                                                  std::vector<Series>& storage) {
  // Returns shuffled batches as materialized vectors (storage keeps them alive).
  rng.shuffle(order);
  storage.clear();
  storage.reserve(data.size());
  for (std::size_t i : order) storage.push_back(data[i]);
  std::vector<std::span<const Series>> batches;
  for (std::size_t start = 0; start < storage.size();
       start += static_cast<std::size_t>(batch_size)) {
    const std::size_t len =
        std::min<std::size_t>(static_cast<std::size_t>(batch_size), storage.size() - start);
    batches.emplace_back(storage.data() + start, len);
  }
  return batches;
}

void check_finite_loss(double v, const char* who, std::int64_t iter) {
  if (!std::isfinite(v))
    throw UsageError(std::string(who) + ": non-finite loss at iteration " +
                     std::to_string(iter) + " (value " + std::to_string(v) + ")");
}

}  // namespace

GanModel train_gan(std::span<const Series> pretrain, const GeneratorConfig& cfg, Rng& rng) {
  check_uniform_shapes(pretrain, "train_gan");
  GanModel m;
  m.channels = pretrain[0].channels;
  m.length = pretrain[0].length;
  m.lm = model_length(m.length);
  m.cfg = cfg;
  m.encoder = ConvEncoder(m.channels, m.lm, cfg.latent_dim, cfg.hidden_channels, rng);
  m.generator = ConvDecoder(m.channels, m.lm, cfg.latent_dim, cfg.hidden_channels, rng);
  m.critic = ConvEncoder(m.channels, m.lm, 1, cfg.hidden_channels, rng);

  AdamWConfig ocfg;
  ocfg.lr = cfg.lr;
  ocfg.weight_decay = 0.0;
  AdamW opt_e(m.encoder_params(), ocfg);
  AdamW opt_g(m.generator_params(), ocfg);
  AdamW opt_d(m.critic_params(), ocfg);

  std::vector<std::size_t> order(pretrain.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<Series> storage;
  std::int64_t iter = 0;
  for (std::int64_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (auto batch : make_batches(pretrain, order, cfg.batch_size, rng, storage)) {
      Tensor x = series_to_tensor(batch, m.lm);
      const std::int64_t b = x.dim(0);

      // encoder+generator reconstruction step
      opt_e.zero_grad();
      opt_g.zero_grad();
      Tensor lrec = m.recon_loss(x);
      check_finite_loss(lrec.item(), "train_gan(recon)", iter);
      lrec.backward();
      opt_e.step();
      opt_g.step();

      // critic step with weight clipping
      Tensor z = gaussian_tensor({b, cfg.latent_dim}, rng);
      opt_d.zero_grad();
      opt_g.zero_grad();
      Tensor lcr = m.critic_loss(x, m.generator.forward(z));
      check_finite_loss(lcr.item(), "train_gan(critic)", iter);
      lcr.backward();
      opt_d.step();
      {
        ParamList dp = m.critic_params();
        clip_params(dp, cfg.gan_clip);
      }

      // generator adversarial step
      Tensor z2 = gaussian_tensor({b, cfg.latent_dim}, rng);
      opt_g.zero_grad();
      opt_d.zero_grad();
      Tensor lg = m.generator_loss(m.generator.forward(z2));
      check_finite_loss(lg.item(), "train_gan(generator)", iter);
      lg.backward();
      opt_g.step();
      ++iter;
    }
  }
  return m;
}

std::vector<Series> sample_gan(const GanModel& m, std::int64_t n, Rng& rng) {
  if (n < 1) throw UsageError("sample_gan: n must be positive");
  NoGradGuard ng;
  std::vector<Series> out;
  out.reserve(static_cast<std::size_t>(n));
  for (std::int64_t start = 0; start < n; start += 256) {
    const std::int64_t b = std::min<std::int64_t>(256, n - start);
    Tensor z = gaussian_tensor({b, m.cfg.latent_dim}, rng);
    auto chunk = tensor_to_series(m.generator.forward(z), m.length);
    for (auto& s : chunk) out.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------------------
// beta-VAE
// ---------------------------------------------------------------------------

std::pair<Tensor, Tensor> VaeModel::encode(const Tensor& x) const {
  Tensor f = trunk.features(x);
  return {linear(f, mu_w, mu_b), linear(f, logvar_w, logvar_b)};
}

std::pair<Tensor, Tensor> VaeModel::loss_parts(const Tensor& x, const Tensor& eps) const {
  auto [mu, logvar] = encode(x);
  Tensor z = add(mu, mul(exp_elem(mul_scalar(logvar, 0.5)), eps));
  return {mse(x, decoder.forward(z)), vae_kl(mu, logvar)};
}

ParamList VaeModel::params() const {
  ParamList p;
  trunk.collect("trunk.", p);
  p.add("mu_w", mu_w);
  p.add("mu_b", mu_b);
  p.add("logvar_w", logvar_w);
  p.add("logvar_b", logvar_b);
  decoder.collect("decoder.", p);
  return p;
}

Tensor vae_kl(const Tensor& mu, const Tensor& logvar) {
  if (mu.shape() != logvar.shape()) throw ShapeError("vae_kl: shape mismatch");
  const std::int64_t batch = mu.dim(0);
  // 0.5 * sum(mu^2 + exp(logvar) - 1 - logvar), averaged over the batch
  Tensor t = add(mul(mu, mu), exp_elem(logvar));
  t = add(t, add_scalar(neg(logvar), -1.0));
  return mul_scalar(sum_all(t), 0.5 / static_cast<double>(batch));
}

VaeModel train_vae(std::span<const Series> pretrain, const GeneratorConfig& cfg, Rng& rng) {
  check_uniform_shapes(pretrain, "train_vae");
  if (cfg.beta < 0.0) throw UsageError("train_vae: beta must be non-negative");
  VaeModel m;
  m.channels = pretrain[0].channels;
  m.length = pretrain[0].length;
  m.lm = model_length(m.length);
  m.cfg = cfg;
  m.trunk = ConvEncoder(m.channels, m.lm, cfg.latent_dim, cfg.hidden_channels, rng);
  m.mu_w = init_weight({cfg.latent_dim, m.trunk.feat_dim()}, m.trunk.feat_dim(), rng);
  m.mu_b = init_weight({cfg.latent_dim}, m.trunk.feat_dim(), rng);
  m.logvar_w = init_weight({cfg.latent_dim, m.trunk.feat_dim()}, m.trunk.feat_dim(), rng);
  m.logvar_b = init_weight({cfg.latent_dim}, m.trunk.feat_dim(), rng);
  m.decoder = ConvDecoder(m.channels, m.lm, cfg.latent_dim, cfg.hidden_channels, rng);

  AdamWConfig ocfg;
  ocfg.lr = cfg.lr;
  ocfg.weight_decay = 0.0;
  AdamW opt(m.params(), ocfg);

  std::vector<std::size_t> order(pretrain.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<Series> storage;
  std::int64_t iter = 0;
  for (std::int64_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (auto batch : make_batches(pretrain, order, cfg.batch_size, rng, storage)) {
      Tensor x = series_to_tensor(batch, m.lm);
      Tensor eps = gaussian_tensor({x.dim(0), cfg.latent_dim}, rng);
      auto [recon, kl] = m.loss_parts(x, eps);
      Tensor loss = cfg.beta > 0.0 ? add(recon, mul_scalar(kl, cfg.beta)) : recon;
      check_finite_loss(loss.item(), "train_vae", iter);
      opt.zero_grad();
      loss.backward();
      opt.step();
      ++iter;
    }
  }
  return m;
}

std::vector<Series> sample_vae(const VaeModel& m, std::int64_t n, Rng& rng) {
  if (n < 1) throw UsageError("sample_vae: n must be positive");
  NoGradGuard ng;
  std::vector<Series> out;
  out.reserve(static_cast<std::size_t>(n));
  for (std::int64_t start = 0; start < n; start += 256) {
    const std::int64_t b = std::min<std::int64_t>(256, n - start);
    Tensor z = gaussian_tensor({b, m.cfg.latent_dim}, rng);
    auto chunk = tensor_to_series(m.decoder.forward(z), m.length);
    for (auto& s : chunk) out.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Diffusion
// ---------------------------------------------------------------------------

namespace {

constexpr std::int64_t kTimeEmbedDim = 32;

Tensor timestep_embedding(const std::vector<std::int64_t>& t, std::int64_t steps) {
  Tensor table = positional_encoding(steps + 1, kTimeEmbedDim);
  Tensor out = Tensor::zeros({static_cast<std::int64_t>(t.size()), kTimeEmbedDim});
  for (std::size_t i = 0; i < t.size(); ++i)
    std::copy(table.data() + t[i] * kTimeEmbedDim,
              table.data() + (t[i] + 1) * kTimeEmbedDim,
              out.data() + static_cast<std::int64_t>(i) * kTimeEmbedDim);
  return out;
}

}  // namespace

Series noised_sample(const Series& x0, double abar, const Series& eps) {
  if (x0.channels != eps.channels || x0.length != eps.length)
    throw ShapeError("noised_sample: shape mismatch");
  Series out(x0.channels, x0.length);
  const double a = std::sqrt(abar), b = std::sqrt(1.0 - abar);
  for (std::size_t i = 0; i < out.values.size(); ++i)
    out.values[i] = a * x0.values[i] + b * eps.values[i];
  return out;
}

Tensor DiffusionModel::predict_noise(const Tensor& x_t,
                                     const std::vector<std::int64_t>& t) const {
  Tensor h1 = relu(conv1d(x_t, in_w, in_b, 1, 2));       // [B,h,Lm]
  Tensor h2 = relu(conv1d(h1, down_w, down_b, 2, 2));    // [B,2h,Lm/2]
  Tensor temb = linear(timestep_embedding(t, cfg.diff_steps), temb_w, temb_b);
  Tensor h3 = relu(add_bias_bc(conv1d(h2, mid_w, mid_b, 1, 1), temb));
  Tensor u = relu(conv1d(upsample2_nearest(h3), up_w, up_b, 1, 2));  // [B,h,Lm]
  Tensor fused = relu(conv1d(concat_channels(u, h1), fuse_w, fuse_b, 1, 1));
  return conv1d(fused, out_w, out_b, 1, 1);              // [B,c,Lm]
}

ParamList DiffusionModel::params() const {
  ParamList p;
  p.add("in_w", in_w);
  p.add("in_b", in_b);
  p.add("down_w", down_w);
  p.add("down_b", down_b);
  p.add("mid_w", mid_w);
  p.add("mid_b", mid_b);
  p.add("temb_w", temb_w);
  p.add("temb_b", temb_b);
  p.add("up_w", up_w);
  p.add("up_b", up_b);
  p.add("fuse_w", fuse_w);
  p.add("fuse_b", fuse_b);
  p.add("out_w", out_w);
  p.add("out_b", out_b);
  return p;
}

DiffusionModel train_diffusion(std::span<const Series> pretrain, const GeneratorConfig& cfg,
                               Rng& rng) {
  check_uniform_shapes(pretrain, "train_diffusion");
  if (cfg.diff_steps < 1) throw UsageError("train_diffusion: diff_steps must be >= 1");
  DiffusionModel m;
  m.channels = pretrain[0].channels;
  m.length = pretrain[0].length;
  m.lm = model_length(m.length);
  m.cfg = cfg;
  m.betas.resize(static_cast<std::size_t>(cfg.diff_steps));
  for (std::int64_t i = 0; i < cfg.diff_steps; ++i) {
    const double f = cfg.diff_steps == 1
                         ? 0.0
                         : static_cast<double>(i) / static_cast<double>(cfg.diff_steps - 1);
    m.betas[i] = cfg.diff_beta_min + (cfg.diff_beta_max - cfg.diff_beta_min) * f;
    if (m.betas[i] <= 0.0 || m.betas[i] >= 1.0)
      throw UsageError("train_diffusion: noise schedule must stay in (0,1)");
  }
  m.alpha_bar.resize(m.betas.size());
  double prod = 1.0;
  for (std::size_t i = 0; i < m.betas.size(); ++i) {
    prod *= 1.0 - m.betas[i];
    m.alpha_bar[i] = prod;
  }

  const std::int64_t h = cfg.hidden_channels;
  m.in_w = init_weight({h, m.channels, 5}, m.channels * 5, rng);
  m.in_b = init_weight({h}, m.channels * 5, rng);
  m.down_w = init_weight({2 * h, h, 5}, h * 5, rng);
  m.down_b = init_weight({2 * h}, h * 5, rng);
  m.mid_w = init_weight({2 * h, 2 * h, 3}, 2 * h * 3, rng);
  m.mid_b = init_weight({2 * h}, 2 * h * 3, rng);
  m.temb_w = init_weight({2 * h, kTimeEmbedDim}, kTimeEmbedDim, rng);
  m.temb_b = init_weight({2 * h}, kTimeEmbedDim, rng);
  m.up_w = init_weight({h, 2 * h, 5}, 2 * h * 5, rng);
  m.up_b = init_weight({h}, 2 * h * 5, rng);
  m.fuse_w = init_weight({h, 2 * h, 3}, 2 * h * 3, rng);
  m.fuse_b = init_weight({h}, 2 * h * 3, rng);
  m.out_w = init_weight({m.channels, h, 3}, h * 3, rng);
  m.out_b = init_weight({m.channels}, h * 3, rng);

  AdamWConfig ocfg;
  ocfg.lr = cfg.lr;
  ocfg.weight_decay = 0.0;
  AdamW opt(m.params(), ocfg);

  std::vector<std::size_t> order(pretrain.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<Series> storage;
  std::int64_t iter = 0;
  for (std::int64_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (auto batch : make_batches(pretrain, order, cfg.batch_size, rng, storage)) {
      const std::int64_t b = static_cast<std::int64_t>(batch.size());
      std::vector<std::int64_t> t(static_cast<std::size_t>(b));
      std::vector<double> xt_data, eps_data;
      xt_data.reserve(static_cast<std::size_t>(b * m.channels * m.lm));
      eps_data.reserve(xt_data.capacity());
      for (std::int64_t i = 0; i < b; ++i) {
        t[i] = rng.uniform_int(1, cfg.diff_steps);
        const Series x0 = batch[i].length == m.lm
                              ? batch[i]
                              : resample_series(batch[i], m.lm);
        Series eps(x0.channels, x0.length);
        for (auto& v : eps.values) v = rng.normal();
        const Series xt = noised_sample(x0, m.alpha_bar[t[i] - 1], eps);
        xt_data.insert(xt_data.end(), xt.values.begin(), xt.values.end());
        eps_data.insert(eps_data.end(), eps.values.begin(), eps.values.end());
      }
      Tensor xt = Tensor::from_data({b, m.channels, m.lm}, std::move(xt_data));
      Tensor eps = Tensor::from_data({b, m.channels, m.lm}, std::move(eps_data));
      Tensor loss = mse(eps, m.predict_noise(xt, t));
      check_finite_loss(loss.item(), "train_diffusion", iter);
      opt.zero_grad();
      loss.backward();
      opt.step();
      ++iter;
    }
  }
  return m;
}

std::vector<Series> sample_diffusion(const DiffusionModel& m, std::int64_t n, Rng& rng) {
  if (n < 1) throw UsageError("sample_diffusion: n must be positive");
  NoGradGuard ng;
  const std::int64_t steps = m.cfg.diff_steps;
  std::vector<Series> out;
  out.reserve(static_cast<std::size_t>(n));
  for (std::int64_t start = 0; start < n; start += 128) {
    const std::int64_t b = std::min<std::int64_t>(128, n - start);
    Tensor x = gaussian_tensor({b, m.channels, m.lm}, rng);
    for (std::int64_t t = steps; t >= 1; --t) {
      const double beta = m.betas[t - 1];
      const double alpha = 1.0 - beta;
      const double abar = m.alpha_bar[t - 1];
      const double abar_prev = t > 1 ? m.alpha_bar[t - 2] : 1.0;
      Tensor eps_hat = m.predict_noise(x, std::vector<std::int64_t>(b, t));
      const double sigma = std::sqrt((1.0 - abar_prev) / (1.0 - abar) * beta);
      const double k1 = 1.0 / std::sqrt(alpha);
      const double k2 = beta / std::sqrt(1.0 - abar);
      for (std::size_t i = 0; i < x.vec().size(); ++i) {
        double v = k1 * (x.vec()[i] - k2 * eps_hat.vec()[i]);
        if (t > 1) v += sigma * rng.normal();
        x.vec()[i] = v;
      }
    }
    auto chunk = tensor_to_series(x, m.length);
    for (auto& s : chunk) out.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Tagged union, fitting and checkpoints
// ---------------------------------------------------------------------------

GeneratorModel fit_generator(GeneratorKind kind, std::span<const Series> pretrain,
                             const GeneratorConfig& cfg, Rng& rng) {
  GeneratorModel out;
  out.kind = kind;
  switch (kind) {
    case GeneratorKind::None:
      throw UsageError("fit_generator: NG has nothing to fit");
    case GeneratorKind::RandomWalk:
      check_uniform_shapes(pretrain, "fit_generator(rw)");
      out.model = RwGenerator{pretrain[0].channels, pretrain[0].length};
      return out;
    case GeneratorKind::Sinusoidal:
      check_uniform_shapes(pretrain, "fit_generator(sw)");
      out.model = SwGenerator{pretrain[0].channels, pretrain[0].length};
      return out;
    case GeneratorKind::MultivariateGaussian:
      out.model = fit_mg(pretrain);
      return out;
    case GeneratorKind::Gan:
      out.model = train_gan(pretrain, cfg, rng);
      return out;
    case GeneratorKind::BetaVae:
      out.model = train_vae(pretrain, cfg, rng);
      return out;
    case GeneratorKind::Diffusion:
      out.model = train_diffusion(pretrain, cfg, rng);
      return out;
  }
  throw UsageError("fit_generator: unknown kind");
}

std::vector<Series> sample_generator(const GeneratorModel& model, std::int64_t n, Rng& rng) {
  switch (model.kind) {
    case GeneratorKind::None:
      throw UsageError("sample_generator: NG cannot sample");
    case GeneratorKind::RandomWalk: {
      const auto& g = std::get<RwGenerator>(model.model);
      return gen_random_walk(n, g.length, g.channels, rng);
    }
    case GeneratorKind::Sinusoidal: {
      const auto& g = std::get<SwGenerator>(model.model);
      return gen_sinusoidal(n, g.length, g.channels, rng);
    }
    case GeneratorKind::MultivariateGaussian:
      return sample_mg(std::get<MgModel>(model.model), n, rng);
    case GeneratorKind::Gan:
      return sample_gan(std::get<GanModel>(model.model), n, rng);
    case GeneratorKind::BetaVae:
      return sample_vae(std::get<VaeModel>(model.model), n, rng);
    case GeneratorKind::Diffusion:
      return sample_diffusion(std::get<DiffusionModel>(model.model), n, rng);
  }
  throw UsageError("sample_generator: unknown kind");
}

namespace {

json generator_meta(const GeneratorModel& model) {
  json meta;
  meta["kind"] = generator_kind_name(model.kind);
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, RwGenerator> || std::is_same_v<T, SwGenerator>) {
          meta["channels"] = m.channels;
          meta["length"] = m.length;
        } else if constexpr (std::is_same_v<T, MgModel>) {
          meta["channels"] = m.channels;
          meta["length"] = m.length;
        } else if constexpr (std::is_same_v<T, GanModel> || std::is_same_v<T, VaeModel> ||
                             std::is_same_v<T, DiffusionModel>) {
          meta["channels"] = m.channels;
          meta["length"] = m.length;
          meta["lm"] = m.lm;
          meta["latent_dim"] = m.cfg.latent_dim;
          meta["hidden_channels"] = m.cfg.hidden_channels;
          meta["diff_steps"] = m.cfg.diff_steps;
          meta["diff_beta_min"] = m.cfg.diff_beta_min;
          meta["diff_beta_max"] = m.cfg.diff_beta_max;
          meta["beta"] = m.cfg.beta;
        }
      },
      model.model);
  return meta;
}

ParamList neural_params(const GeneratorModel& model) {
  ParamList p;
  if (const auto* gan = std::get_if<GanModel>(&model.model)) {
    gan->encoder.collect("encoder.", p);
    gan->generator.collect("generator.", p);
    gan->critic.collect("critic.", p);
  } else if (const auto* vae = std::get_if<VaeModel>(&model.model)) {
    p = vae->params();
  } else if (const auto* diff = std::get_if<DiffusionModel>(&model.model)) {
    p = diff->params();
  }
  return p;
}

}  // namespace

Checkpoint generator_checkpoint(const GeneratorModel& model) {
  Checkpoint ck;
  ck.meta = generator_meta(model).dump();
  if (const auto* mg = std::get_if<MgModel>(&model.model)) {
    const std::int64_t n = static_cast<std::int64_t>(mg->mean_re.size());
    ck.tensors.emplace_back("mean_re", Tensor::from_data({n}, mg->mean_re));
    ck.tensors.emplace_back("var_re", Tensor::from_data({n}, mg->var_re));
    ck.tensors.emplace_back("mean_im", Tensor::from_data({n}, mg->mean_im));
    ck.tensors.emplace_back("var_im", Tensor::from_data({n}, mg->var_im));
    return ck;
  }
  ParamList p = neural_params(model);
  for (const auto& [name, t] : p.items)
    ck.tensors.emplace_back(name, Tensor::from_data(t.shape(), t.vec()));
  return ck;
}

GeneratorModel generator_from_checkpoint(const Checkpoint& ckpt) {
  json meta;
  try {
    meta = json::parse(ckpt.meta);
  } catch (const json::exception& e) {
    throw ParseError(std::string("generator checkpoint meta: ") + e.what(), 1);
  }
  GeneratorModel out;
  out.kind = generator_kind_from_name(meta.at("kind").get<std::string>());
  const auto channels = meta.value("channels", std::int64_t{1});
  const auto length = meta.value("length", std::int64_t{0});
  GeneratorConfig cfg;
  cfg.latent_dim = meta.value("latent_dim", cfg.latent_dim);
  cfg.hidden_channels = meta.value("hidden_channels", cfg.hidden_channels);
  cfg.diff_steps = meta.value("diff_steps", cfg.diff_steps);
  cfg.diff_beta_min = meta.value("diff_beta_min", cfg.diff_beta_min);
  cfg.diff_beta_max = meta.value("diff_beta_max", cfg.diff_beta_max);
  cfg.beta = meta.value("beta", cfg.beta);

  Rng init(0);  // weights are overwritten by the checkpoint
  switch (out.kind) {
    case GeneratorKind::RandomWalk:
      out.model = RwGenerator{channels, length};
      return out;
    case GeneratorKind::Sinusoidal:
      out.model = SwGenerator{channels, length};
      return out;
    case GeneratorKind::MultivariateGaussian: {
      MgModel m;
      m.channels = channels;
      m.length = length;
      m.mean_re = ckpt.find("mean_re")->vec();
      m.var_re = ckpt.find("var_re")->vec();
      m.mean_im = ckpt.find("mean_im")->vec();
      m.var_im = ckpt.find("var_im")->vec();
      out.model = std::move(m);
      return out;
    }
    case GeneratorKind::Gan: {
      GanModel m;
      m.channels = channels;
      m.length = length;
      m.lm = meta.at("lm").get<std::int64_t>();
      m.cfg = cfg;
      m.encoder = ConvEncoder(channels, m.lm, cfg.latent_dim, cfg.hidden_channels, init);
      m.generator = ConvDecoder(channels, m.lm, cfg.latent_dim, cfg.hidden_channels, init);
      m.critic = ConvEncoder(channels, m.lm, 1, cfg.hidden_channels, init);
      out.model = std::move(m);
      break;
    }
    case GeneratorKind::BetaVae: {
      VaeModel m;
      m.channels = channels;
      m.length = length;
      m.lm = meta.at("lm").get<std::int64_t>();
      m.cfg = cfg;
      m.trunk = ConvEncoder(channels, m.lm, cfg.latent_dim, cfg.hidden_channels, init);
      m.mu_w = init_weight({cfg.latent_dim, m.trunk.feat_dim()}, m.trunk.feat_dim(), init);
      m.mu_b = init_weight({cfg.latent_dim}, m.trunk.feat_dim(), init);
      m.logvar_w =
          init_weight({cfg.latent_dim, m.trunk.feat_dim()}, m.trunk.feat_dim(), init);
      m.logvar_b = init_weight({cfg.latent_dim}, m.trunk.feat_dim(), init);
      m.decoder = ConvDecoder(channels, m.lm, cfg.latent_dim, cfg.hidden_channels, init);
      out.model = std::move(m);
      break;
    }
    case GeneratorKind::Diffusion: {
      std::vector<Series> dummy{Series(channels, length > 0 ? length : 8)};
      GeneratorConfig tiny = cfg;
      tiny.epochs = 0;
      DiffusionModel m = train_diffusion(dummy, tiny, init);
      m.length = length;
      out.model = std::move(m);
      break;
    }
    case GeneratorKind::None:
      throw UsageError("generator checkpoint: NG is not a model");
  }
  ParamList p = neural_params(out);
  restore_params(p, ckpt);
  return out;
}

}  // namespace tsbench
