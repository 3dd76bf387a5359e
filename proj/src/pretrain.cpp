#include "tsbench/pretrain.hpp"

#include <cmath>

#include "tsbench/errors.hpp"
#include "tsbench/fft.hpp"

namespace tsbench {

namespace {

// A[m,k] x B[n,k]^T via the batched kernel.
Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  const std::int64_t m = a.dim(0), k = a.dim(1), n = b.dim(0);
  Tensor r = bmm(reshape(a, {1, m, k}), reshape(b, {1, n, k}), /*trans_b=*/true);
  return reshape(r, {m, n});
}

std::vector<std::int64_t> iota_idx(std::int64_t n, std::int64_t offset = 0) {
  std::vector<std::int64_t> idx(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) idx[i] = i + offset;
  return idx;
}

constexpr double kMaskNegInf = -1e30;

}  // namespace

std::string ptm_kind_name(PtmKind k) {
  switch (k) {
    case PtmKind::None: return "none";
    case PtmKind::TimeCLR: return "timeclr";
    case PtmKind::Ts2Vec: return "ts2vec";
    case PtmKind::MixingUp: return "mixingup";
    case PtmKind::TfC: return "tfc";
  }
  return "unknown";
}

PtmKind ptm_kind_from_name(const std::string& name) {
  if (name == "none" || name == "na" || name == "n/a") return PtmKind::None;
  if (name == "timeclr") return PtmKind::TimeCLR;
  if (name == "ts2vec") return PtmKind::Ts2Vec;
  if (name == "mixingup") return PtmKind::MixingUp;
  if (name == "tfc") return PtmKind::TfC;
  throw UsageError("unknown pretraining method '" + name + "'");
}

// ---------------------------------------------------------------------------
// Model bundle
// ---------------------------------------------------------------------------

ParamList ContrastiveModel::params() const {
  ParamList out;
  if (backbone) out.extend("backbone.", backbone->params(""));
  out.extend("projector.", projector.params(""));
  if (freq_backbone) {
    out.extend("freq_backbone.", freq_backbone->params(""));
    out.extend("freq_projector.", freq_projector.params(""));
  }
  return out;
}

std::int64_t ContrastiveModel::projection_dim() const {
  std::int64_t d = projector.out_dim();
  if (freq_backbone) d += freq_projector.out_dim();
  return d;
}

ContrastiveModel make_contrastive_model(PtmKind ptm, BackboneKind kind,
                                        std::int64_t in_channels, Rng& rng) {
  ContrastiveModel model;
  model.ptm = ptm;
  const bool dual = ptm == PtmKind::TfC;
  const double scale = dual ? 1.0 / std::sqrt(2.0) : 1.0;
  model.backbone = std::make_shared<Backbone>(BackboneConfig{kind, in_channels, scale}, rng);
  model.projector =
      Projector(model.backbone->embedding_dim(), kProjectorHidden, kProjectorDim, rng);
  if (dual) {
    model.freq_backbone =
        std::make_shared<Backbone>(BackboneConfig{kind, in_channels, scale}, rng);
    model.freq_projector = Projector(model.freq_backbone->embedding_dim(),
                                     kProjectorHidden, kProjectorDim, rng);
  }
  return model;
}

// ---------------------------------------------------------------------------
// Batch helpers
// ---------------------------------------------------------------------------

Tensor batch_to_tensor(std::span<const Series> batch) {
  if (batch.empty()) throw UsageError("batch_to_tensor: empty batch");
  const std::int64_t C = batch[0].channels, L = batch[0].length;
  std::vector<double> data;
  data.reserve(batch.size() * static_cast<std::size_t>(C * L));
  for (const auto& s : batch) {
    if (s.channels != C || s.length != L)
      throw ShapeError("batch_to_tensor: inconsistent series shapes in batch");
    data.insert(data.end(), s.values.begin(), s.values.end());
  }
  return Tensor::from_data({static_cast<std::int64_t>(batch.size()), C, L},
                           std::move(data));
}

Series magnitude_spectrum(const Series& x) {
  const std::int64_t bins = x.length / 2 + 1;
  Series out(x.channels, bins);
  for (std::int64_t c = 0; c < x.channels; ++c) {
    auto half = fft::rfft(x.values.data() + c * x.length,
                          static_cast<std::size_t>(x.length));
    for (std::int64_t k = 0; k < bins; ++k) out.at(c, k) = std::abs(half[k]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// NT-Xent
// ---------------------------------------------------------------------------

Tensor nt_xent(const Tensor& h0, const Tensor& h1, double temperature) {
  if (temperature <= 0.0) throw UsageError("nt_xent: temperature must be positive");
  if (h0.ndim() != 2 || h1.ndim() != 2 || h0.shape() != h1.shape())
    throw ShapeError("nt_xent: views must share [N,d]");
  const std::int64_t n = h0.dim(0);
  if (n < 2) throw UsageError("nt_xent: batch must have at least 2 samples");

  Tensor h = l2_normalize_rows(concat_rows(h0, h1));     // [2N,d]
  Tensor sim = mul_scalar(matmul_nt(h, h), 1.0 / temperature);

  // Mask self and the positive out of each denominator.
  Tensor mask = Tensor::zeros({2 * n, 2 * n});
  std::vector<std::int64_t> pos(static_cast<std::size_t>(2 * n));
  for (std::int64_t i = 0; i < 2 * n; ++i) {
    const std::int64_t j = i < n ? i + n : i - n;
    pos[i] = j;
    mask.at({i, i}) = kMaskNegInf;
    mask.at({i, j}) = kMaskNegInf;
  }
  Tensor denom = logsumexp_rows(add(sim, mask));         // [2N]
  Tensor positive = gather_cols(sim, pos);               // [2N]
  return mean_all(sub(denom, positive));
}

// ---------------------------------------------------------------------------
// Hierarchical temporal/instance loss
// ---------------------------------------------------------------------------

namespace {

// Anchored in `za`: positives are the same (row, col) in `zb`; negatives are
// the other columns of both views. za/zb: [R, d] similarity candidates per
// anchor row. Returns the summed loss over R anchors.
Tensor dual_view_anchor_loss(const Tensor& za, const Tensor& zb) {
  const std::int64_t r = za.dim(0);
  Tensor sab = matmul_nt(za, zb);  // [R,R], positive on the diagonal
  Tensor saa = matmul_nt(za, za);  // self on the diagonal, masked out
  Tensor mask = Tensor::zeros({r, r});
  for (std::int64_t i = 0; i < r; ++i) mask.at({i, i}) = kMaskNegInf;
  Tensor logits = concat_cols(sab, add(saa, mask));  // [R, 2R]
  Tensor denom = logsumexp_rows(logits);
  Tensor positive = gather_cols(sab, iota_idx(r));
  return sum_all(sub(denom, positive));
}

// [N,T,d] -> [T,d] slice for one instance.
Tensor instance_slice(const Tensor& z, std::int64_t i) {
  const std::int64_t n = z.dim(0), t = z.dim(1), d = z.dim(2);
  Tensor flat = reshape(z, {1, n, t * d});
  return reshape(select_time(flat, i), {t, d});
}

// One hierarchy level: mean instance-wise term plus mean temporal term.
// Degenerate axes (N == 1, T == 1) contribute nothing and are skipped.
Tensor level_loss(const Tensor& z0, const Tensor& z1) {
  const std::int64_t n = z0.dim(0), t = z0.dim(1);
  Tensor loss = Tensor::scalar(0.0);
  const double inv_anchors = 1.0 / static_cast<double>(2 * n * t);
  if (n > 1) {
    Tensor inst = Tensor::scalar(0.0);
    for (std::int64_t tt = 0; tt < t; ++tt) {
      Tensor a = select_time(z0, tt);
      Tensor b = select_time(z1, tt);
      inst = add(inst, add(dual_view_anchor_loss(a, b), dual_view_anchor_loss(b, a)));
    }
    loss = add(loss, mul_scalar(inst, inv_anchors));
  }
  if (t > 1) {
    Tensor temp = Tensor::scalar(0.0);
    for (std::int64_t i = 0; i < n; ++i) {
      Tensor a = instance_slice(z0, i);
      Tensor b = instance_slice(z1, i);
      temp = add(temp, add(dual_view_anchor_loss(a, b), dual_view_anchor_loss(b, a)));
    }
    loss = add(loss, mul_scalar(temp, inv_anchors));
  }
  return loss;
}

}  // namespace

Tensor ts2vec_loss(const Tensor& z0, const Tensor& z1) {
  if (z0.ndim() != 3 || z1.ndim() != 3 || z0.shape() != z1.shape())
    throw ShapeError("ts2vec_loss: views must share [N,T,d]");
  if (z0.dim(1) < 1) throw UsageError("ts2vec_loss: empty overlap");
  Tensor a = z0, b = z1;
  Tensor total = level_loss(a, b);
  std::int64_t levels = 1;
  while (a.dim(1) > 1) {
    a = max_pool_time(a);
    b = max_pool_time(b);
    total = add(total, level_loss(a, b));
    ++levels;
  }
  return mul_scalar(total, 1.0 / static_cast<double>(levels));
}

// ---------------------------------------------------------------------------
// MixingUp
// ---------------------------------------------------------------------------

Series mix_series(const Series& xi, const Series& xj, double lambda) {
  if (xi.channels != xj.channels || xi.length != xj.length)
    throw ShapeError("mix_series: shape mismatch");
  Series xk(xi.channels, xi.length);
  for (std::size_t v = 0; v < xk.values.size(); ++v)
    xk.values[v] = lambda * xi.values[v] + (1.0 - lambda) * xj.values[v];
  return xk;
}

MixBatch mixup_batch(std::span<const Series> batch, double alpha, Rng& rng) {
  if (alpha <= 0.0) throw UsageError("mixup_batch: alpha must be positive");
  const std::int64_t n = static_cast<std::int64_t>(batch.size());
  if (n < 2) throw UsageError("mixup_batch: batch must have at least 2 samples");
  // Cyclic partner shuffle: pairs are drawn without replacement and i != j.
  const std::int64_t shift = rng.uniform_int(1, n - 1);
  MixBatch out;
  out.lambda.resize(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    const Series& xi = batch[i];
    const Series& xj = batch[(i + shift) % n];
    const double lam = rng.beta(alpha, alpha);
    out.lambda[i] = lam;
    out.xi.push_back(xi);
    out.xj.push_back(xj);
    out.xk.push_back(mix_series(xi, xj, lam));
  }
  return out;
}

Tensor mixingup_loss(const Tensor& hi, const Tensor& hj, const Tensor& hk,
                     const std::vector<double>& lambda, double temperature) {
  if (temperature <= 0.0) throw UsageError("mixingup_loss: temperature must be positive");
  const std::int64_t n = hk.dim(0);
  if (static_cast<std::int64_t>(lambda.size()) != n)
    throw ShapeError("mixingup_loss: lambda count mismatch");
  Tensor ki = l2_normalize_rows(hi);
  Tensor kj = l2_normalize_rows(hj);
  Tensor kk = l2_normalize_rows(hk);
  const double inv_t = 1.0 / temperature;
  Tensor si = mul_scalar(matmul_nt(kk, ki), inv_t);  // [N,N]
  Tensor sj = mul_scalar(matmul_nt(kk, kj), inv_t);
  Tensor denom = logsumexp_rows(concat_cols(si, sj));  // [N]
  Tensor pos_i = gather_cols(si, iota_idx(n));
  Tensor pos_j = gather_cols(sj, iota_idx(n));
  std::vector<double> lam = lambda, one_minus(lambda.size());
  for (std::size_t i = 0; i < lambda.size(); ++i) one_minus[i] = 1.0 - lambda[i];
  Tensor wl = Tensor::from_data({n}, std::move(lam));
  Tensor wr = Tensor::from_data({n}, std::move(one_minus));
  Tensor loss = add(mul(wl, sub(denom, pos_i)), mul(wr, sub(denom, pos_j)));
  return mean_all(loss);
}

// ---------------------------------------------------------------------------
// Steps
// ---------------------------------------------------------------------------

namespace {

Tensor project_rows(const Projector& proj, const Tensor& emb) {
  return proj.forward(emb);
}

Tensor project_steps(const Projector& proj, const Tensor& z) {
  const std::int64_t n = z.dim(0), t = z.dim(1), d = z.dim(2);
  return reshape(proj.forward(reshape(z, {n * t, d})), {n, t, proj.out_dim()});
}

std::vector<Series> augment_batch(std::span<const Series> batch, AugmentKind kind,
                                  const AugmentParams& params, Rng& rng) {
  std::vector<Series> out;
  out.reserve(batch.size());
  for (const auto& s : batch) out.push_back(augment(kind, s, params, rng));
  return out;
}

}  // namespace

Tensor timeclr_step(std::span<const Series> batch, const ContrastiveModel& model,
                    const ContrastConfig& cfg, Rng& rng) {
  if (batch.size() < 2) throw UsageError("timeclr_step: batch must have >= 2 samples");
  // One augmentation function per view, random parameters per sample.
  const AugmentKind kind0 = sample_one_augmentation(rng);
  const AugmentKind kind1 = sample_one_augmentation(rng);
  Tensor x0 = batch_to_tensor(augment_batch(batch, kind0, cfg.augment, rng));
  Tensor x1 = batch_to_tensor(augment_batch(batch, kind1, cfg.augment, rng));
  Tensor h0 = project_rows(model.projector, model.backbone->forward(x0));
  Tensor h1 = project_rows(model.projector, model.backbone->forward(x1));
  return nt_xent(h0, h1, cfg.temperature);
}

// The hierarchical loss uses plain dot products, so no config knobs apply.
Tensor ts2vec_step(std::span<const Series> batch, const ContrastiveModel& model,
                   const ContrastConfig& /*cfg*/, Rng& rng) {
  if (batch.empty()) throw UsageError("ts2vec_step: empty batch");
  const std::int64_t L = batch[0].length;
  const CropBounds cb = sample_crop_bounds(L, rng, /*min_len=*/8);

  std::vector<Series> crop0, crop1;
  crop0.reserve(batch.size());
  crop1.reserve(batch.size());
  for (const auto& s : batch) {
    Series c0(s.channels, cb.b0 - cb.a0), c1(s.channels, cb.b1 - cb.a1);
    for (std::int64_t c = 0; c < s.channels; ++c) {
      for (std::int64_t t = cb.a0; t < cb.b0; ++t) c0.at(c, t - cb.a0) = s.at(c, t);
      for (std::int64_t t = cb.a1; t < cb.b1; ++t) c1.at(c, t - cb.a1) = s.at(c, t);
    }
    crop0.push_back(std::move(c0));
    crop1.push_back(std::move(c1));
  }
  ForwardOptions opt;
  opt.per_step = true;
  Tensor z0 = project_steps(model.projector, model.backbone->forward(batch_to_tensor(crop0), opt));
  Tensor z1 = project_steps(model.projector, model.backbone->forward(batch_to_tensor(crop1), opt));

  // Align the overlap at the stride-2 output resolution: the overlap is a
  // suffix of crop0 and a prefix of crop1; a residual one-step offset sits
  // well inside the first conv's receptive field.
  const std::int64_t s0 = cb.a1 - cb.a0;
  const std::int64_t suffix0 = z0.dim(1) - (s0 + 1) / 2;
  const std::int64_t prefix1 = (cb.b0 - cb.a1 + 1) / 2;
  const std::int64_t t_ov =
      std::max<std::int64_t>(1, std::min({suffix0, prefix1, z0.dim(1), z1.dim(1)}));
  Tensor ov0 = slice_time(z0, z0.dim(1) - t_ov, z0.dim(1));
  Tensor ov1 = slice_time(z1, 0, t_ov);
  return ts2vec_loss(ov0, ov1);
}

Tensor mixingup_step(std::span<const Series> batch, const ContrastiveModel& model,
                     const ContrastConfig& cfg, Rng& rng) {
  MixBatch mix = mixup_batch(batch, cfg.mixup_alpha, rng);
  Tensor hi = project_rows(model.projector, model.backbone->forward(batch_to_tensor(mix.xi)));
  Tensor hj = project_rows(model.projector, model.backbone->forward(batch_to_tensor(mix.xj)));
  Tensor hk = project_rows(model.projector, model.backbone->forward(batch_to_tensor(mix.xk)));
  return mixingup_loss(hi, hj, hk, mix.lambda, cfg.temperature);
}

Tensor tfc_step(std::span<const Series> batch, const ContrastiveModel& model,
                const ContrastConfig& cfg, Rng& rng) {
  if (batch.size() < 2) throw UsageError("tfc_step: batch must have >= 2 samples");
  if (!model.freq_backbone) throw UsageError("tfc_step: model lacks a frequency backbone");

  AugmentParams jitter_only;
  jitter_only.jitter_sigma = cfg.tfc_jitter_sigma;
  std::vector<Series> time1 = augment_batch(batch, AugmentKind::Jitter, jitter_only, rng);

  std::vector<Series> freq0, freq1;
  freq0.reserve(batch.size());
  freq1.reserve(batch.size());
  for (const auto& s : batch) {
    freq0.push_back(magnitude_spectrum(s));
    // Augment the complex spectrum, then take magnitudes.
    Series aug(s.channels, s.length / 2 + 1);
    for (std::int64_t c = 0; c < s.channels; ++c) {
      auto half = fft::rfft(s.values.data() + c * s.length,
                            static_cast<std::size_t>(s.length));
      frequency_augment(half, s.length, cfg.freq_augment, rng);
      for (std::int64_t k = 0; k < aug.length; ++k) aug.at(c, k) = std::abs(half[k]);
    }
    freq1.push_back(std::move(aug));
  }

  Tensor ht0 = project_rows(model.projector, model.backbone->forward(batch_to_tensor(batch)));
  Tensor ht1 = project_rows(model.projector, model.backbone->forward(batch_to_tensor(time1)));
  Tensor hf0 = project_rows(model.freq_projector,
                            model.freq_backbone->forward(batch_to_tensor(freq0)));
  Tensor hf1 = project_rows(model.freq_projector,
                            model.freq_backbone->forward(batch_to_tensor(freq1)));

  Tensor loss = mul_scalar(nt_xent(ht0, ht1, cfg.temperature), cfg.tfc_weight_time);
  loss = add(loss, mul_scalar(nt_xent(hf0, hf1, cfg.temperature), cfg.tfc_weight_freq));
  loss = add(loss, mul_scalar(nt_xent(ht0, hf0, cfg.temperature), cfg.tfc_weight_cross));
  return loss;
}

Tensor pretrain_step(std::span<const Series> batch, const ContrastiveModel& model,
                     const ContrastConfig& cfg, Rng& rng) {
  switch (model.ptm) {
    case PtmKind::TimeCLR: return timeclr_step(batch, model, cfg, rng);
    case PtmKind::Ts2Vec: return ts2vec_step(batch, model, cfg, rng);
    case PtmKind::MixingUp: return mixingup_step(batch, model, cfg, rng);
    case PtmKind::TfC: return tfc_step(batch, model, cfg, rng);
    case PtmKind::None: break;
  }
  throw UsageError("pretrain_step: model has no pretraining objective");
}

Tensor classify_logits(const ContrastiveModel& model, const Classifier& classifier,
                       const Tensor& x_batch) {
  if (!classifier.configured())
    throw UsageError("classify_logits: classifier not configured");
  Tensor proj = model.projector.forward(model.backbone->forward(x_batch));
  if (model.freq_backbone) {
    // Frequency view of the same batch, unaugmented.
    const std::int64_t n = x_batch.dim(0), c = x_batch.dim(1), l = x_batch.dim(2);
    std::vector<Series> freq;
    freq.reserve(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
      Series s(c, l);
      std::copy(x_batch.data() + i * c * l, x_batch.data() + (i + 1) * c * l,
                s.values.begin());
      freq.push_back(magnitude_spectrum(s));
    }
    Tensor fproj =
        model.freq_projector.forward(model.freq_backbone->forward(batch_to_tensor(freq)));
    proj = concat_cols(proj, fproj);
  }
  return classifier.forward(proj);
}

}  // namespace tsbench
