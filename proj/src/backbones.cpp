#include "tsbench/backbones.hpp"

#include <cmath>

#include "tsbench/errors.hpp"

namespace tsbench {

namespace {

Tensor init_weight(Shape shape, std::int64_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  return Tensor::uniform(std::move(shape), bound, rng, true);
}

Tensor per_position_linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  // x: [B,T,D] -> [B,T,out] with one shared linear.
  const std::int64_t B = x.dim(0), T = x.dim(1), D = x.dim(2);
  Tensor flat = reshape(x, {B * T, D});
  Tensor y = linear(flat, w, b);
  return reshape(y, {B, T, w.dim(0)});
}

}  // namespace

std::string backbone_kind_name(BackboneKind k) {
  return k == BackboneKind::ResNet ? "resnet" : "transformer";
}

BackboneKind backbone_kind_from_name(const std::string& name) {
  if (name == "resnet") return BackboneKind::ResNet;
  if (name == "transformer") return BackboneKind::Transformer;
  throw UsageError("unknown backbone '" + name + "'");
}

Tensor positional_encoding(std::int64_t length, std::int64_t d) {
  if (d % 2 != 0) throw UsageError("positional_encoding: dimension must be even");
  Tensor pe = Tensor::zeros({length, d});
  for (std::int64_t p = 0; p < length; ++p)
    for (std::int64_t i = 0; i < d / 2; ++i) {
      const double freq =
          std::pow(10000.0, -2.0 * static_cast<double>(i) / static_cast<double>(d));
      const double angle = static_cast<double>(p) * freq;
      pe.at({p, 2 * i}) = std::sin(angle);
      pe.at({p, 2 * i + 1}) = std::cos(angle);
    }
  return pe;
}

// ---------------------------------------------------------------------------
// ResNet
// ---------------------------------------------------------------------------

RBlock::RBlock(std::int64_t in_w, std::int64_t out_w, Rng& rng)
    : in_width(in_w), out_width(out_w) {
  const auto k = ResNetSpec::kernels;
  w1 = init_weight({out_w, in_w, k[0]}, in_w * k[0], rng);
  b1 = init_weight({out_w}, in_w * k[0], rng);
  w2 = init_weight({out_w, out_w, k[1]}, out_w * k[1], rng);
  b2 = init_weight({out_w}, out_w * k[1], rng);
  w3 = init_weight({out_w, out_w, k[2]}, out_w * k[2], rng);
  b3 = init_weight({out_w}, out_w * k[2], rng);
  for (Tensor* g : {&ln1_g, &ln2_g, &ln3_g}) *g = Tensor::full({out_w}, 1.0, true);
  for (Tensor* b : {&ln1_b, &ln2_b, &ln3_b}) *b = Tensor::zeros({out_w}, true);
  if (in_w != out_w) {
    skip_w = init_weight({out_w, in_w, 1}, in_w, rng);
    skip_b = init_weight({out_w}, in_w, rng);
  }
}

namespace {

// Layer norm over the channel axis of a [B,C,L] feature map.
Tensor norm_channels(const Tensor& x, const Tensor& gamma, const Tensor& beta) {
  return transpose_cl(layer_norm(transpose_cl(x), gamma, beta));
}

}  // namespace

Tensor RBlock::forward(const Tensor& x, std::int64_t stride) const {
  if (x.dim(1) != in_width)
    throw ShapeError("rblock: input width " + std::to_string(x.dim(1)) +
                     " does not match block width " + std::to_string(in_width));
  Tensor h = relu(norm_channels(conv1d(x, w1, b1, stride, 3), ln1_g, ln1_b));
  h = relu(norm_channels(conv1d(h, w2, b2, 1, 2), ln2_g, ln2_b));
  h = relu(norm_channels(conv1d(h, w3, b3, 1, 1), ln3_g, ln3_b));
  Tensor skip;
  if (skip_w.defined()) {
    skip = conv1d(x, skip_w, skip_b, stride, 0);
  } else {
    skip = stride == 1 ? x : downsample2_time(x);
  }
  return add(h, skip);
}

void RBlock::collect(const std::string& prefix, ParamList& out) const {
  out.add(prefix + "w1", w1);
  out.add(prefix + "b1", b1);
  out.add(prefix + "ln1_g", ln1_g);
  out.add(prefix + "ln1_b", ln1_b);
  out.add(prefix + "w2", w2);
  out.add(prefix + "b2", b2);
  out.add(prefix + "ln2_g", ln2_g);
  out.add(prefix + "ln2_b", ln2_b);
  out.add(prefix + "w3", w3);
  out.add(prefix + "b3", b3);
  out.add(prefix + "ln3_g", ln3_g);
  out.add(prefix + "ln3_b", ln3_b);
  if (skip_w.defined()) {
    out.add(prefix + "skip_w", skip_w);
    out.add(prefix + "skip_b", skip_b);
  }
}

ResNetBackbone::ResNetBackbone(ResNetSpec spec, Rng& rng) : spec_(spec) {
  blocks_[0] = RBlock(spec.in_channels, spec.widths[0], rng);
  blocks_[1] = RBlock(spec.widths[0], spec.widths[1], rng);
  blocks_[2] = RBlock(spec.widths[1], spec.widths[2], rng);
  out_w_ = init_weight({spec.widths[2], spec.widths[2]}, spec.widths[2], rng);
  out_b_ = init_weight({spec.widths[2]}, spec.widths[2], rng);
}

Tensor ResNetBackbone::forward(const Tensor& x, const ForwardOptions& opt) const {
  if (x.ndim() != 3) throw ShapeError("resnet: expected [B,C,L] input");
  if (x.dim(1) != spec_.in_channels)
    throw ShapeError("resnet: channel count mismatch");
  if (x.dim(2) < 8)
    throw UsageError("resnet: series shorter than minimum length 8");
  Tensor h = blocks_[0].forward(x, opt.per_step ? 2 : 1);
  h = blocks_[1].forward(h, 1);
  h = blocks_[2].forward(h, 1);
  if (opt.per_step) {
    // [B,W,L'] -> [B,L',W] -> shared linear at every step
    return per_position_linear(transpose_cl(h), out_w_, out_b_);
  }
  return linear(mean_time(h), out_w_, out_b_);
}

ParamList ResNetBackbone::params(const std::string& prefix) const {
  ParamList out;
  blocks_[0].collect(prefix + "block0.", out);
  blocks_[1].collect(prefix + "block1.", out);
  blocks_[2].collect(prefix + "block2.", out);
  out.add(prefix + "out_w", out_w_);
  out.add(prefix + "out_b", out_b_);
  return out;
}

// ---------------------------------------------------------------------------
// Transformer
// ---------------------------------------------------------------------------

TransformerBackbone::TransformerBackbone(TransformerSpec spec, Rng& rng) : spec_(spec) {
  if (spec.model_dim % spec.heads != 0)
    throw UsageError("transformer: model_dim must be divisible by heads");
  const std::int64_t d = spec.model_dim;
  embed_w_ = init_weight({d, spec.in_channels, 1}, spec.in_channels, rng);
  embed_b_ = init_weight({d}, spec.in_channels, rng);
  start_token_ = Tensor::uniform({d}, 0.1, rng, true);
  blocks_.resize(spec.layers);
  for (auto& blk : blocks_) {
    blk.wq = init_weight({d, d}, d, rng);
    blk.bq = init_weight({d}, d, rng);
    blk.wk = init_weight({d, d}, d, rng);
    blk.bk = init_weight({d}, d, rng);
    blk.wv = init_weight({d, d}, d, rng);
    blk.bv = init_weight({d}, d, rng);
    blk.wo = init_weight({d, d}, d, rng);
    blk.bo = init_weight({d}, d, rng);
    blk.ln1_g = Tensor::full({d}, 1.0, true);
    blk.ln1_b = Tensor::zeros({d}, true);
    blk.ln2_g = Tensor::full({d}, 1.0, true);
    blk.ln2_b = Tensor::zeros({d}, true);
    blk.ff_w1 = init_weight({spec.ff_dim, d}, d, rng);
    blk.ff_b1 = init_weight({spec.ff_dim}, d, rng);
    blk.ff_w2 = init_weight({d, spec.ff_dim}, spec.ff_dim, rng);
    blk.ff_b2 = init_weight({d}, spec.ff_dim, rng);
  }
  out_w_ = init_weight({d, d}, d, rng);
  out_b_ = init_weight({d}, d, rng);
}

Tensor TransformerBackbone::self_attention(const Block& blk, const Tensor& x) const {
  const std::int64_t B = x.dim(0), T = x.dim(1), d = spec_.model_dim;
  const std::int64_t H = spec_.heads, dk = d / H;
  Tensor flat = reshape(x, {B * T, d});
  auto heads_of = [&](const Tensor& w, const Tensor& b) {
    Tensor proj = linear(flat, w, b);                    // [BT,d]
    Tensor split = reshape(proj, {B, T, H, dk});
    return reshape(permute_0213(split), {B * H, T, dk});  // [BH,T,dk]
  };
  Tensor q = heads_of(blk.wq, blk.bq);
  Tensor k = heads_of(blk.wk, blk.bk);
  Tensor v = heads_of(blk.wv, blk.bv);
  Tensor scores = mul_scalar(bmm(q, k, /*trans_b=*/true),
                             1.0 / std::sqrt(static_cast<double>(dk)));
  Tensor attn = softmax_rows(scores);
  Tensor ctx = bmm(attn, v);                              // [BH,T,dk]
  Tensor merged = reshape(permute_0213(reshape(ctx, {B, H, T, dk})), {B * T, d});
  return reshape(linear(merged, blk.wo, blk.bo), {B, T, d});
}

Tensor TransformerBackbone::forward(const Tensor& x, const ForwardOptions& opt) const {
  if (x.ndim() != 3) throw ShapeError("transformer: expected [B,C,L] input");
  if (x.dim(1) != spec_.in_channels)
    throw ShapeError("transformer: channel count mismatch");
  if (x.dim(2) < 1) throw UsageError("transformer: empty series");
  const std::int64_t B = x.dim(0), d = spec_.model_dim;

  Tensor h = conv1d(x, embed_w_, embed_b_, opt.per_step ? 2 : 1, 0);  // [B,d,L']
  h = transpose_cl(h);                                                // [B,L',d]
  h = prepend_token(h, start_token_);                                 // [B,T,d]
  const std::int64_t T = h.dim(1);
  if (opt.positional) {
    Tensor pe = positional_encoding(T, d);
    std::vector<double> tiled(static_cast<std::size_t>(B * T * d));
    for (std::int64_t b = 0; b < B; ++b)
      std::copy(pe.vec().begin(), pe.vec().end(), tiled.begin() + b * T * d);
    h = add(h, Tensor::from_data({B, T, d}, std::move(tiled)));
  }
  for (const auto& blk : blocks_) {
    h = layer_norm(add(h, self_attention(blk, h)), blk.ln1_g, blk.ln1_b);
    Tensor ff = per_position_linear(h, blk.ff_w1, blk.ff_b1);
    ff = relu(ff);
    ff = per_position_linear(ff, blk.ff_w2, blk.ff_b2);
    h = layer_norm(add(h, ff), blk.ln2_g, blk.ln2_b);
  }
  if (opt.per_step) {
    // Drop the [start] slot; return every time position.
    return per_position_linear(slice_time(h, 1, T), out_w_, out_b_);
  }
  return linear(select_time(h, 0), out_w_, out_b_);
}

ParamList TransformerBackbone::params(const std::string& prefix) const {
  ParamList out;
  out.add(prefix + "embed_w", embed_w_);
  out.add(prefix + "embed_b", embed_b_);
  out.add(prefix + "start", start_token_);
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const std::string p = prefix + "block" + std::to_string(i) + ".";
    const Block& blk = blocks_[i];
    out.add(p + "wq", blk.wq);
    out.add(p + "bq", blk.bq);
    out.add(p + "wk", blk.wk);
    out.add(p + "bk", blk.bk);
    out.add(p + "wv", blk.wv);
    out.add(p + "bv", blk.bv);
    out.add(p + "wo", blk.wo);
    out.add(p + "bo", blk.bo);
    out.add(p + "ln1_g", blk.ln1_g);
    out.add(p + "ln1_b", blk.ln1_b);
    out.add(p + "ln2_g", blk.ln2_g);
    out.add(p + "ln2_b", blk.ln2_b);
    out.add(p + "ff_w1", blk.ff_w1);
    out.add(p + "ff_b1", blk.ff_b1);
    out.add(p + "ff_w2", blk.ff_w2);
    out.add(p + "ff_b2", blk.ff_b2);
  }
  out.add(prefix + "out_w", out_w_);
  out.add(prefix + "out_b", out_b_);
  return out;
}

// ---------------------------------------------------------------------------
// Tagged wrapper
// ---------------------------------------------------------------------------

namespace {

std::int64_t scaled(std::int64_t base, double scale) {
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::llround(
                                       static_cast<double>(base) * scale)));
}

// Positional encodings need an even width.
std::int64_t scaled_even(std::int64_t base, double scale) {
  const std::int64_t w = scaled(base, scale);
  return std::max<std::int64_t>(2, w + (w % 2));
}

std::int64_t heads_for(std::int64_t d) {
  if (d % 8 == 0) return 8;
  for (std::int64_t h = 8; h > 1; --h)
    if (d % h == 0) return h;
  return 1;
}

}  // namespace

Backbone::Backbone(BackboneConfig cfg, Rng& rng) : cfg_(cfg) {
  if (cfg.kind == BackboneKind::ResNet) {
    ResNetSpec spec;
    spec.in_channels = cfg.in_channels;
    for (auto& w : spec.widths) w = scaled(w, cfg.width_scale);
    resnet_ = std::make_shared<ResNetBackbone>(spec, rng);
  } else {
    TransformerSpec spec;
    spec.in_channels = cfg.in_channels;
    spec.model_dim = scaled_even(spec.model_dim, cfg.width_scale);
    spec.ff_dim = 4 * spec.model_dim;
    spec.heads = heads_for(spec.model_dim);
    transformer_ = std::make_shared<TransformerBackbone>(spec, rng);
  }
}

Tensor Backbone::forward(const Tensor& x, const ForwardOptions& opt) const {
  return resnet_ ? resnet_->forward(x, opt) : transformer_->forward(x, opt);
}

std::int64_t Backbone::embedding_dim() const {
  return resnet_ ? resnet_->embedding_dim() : transformer_->embedding_dim();
}

ParamList Backbone::params(const std::string& prefix) const {
  return resnet_ ? resnet_->params(prefix) : transformer_->params(prefix);
}

// ---------------------------------------------------------------------------
// Heads
// ---------------------------------------------------------------------------

Projector::Projector(std::int64_t in_dim, std::int64_t hidden, std::int64_t out_dim,
                     Rng& rng)
    : out_dim_(out_dim) {
  w1_ = init_weight({hidden, in_dim}, in_dim, rng);
  b1_ = init_weight({hidden}, in_dim, rng);
  w2_ = init_weight({out_dim, hidden}, hidden, rng);
  b2_ = init_weight({out_dim}, hidden, rng);
}

Tensor Projector::forward(const Tensor& x) const {
  return linear(relu(linear(x, w1_, b1_)), w2_, b2_);
}

ParamList Projector::params(const std::string& prefix) const {
  ParamList out;
  out.add(prefix + "w1", w1_);
  out.add(prefix + "b1", b1_);
  out.add(prefix + "w2", w2_);
  out.add(prefix + "b2", b2_);
  return out;
}

Classifier::Classifier(std::int64_t in_dim, std::int64_t classes, Rng& rng)
    : classes_(classes) {
  if (classes < 1) throw UsageError("classifier: class count not configured");
  w_ = init_weight({classes, in_dim}, in_dim, rng);
  b_ = init_weight({classes}, in_dim, rng);
}

Tensor Classifier::forward(const Tensor& x) const {
  if (!configured()) throw UsageError("classifier: class count not configured");
  return linear(x, w_, b_);
}

ParamList Classifier::params(const std::string& prefix) const {
  ParamList out;
  out.add(prefix + "w", w_);
  out.add(prefix + "b", b_);
  return out;
}

}  // namespace tsbench
