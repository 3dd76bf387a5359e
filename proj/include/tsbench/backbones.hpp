#pragma once
// The two backbone architectures plus projector/classifier heads.
//
// ResNet: three residual blocks (kernel sizes 7/5/3 inside each block, the
// skip path carries a width-1 convolution only when block input and output
// widths differ), global average pooling over time, then a linear layer.
// Transformer: width-1 conv embedding, a learned [start] token, fixed
// sinusoidal positional encoding, four post-norm encoder blocks, then the
// [start] representation through a linear layer.
//
// Per-time-step mode (contextual-consistency pretraining) gives the first
// layer stride 2 and applies the trailing linear at every position instead
// of pooling / [start] extraction; weights are shared between modes, so a
// model pretrained per-step fine-tunes pooled without any surgery.

#include <array>
#include <cstdint>
#include <string>

#include "tsbench/optim.hpp"
#include "tsbench/rng.hpp"
#include "tsbench/tensor.hpp"

namespace tsbench {

enum class BackboneKind { ResNet, Transformer };

std::string backbone_kind_name(BackboneKind k);
BackboneKind backbone_kind_from_name(const std::string& name);

// Deterministic sinusoidal table, values in [-1,1]. d must be even.
Tensor positional_encoding(std::int64_t length, std::int64_t d);

struct ResNetSpec {
  std::int64_t in_channels = 1;
  std::array<std::int64_t, 3> widths = {64, 128, 128};
  static constexpr std::array<std::int64_t, 3> kernels = {7, 5, 3};
};

struct TransformerSpec {
  std::int64_t in_channels = 1;
  std::int64_t layers = 4;
  std::int64_t heads = 8;
  std::int64_t model_dim = 64;
  std::int64_t ff_dim = 256;
};

struct ForwardOptions {
  bool per_step = false;    // per-time-step representations, stride-2 first layer
  bool positional = true;   // transformer only; tests disable to probe invariance
};

struct RBlock {
  // Three conv / layer-norm / ReLU stages (kernels 7, 5, 3).
  Tensor w1, b1, ln1_g, ln1_b;
  Tensor w2, b2, ln2_g, ln2_b;
  Tensor w3, b3, ln3_g, ln3_b;
  Tensor skip_w, skip_b;  // defined only when in_width != out_width
  std::int64_t in_width = 0, out_width = 0;

  RBlock() = default;
  RBlock(std::int64_t in_w, std::int64_t out_w, Rng& rng);
  // Output = main(x) + skip(x); first conv takes `stride`.
  Tensor forward(const Tensor& x, std::int64_t stride) const;
  void collect(const std::string& prefix, ParamList& out) const;
};

class ResNetBackbone {
 public:
  ResNetBackbone(ResNetSpec spec, Rng& rng);

  // x: [B, C, L] -> [B, emb] pooled, or [B, ceil(L/2), emb] per-step.
  Tensor forward(const Tensor& x, const ForwardOptions& opt = {}) const;
  std::int64_t embedding_dim() const { return spec_.widths[2]; }
  ParamList params(const std::string& prefix) const;
  const ResNetSpec& spec() const { return spec_; }

 private:
  ResNetSpec spec_;
  std::array<RBlock, 3> blocks_;
  Tensor out_w_, out_b_;
};

class TransformerBackbone {
 public:
  TransformerBackbone(TransformerSpec spec, Rng& rng);

  Tensor forward(const Tensor& x, const ForwardOptions& opt = {}) const;
  std::int64_t embedding_dim() const { return spec_.model_dim; }
  ParamList params(const std::string& prefix) const;
  const TransformerSpec& spec() const { return spec_; }

 private:
  struct Block {
    Tensor wq, bq, wk, bk, wv, bv, wo, bo;
    Tensor ln1_g, ln1_b, ln2_g, ln2_b;
    Tensor ff_w1, ff_b1, ff_w2, ff_b2;
  };
  Tensor self_attention(const Block& blk, const Tensor& x) const;

  TransformerSpec spec_;
  Tensor embed_w_, embed_b_;
  Tensor start_token_;
  std::vector<Block> blocks_;
  Tensor out_w_, out_b_;
};

struct BackboneConfig {
  BackboneKind kind = BackboneKind::ResNet;
  std::int64_t in_channels = 1;
  // Width multiplier for dual-backbone objectives; 1/sqrt(2) keeps the total
  // parameter count of two backbones level with one full-width backbone.
  double width_scale = 1.0;
};

// Tagged wrapper so the pipeline can treat both architectures uniformly.
class Backbone {
 public:
  Backbone(BackboneConfig cfg, Rng& rng);

  Tensor forward(const Tensor& x, const ForwardOptions& opt = {}) const;
  std::int64_t embedding_dim() const;
  ParamList params(const std::string& prefix) const;
  const BackboneConfig& config() const { return cfg_; }

 private:
  BackboneConfig cfg_;
  std::shared_ptr<ResNetBackbone> resnet_;
  std::shared_ptr<TransformerBackbone> transformer_;
};

// Projector (linear-ReLU-linear into the contrastive feature space) and the
// optional classifier on top.
class Projector {
 public:
  Projector() = default;
  Projector(std::int64_t in_dim, std::int64_t hidden, std::int64_t out_dim, Rng& rng);
  Tensor forward(const Tensor& x) const;  // [N,in] -> [N,out]
  std::int64_t out_dim() const { return out_dim_; }
  ParamList params(const std::string& prefix) const;

 private:
  Tensor w1_, b1_, w2_, b2_;
  std::int64_t out_dim_ = 0;
};

class Classifier {
 public:
  Classifier() = default;
  Classifier(std::int64_t in_dim, std::int64_t classes, Rng& rng);
  bool configured() const { return classes_ > 0; }
  Tensor forward(const Tensor& x) const;  // [N,in] -> [N,classes]
  std::int64_t classes() const { return classes_; }
  ParamList params(const std::string& prefix) const;

 private:
  Tensor w_, b_;
  std::int64_t classes_ = 0;
};

inline constexpr std::int64_t kProjectorHidden = 64;
inline constexpr std::int64_t kProjectorDim = 64;

}  // namespace tsbench
