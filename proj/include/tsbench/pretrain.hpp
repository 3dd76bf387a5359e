#pragma once
// The four self-supervised contrastive objectives. Each *_step takes a batch
// of series plus a model and returns a scalar loss tensor wired for
// backprop.
//
// The pairwise loss follows the indicator form of its source: for anchor h_i
// with positive h_j, the denominator sums exp(sim/tau) over every other
// feature in H0 u H1, excluding both h_i and h_j by index.

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "tsbench/augment.hpp"
#include "tsbench/backbones.hpp"
#include "tsbench/datasets.hpp"
#include "tsbench/optim.hpp"
#include "tsbench/rng.hpp"
#include "tsbench/tensor.hpp"

namespace tsbench {

enum class PtmKind { None, TimeCLR, Ts2Vec, MixingUp, TfC };

std::string ptm_kind_name(PtmKind k);
PtmKind ptm_kind_from_name(const std::string& name);

struct ContrastConfig {
  double temperature = 0.1;
  double mixup_alpha = 0.2;
  double tfc_weight_time = 1.0;
  double tfc_weight_freq = 1.0;
  double tfc_weight_cross = 1.0;
  double tfc_jitter_sigma = 0.03;
  AugmentParams augment;
  FreqAugmentParams freq_augment;
};

// Backbone + projector; TF-C adds a second (frequency-domain) pair.
struct ContrastiveModel {
  PtmKind ptm = PtmKind::None;
  std::shared_ptr<Backbone> backbone;
  Projector projector;
  std::shared_ptr<Backbone> freq_backbone;  // TF-C only
  Projector freq_projector;                 // TF-C only

  ParamList params() const;
  std::int64_t projection_dim() const;  // classifier input width
};

// Builds the model for a PTM kind; TF-C gets two 1/sqrt(2)-width backbones.
ContrastiveModel make_contrastive_model(PtmKind ptm, BackboneKind backbone,
                                        std::int64_t in_channels, Rng& rng);

// [N] series of identical (channels, length) -> [N, C, L] tensor.
Tensor batch_to_tensor(std::span<const Series> batch);
// Per-channel magnitude half-spectrum, as a [C, floor(L/2)+1] series.
Series magnitude_spectrum(const Series& x);

// --- losses -----------------------------------------------------------------

// Normalized temperature-scaled cross entropy over cosine similarities.
// H0/H1 rows are positive pairs by index. Requires N >= 2 and tau > 0.
Tensor nt_xent(const Tensor& h0, const Tensor& h1, double temperature);

// Hierarchical temporal + instance contrastive loss over aligned per-step
// representations [N,T,d]; dot-product similarities, max-pool by 2 between
// levels until T == 1, mean over levels.
Tensor ts2vec_loss(const Tensor& z0, const Tensor& z1);

struct MixBatch {
  std::vector<Series> xi, xj, xk;
  std::vector<double> lambda;
};
// x_k = lambda * x_i + (1 - lambda) * x_j, elementwise and exact.
Series mix_series(const Series& xi, const Series& xj, double lambda);
// Pairs the batch against a cyclic shuffle of itself; lambda ~ Beta(alpha, alpha).
MixBatch mixup_batch(std::span<const Series> batch, double alpha, Rng& rng);

// Soft-target cross entropy: the mixed projection h_k scores all h_i and h_j
// candidates; targets put lambda on its own x_i and (1-lambda) on its own x_j.
Tensor mixingup_loss(const Tensor& hi, const Tensor& hj, const Tensor& hk,
                     const std::vector<double>& lambda, double temperature);

// --- training steps -----------------------------------------------------------

Tensor timeclr_step(std::span<const Series> batch, const ContrastiveModel& model,
                    const ContrastConfig& cfg, Rng& rng);
Tensor ts2vec_step(std::span<const Series> batch, const ContrastiveModel& model,
                   const ContrastConfig& cfg, Rng& rng);
Tensor mixingup_step(std::span<const Series> batch, const ContrastiveModel& model,
                     const ContrastConfig& cfg, Rng& rng);
Tensor tfc_step(std::span<const Series> batch, const ContrastiveModel& model,
                const ContrastConfig& cfg, Rng& rng);

// Dispatch on model.ptm.
Tensor pretrain_step(std::span<const Series> batch, const ContrastiveModel& model,
                     const ContrastConfig& cfg, Rng& rng);

// Classification forward shared by fine-tuning and evaluation: logits from
// the classifier on top of the projector (TF-C concatenates the time- and
// frequency-domain projections).
Tensor classify_logits(const ContrastiveModel& model, const Classifier& classifier,
                       const Tensor& x_batch);

}  // namespace tsbench
