#pragma once
// Time-series augmentation bank (12 kinds), the overlapping-crop pair
// generator, and frequency-domain augmentation on half-spectra.
//
// Each family has a deterministic primitive (exact, unit-testable) plus the
// random `augment` dispatcher that draws per-sample parameters from the rng.
// Identity parameter settings reproduce the input exactly.

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "tsbench/datasets.hpp"
#include "tsbench/rng.hpp"

namespace tsbench {

enum class AugmentKind {
  Jitter,
  Scaling,
  Negation,
  Smoothing,
  MagnitudeWarp,
  TimeWarp,
  CircularShift,
  AddSlope,
  AddSpike,
  AddStep,
  Mask,
  Crop,
};

inline constexpr int kAugmentBankSize = 12;
std::string augment_kind_name(AugmentKind k);
AugmentKind augment_kind_from_name(const std::string& name);

struct AugmentParams {
  double jitter_sigma = 0.03;      // x series std
  double scale_min = 0.7;
  double scale_max = 1.4;
  std::int64_t smooth_window = 5;  // moving-average width, 1 = identity
  std::int64_t warp_knots = 4;
  double warp_sigma = 0.2;
  double shift_frac = 1.0;         // max shift as fraction of L, 0 = identity
  double slope_max = 1.0;          // x series std over the full span
  double spike_min = 1.0;          // x series std
  double spike_max = 3.0;
  double step_max = 1.0;           // x series std
  double mask_frac = 0.1;
  double crop_min = 0.5;
  double crop_max = 0.9;

  // All knobs at their identity values.
  static AugmentParams identity();
};

// Deterministic primitives.
Series negate(const Series& x);
Series scale_values(const Series& x, double factor);
Series circular_shift(const Series& x, std::int64_t shift);
Series smooth(const Series& x, std::int64_t window);
Series crop_resample(const Series& x, std::int64_t start, std::int64_t len);

// One random augmentation of the given kind; output shape equals the input
// shape (crop resamples its slice back to full length).
Series augment(AugmentKind kind, const Series& x, const AugmentParams& params, Rng& rng);

// Uniform draw over the 12-kind bank.
AugmentKind sample_one_augmentation(Rng& rng);

// Overlapping crops for contextual-consistency pretraining.
struct CropPair {
  Series x0, x1;
  std::int64_t a0, b0;  // x0 = x[a0, b0)
  std::int64_t a1, b1;  // x1 = x[a1, b1)
  // Overlap is [a1, b0) in absolute coordinates; it is always non-empty.
  std::int64_t overlap_begin() const { return a1; }
  std::int64_t overlap_end() const { return b0; }
};

CropPair crop_pair(const Series& x, Rng& rng);

// Shared crop bounds for a whole batch (keeps batch tensors rectangular).
// min_len forces both crops to at least that many steps (backbones with a
// minimum input length set it to 8).
struct CropBounds {
  std::int64_t a0, b0, a1, b1;
};
CropBounds sample_crop_bounds(std::int64_t length, Rng& rng, std::int64_t min_len = 1);

// Frequency-domain augmentation on a conjugate-symmetric half-spectrum of a
// real signal of length n_time. Removes a random subset of bins and injects
// energy into another subset; DC (and Nyquist, for even n_time) stay real so
// the inverse transform remains real.
struct FreqAugmentParams {
  double remove_frac = 0.1;
  double add_frac = 0.1;
  double add_scale = 0.5;  // x max original bin magnitude
};

void frequency_augment(std::vector<std::complex<double>>& half, std::int64_t n_time,
                       const FreqAugmentParams& params, Rng& rng);

}  // namespace tsbench
