#include "tsbench/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "tsbench/errors.hpp"

namespace tsbench {

namespace {

const char* kKindNames[kAugmentBankSize] = {
    "jitter", "scaling", "negation", "smoothing", "magnitude_warp", "time_warp",
    "circular_shift", "add_slope", "add_spike", "add_step", "mask", "crop"};

double channel_std(const Series& x, std::int64_t c) {
  const double* row = x.values.data() + c * x.length;
  double mean = 0.0;
  for (std::int64_t t = 0; t < x.length; ++t) mean += row[t];
  mean /= static_cast<double>(x.length);
  double var = 0.0;
  for (std::int64_t t = 0; t < x.length; ++t) var += (row[t] - mean) * (row[t] - mean);
  return std::sqrt(var / static_cast<double>(x.length));
}

// Fritsch-Carlson monotone cubic interpolation through (xs, ys).
struct Pchip {
  std::vector<double> xs, ys, ms;

  Pchip(std::vector<double> x, std::vector<double> y)
      : xs(std::move(x)), ys(std::move(y)), ms(xs.size(), 0.0) {
    const std::size_t n = xs.size();
    if (n < 2) throw UsageError("pchip: need at least two knots");
    std::vector<double> delta(n - 1);
    for (std::size_t k = 0; k + 1 < n; ++k)
      delta[k] = (ys[k + 1] - ys[k]) / (xs[k + 1] - xs[k]);
    ms[0] = delta[0];
    ms[n - 1] = delta[n - 2];
    for (std::size_t k = 1; k + 1 < n; ++k) {
      if (delta[k - 1] * delta[k] <= 0.0) {
        ms[k] = 0.0;
      } else {
        const double h0 = xs[k] - xs[k - 1];
        const double h1 = xs[k + 1] - xs[k];
        const double w1 = 2.0 * h1 + h0;
        const double w2 = h1 + 2.0 * h0;
        ms[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
      }
    }
  }

  double eval(double x) const {
    const std::size_t n = xs.size();
    if (x <= xs.front()) return ys.front();
    if (x >= xs.back()) return ys.back();
    std::size_t k = 0;
    while (k + 2 < n && x > xs[k + 1]) ++k;
    const double h = xs[k + 1] - xs[k];
    const double s = (x - xs[k]) / h;
    const double s2 = s * s, s3 = s2 * s;
    return ys[k] * (2 * s3 - 3 * s2 + 1) + h * ms[k] * (s3 - 2 * s2 + s) +
           ys[k + 1] * (-2 * s3 + 3 * s2) + h * ms[k + 1] * (s3 - s2);
  }
};

void resample_linear(const double* src, std::int64_t src_len, double* dst,
                     std::int64_t dst_len) {
  if (src_len == 1) {
    for (std::int64_t t = 0; t < dst_len; ++t) dst[t] = src[0];
    return;
  }
  if (dst_len == 1) {
    dst[0] = src[0];
    return;
  }
  const double step = static_cast<double>(src_len - 1) / static_cast<double>(dst_len - 1);
  for (std::int64_t t = 0; t < dst_len; ++t) {
    const double pos = static_cast<double>(t) * step;
    const std::int64_t lo = std::min<std::int64_t>(static_cast<std::int64_t>(pos), src_len - 2);
    const double frac = pos - static_cast<double>(lo);
    dst[t] = src[lo] * (1.0 - frac) + src[lo + 1] * frac;
  }
}

// Smooth per-channel multiplier curve from warp knots.
std::vector<double> knot_curve(std::int64_t length, std::int64_t knots, double sigma,
                               Rng& rng) {
  const std::int64_t k = std::max<std::int64_t>(knots, 2);
  std::vector<double> xs(k), ys(k);
  for (std::int64_t i = 0; i < k; ++i) {
    xs[i] = static_cast<double>(length - 1) * static_cast<double>(i) /
            static_cast<double>(k - 1);
    ys[i] = 1.0 + sigma * rng.normal();
  }
  Pchip curve(std::move(xs), std::move(ys));
  std::vector<double> out(static_cast<std::size_t>(length));
  for (std::int64_t t = 0; t < length; ++t) out[t] = curve.eval(static_cast<double>(t));
  return out;
}

}  // namespace

std::string augment_kind_name(AugmentKind k) { return kKindNames[static_cast<int>(k)]; }

AugmentKind augment_kind_from_name(const std::string& name) {
  for (int i = 0; i < kAugmentBankSize; ++i)
    if (name == kKindNames[i]) return static_cast<AugmentKind>(i);
  throw UsageError("unknown augmentation kind '" + name + "'");
}

AugmentParams AugmentParams::identity() {
  AugmentParams p;
  p.jitter_sigma = 0.0;
  p.scale_min = p.scale_max = 1.0;
  p.smooth_window = 1;
  p.warp_sigma = 0.0;
  p.shift_frac = 0.0;
  p.slope_max = 0.0;
  p.spike_min = p.spike_max = 0.0;
  p.step_max = 0.0;
  p.mask_frac = 0.0;
  p.crop_min = p.crop_max = 1.0;
  return p;
}

Series negate(const Series& x) {
  Series y = x;
  for (auto& v : y.values) v = -v;
  return y;
}

Series scale_values(const Series& x, double factor) {
  Series y = x;
  for (auto& v : y.values) v *= factor;
  return y;
}

Series circular_shift(const Series& x, std::int64_t shift) {
  Series y = x;
  const std::int64_t L = x.length;
  const std::int64_t s = ((shift % L) + L) % L;
  if (s == 0) return y;
  for (std::int64_t c = 0; c < x.channels; ++c) {
    const double* src = x.values.data() + c * L;
    double* dst = y.values.data() + c * L;
    for (std::int64_t t = 0; t < L; ++t) dst[t] = src[(t + s) % L];
  }
  return y;
}

Series smooth(const Series& x, std::int64_t window) {
  if (window <= 1) return x;
  Series y = x;
  const std::int64_t half = window / 2;
  for (std::int64_t c = 0; c < x.channels; ++c) {
    const double* src = x.values.data() + c * x.length;
    double* dst = y.values.data() + c * x.length;
    for (std::int64_t t = 0; t < x.length; ++t) {
      const std::int64_t lo = std::max<std::int64_t>(0, t - half);
      const std::int64_t hi = std::min<std::int64_t>(x.length - 1, t + half);
      double acc = 0.0;
      for (std::int64_t u = lo; u <= hi; ++u) acc += src[u];
      dst[t] = acc / static_cast<double>(hi - lo + 1);
    }
  }
  return y;
}

Series crop_resample(const Series& x, std::int64_t start, std::int64_t len) {
  if (start < 0 || len < 1 || start + len > x.length)
    throw UsageError("crop_resample: slice out of range");
  Series y(x.channels, x.length);
  for (std::int64_t c = 0; c < x.channels; ++c)
    resample_linear(x.values.data() + c * x.length + start, len,
                    y.values.data() + c * x.length, x.length);
  return y;
}

Series augment(AugmentKind kind, const Series& x, const AugmentParams& p, Rng& rng) {
  if (x.length < 1 || x.channels < 1) throw UsageError("augment: empty series");
  const std::int64_t L = x.length;
  switch (kind) {
    case AugmentKind::Jitter: {
      Series y = x;
      if (p.jitter_sigma == 0.0) return y;
      for (std::int64_t c = 0; c < x.channels; ++c) {
        const double s = p.jitter_sigma * channel_std(x, c);
        double* row = y.values.data() + c * L;
        for (std::int64_t t = 0; t < L; ++t) row[t] += s * rng.normal();
      }
      return y;
    }
    case AugmentKind::Scaling: {
      Series y = x;
      for (std::int64_t c = 0; c < x.channels; ++c) {
        const double f = rng.uniform(p.scale_min, p.scale_max);
        double* row = y.values.data() + c * L;
        for (std::int64_t t = 0; t < L; ++t) row[t] *= f;
      }
      return y;
    }
    case AugmentKind::Negation:
      return negate(x);
    case AugmentKind::Smoothing:
      return smooth(x, p.smooth_window);
    case AugmentKind::MagnitudeWarp: {
      if (p.warp_sigma == 0.0) return x;
      Series y = x;
      for (std::int64_t c = 0; c < x.channels; ++c) {
        const auto curve = knot_curve(L, p.warp_knots, p.warp_sigma, rng);
        double* row = y.values.data() + c * L;
        for (std::int64_t t = 0; t < L; ++t) row[t] *= curve[t];
      }
      return y;
    }
    case AugmentKind::TimeWarp: {
      if (p.warp_sigma == 0.0 || L < 2) return x;
      // Monotone warp of the time axis: knot gaps exp(sigma*z), normalized,
      // interpolated with a monotone cubic, then linear resampling.
      const std::int64_t k = std::max<std::int64_t>(p.warp_knots, 2);
      std::vector<double> xs(k), us(k);
      for (std::int64_t i = 0; i < k; ++i)
        xs[i] = static_cast<double>(L - 1) * static_cast<double>(i) /
                static_cast<double>(k - 1);
      us[0] = 0.0;
      for (std::int64_t i = 1; i < k; ++i)
        us[i] = us[i - 1] + (xs[i] - xs[i - 1]) * std::exp(p.warp_sigma * rng.normal());
      const double norm = static_cast<double>(L - 1) / us[k - 1];
      for (auto& u : us) u *= norm;
      Pchip warp(std::move(xs), std::move(us));
      Series y(x.channels, L);
      for (std::int64_t c = 0; c < x.channels; ++c) {
        const double* src = x.values.data() + c * L;
        double* dst = y.values.data() + c * L;
        for (std::int64_t t = 0; t < L; ++t) {
          const double pos = std::clamp(warp.eval(static_cast<double>(t)), 0.0,
                                        static_cast<double>(L - 1));
          const std::int64_t lo = std::min<std::int64_t>(static_cast<std::int64_t>(pos), L - 2);
          const double frac = pos - static_cast<double>(lo);
          dst[t] = src[lo] * (1.0 - frac) + src[lo + 1] * frac;
        }
      }
      return y;
    }
    case AugmentKind::CircularShift: {
      const std::int64_t max_shift =
          static_cast<std::int64_t>(std::llround(p.shift_frac * static_cast<double>(L - 1)));
      if (max_shift <= 0) return x;
      return circular_shift(x, rng.uniform_int(0, max_shift));
    }
    case AugmentKind::AddSlope: {
      Series y = x;
      if (p.slope_max == 0.0 || L < 2) return y;
      for (std::int64_t c = 0; c < x.channels; ++c) {
        const double h = rng.uniform(-p.slope_max, p.slope_max) * channel_std(x, c);
        double* row = y.values.data() + c * L;
        for (std::int64_t t = 0; t < L; ++t)
          row[t] += h * static_cast<double>(t) / static_cast<double>(L - 1);
      }
      return y;
    }
    case AugmentKind::AddSpike: {
      Series y = x;
      if (p.spike_max == 0.0) return y;
      for (std::int64_t c = 0; c < x.channels; ++c) {
        const std::int64_t pos = rng.uniform_int(0, L - 1);
        const double sign = rng.bernoulli(0.5) ? 1.0 : -1.0;
        const double mag = rng.uniform(p.spike_min, p.spike_max) * channel_std(x, c);
        y.values[c * L + pos] += sign * mag;
      }
      return y;
    }
    case AugmentKind::AddStep: {
      Series y = x;
      if (p.step_max == 0.0) return y;
      for (std::int64_t c = 0; c < x.channels; ++c) {
        const std::int64_t pos = rng.uniform_int(0, L - 1);
        const double h = rng.uniform(-p.step_max, p.step_max) * channel_std(x, c);
        double* row = y.values.data() + c * L;
        for (std::int64_t t = pos; t < L; ++t) row[t] += h;
      }
      return y;
    }
    case AugmentKind::Mask: {
      Series y = x;
      if (p.mask_frac == 0.0) return y;
      for (auto& v : y.values)
        if (rng.bernoulli(p.mask_frac)) v = 0.0;
      return y;
    }
    case AugmentKind::Crop: {
      const double frac = rng.uniform(p.crop_min, p.crop_max);
      const std::int64_t len =
          std::clamp<std::int64_t>(static_cast<std::int64_t>(std::llround(
                                       frac * static_cast<double>(L))),
                                   1, L);
      const std::int64_t start = rng.uniform_int(0, L - len);
      return crop_resample(x, start, len);
    }
  }
  throw UsageError("augment: unknown kind");
}

AugmentKind sample_one_augmentation(Rng& rng) {
  return static_cast<AugmentKind>(rng.uniform_int(0, kAugmentBankSize - 1));
}

CropBounds sample_crop_bounds(std::int64_t length, Rng& rng, std::int64_t min_len) {
  if (length < 8) throw UsageError("crop_pair: series too short (need L >= 8)");
  if (min_len > length) throw UsageError("crop_pair: min_len exceeds series length");
  // Overlap region first, then independent outer endpoints; crops are then
  // widened as needed to satisfy min_len.
  const std::int64_t os = rng.uniform_int(0, std::max<std::int64_t>(0, length - std::max<std::int64_t>(min_len, 2)));
  std::int64_t oe = rng.uniform_int(os + 1, length);
  oe = std::max(oe, std::min(length, min_len));
  CropBounds b;
  b.a0 = rng.uniform_int(0, os);
  b.a0 = std::min(b.a0, std::max<std::int64_t>(0, oe - min_len));
  b.b0 = oe;
  b.a1 = os;
  b.b1 = rng.uniform_int(oe, length);
  b.b1 = std::max(b.b1, std::min(length, os + min_len));
  return b;
}

CropPair crop_pair(const Series& x, Rng& rng) {
  const CropBounds b = sample_crop_bounds(x.length, rng);
  CropPair out;
  out.a0 = b.a0;
  out.b0 = b.b0;
  out.a1 = b.a1;
  out.b1 = b.b1;
  out.x0 = Series(x.channels, b.b0 - b.a0);
  out.x1 = Series(x.channels, b.b1 - b.a1);
  for (std::int64_t c = 0; c < x.channels; ++c) {
    for (std::int64_t t = b.a0; t < b.b0; ++t) out.x0.at(c, t - b.a0) = x.at(c, t);
    for (std::int64_t t = b.a1; t < b.b1; ++t) out.x1.at(c, t - b.a1) = x.at(c, t);
  }
  return out;
}

void frequency_augment(std::vector<std::complex<double>>& half, std::int64_t n_time,
                       const FreqAugmentParams& p, Rng& rng) {
  if (half.size() != static_cast<std::size_t>(n_time / 2 + 1))
    throw ShapeError("frequency_augment: half-spectrum size mismatch");
  double max_mag = 0.0;
  for (const auto& v : half) max_mag = std::max(max_mag, std::abs(v));
  if (max_mag == 0.0) max_mag = 1.0;
  const bool even = (n_time % 2) == 0;
  const std::size_t nyquist = half.size() - 1;
  for (std::size_t k = 0; k < half.size(); ++k) {
    if (p.remove_frac > 0.0 && rng.bernoulli(p.remove_frac)) half[k] = 0.0;
    if (p.add_frac > 0.0 && rng.bernoulli(p.add_frac)) {
      const double mag = p.add_scale * max_mag * rng.uniform(0.5, 1.0);
      const bool must_be_real = k == 0 || (even && k == nyquist);
      if (must_be_real) {
        half[k] += (rng.bernoulli(0.5) ? 1.0 : -1.0) * mag;
      } else {
        const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
        half[k] += std::complex<double>(mag * std::cos(phase), mag * std::sin(phase));
      }
    }
  }
}

}  // namespace tsbench
