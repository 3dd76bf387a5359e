#pragma once
// Dataset types, file formats, the split protocol and built-in synthetic
// datasets.
//
// File formats:
//   univariate  : data.tsv, one sample per row: "<label>\t<v0>\t<v1>..."
//   multivariate: data.jsonl, one JSON object per line:
//                 {"label": <int>, "channels": [[...], [...]]}
//   either sits in a directory next to meta.json:
//                 {"name":..., "channels":..., "length":..., "classes":...}
// Writers emit a canonical form (shortest round-trip doubles) so that
// write(load(f)) is byte-stable.
//
// Labels are normalized to class indices 0..k-1 at load; the original label
// values are kept in Dataset::class_labels for writing back.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tsbench/rng.hpp"

namespace tsbench {

// Unlabeled multichannel series, values row-major [channels x length].
struct Series {
  std::int64_t channels = 1;
  std::int64_t length = 0;
  std::vector<double> values;

  Series() = default;
  Series(std::int64_t c, std::int64_t l) : channels(c), length(l), values(c * l, 0.0) {}

  double& at(std::int64_t c, std::int64_t t) { return values[c * length + t]; }
  double at(std::int64_t c, std::int64_t t) const { return values[c * length + t]; }
};

struct LabeledSeries {
  Series series;
  int label = 0;  // class index 0..k-1
};

struct DatasetMeta {
  std::string name;
  std::int64_t channels = 1;
  std::int64_t length = 0;  // 0 when variable across samples
  std::int64_t classes = 0;
};

struct Dataset {
  DatasetMeta meta;
  std::vector<int> class_labels;  // sorted original labels, index = class id
  std::vector<LabeledSeries> items;

  std::size_t size() const { return items.size(); }
};

// Test partition with sealed labels: only score() may consult them, so no
// training-path code can read test labels.
class TestSplit {
 public:
  TestSplit() = default;
  explicit TestSplit(std::vector<LabeledSeries> items) : items_(std::move(items)) {}

  std::size_t size() const { return items_.size(); }
  const Series& series(std::size_t i) const { return items_[i].series; }

  // Fraction of correct class-index predictions.
  double score(const std::vector<int>& predictions) const;

  // Values-only transform; labels stay sealed.
  void normalize_values();

 private:
  std::vector<LabeledSeries> items_;
};

struct SplitBundle {
  std::vector<Series> pretrain;  // labels stripped at the type level
  std::vector<LabeledSeries> train;
  std::vector<LabeledSeries> validation;
  TestSplit test;
  std::uint64_t seed = 0;
  std::string dataset_id;
  std::int64_t n_classes = 0;
};

// --- loading / writing -------------------------------------------------------

// Loads from a dataset directory (meta.json + data.tsv or data.jsonl).
Dataset load_dataset(const std::string& dir);
// Writes the canonical directory form; multivariate data goes to data.jsonl.
void write_dataset(const Dataset& ds, const std::string& dir);

// Low-level single-file loaders.
Dataset load_tsv(const std::string& path, const std::string& name = "");
Dataset load_jsonl(const std::string& path, const std::string& name = "");
void write_tsv(const Dataset& ds, const std::string& path);
void write_jsonl(const Dataset& ds, const std::string& path);

// Canonical shortest-round-trip decimal form used by every writer.
std::string format_double(double v);

// --- splitting ----------------------------------------------------------------

// Seeded random partition into pretrain/train/validation/test with ratios
// 50/30/10/10; flooring remainders go to pretrain. Requires N >= 10.
SplitBundle split(const Dataset& ds, std::uint64_t seed);

// --- normalization -------------------------------------------------------------

enum class NormalizeMode { Off, PerSeries };

// Per-channel (x - mean) / std; zero-variance channels map to zeros.
void znormalize(Series& s);
void znormalize(SplitBundle& bundle, NormalizeMode mode);

// --- synthetic datasets ---------------------------------------------------------

struct SynthSpec {
  std::string name;  // three-class-waves | two-class-freq | gaussian-blobs-walk
  std::int64_t n = 300;
  std::int64_t length = 64;
  double noise_sigma = 0.3;
};

Dataset synth_dataset(const SynthSpec& spec, Rng& rng);

}  // namespace tsbench
