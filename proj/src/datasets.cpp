#include "tsbench/datasets.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "tsbench/errors.hpp"

namespace tsbench {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Formatting and parsing
// ---------------------------------------------------------------------------

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

double parse_double_token(const std::string& tok, std::size_t line) {
  double v = 0.0;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last)
    throw ParseError("non-numeric field '" + tok + "'", line);
  return v;
}

int parse_label_token(const std::string& tok, std::size_t line) {
  int v = 0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
    throw ParseError("non-integer label '" + tok + "'", line);
  return v;
}

// Maps raw labels to sorted class indices and fills meta.
void finalize_dataset(Dataset& ds) {
  std::map<int, int> index_of;
  for (const auto& it : ds.items) index_of.emplace(it.label, 0);
  ds.class_labels.clear();
  int idx = 0;
  for (auto& [label, i] : index_of) {
    i = idx++;
    ds.class_labels.push_back(label);
  }
  for (auto& it : ds.items) it.label = index_of[it.label];
  ds.meta.classes = static_cast<std::int64_t>(ds.class_labels.size());
  if (!ds.items.empty()) {
    ds.meta.channels = ds.items[0].series.channels;
    const std::int64_t L = ds.items[0].series.length;
    bool same = true;
    for (const auto& it : ds.items) same = same && it.series.length == L;
    ds.meta.length = same ? L : 0;
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// TestSplit
// ---------------------------------------------------------------------------

double TestSplit::score(const std::vector<int>& predictions) const {
  if (items_.empty()) throw UsageError("test split is empty");
  if (predictions.size() != items_.size())
    throw UsageError("prediction count does not match test split size");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < items_.size(); ++i)
    if (predictions[i] == items_[i].label) ++correct;
  return static_cast<double>(correct) / static_cast<double>(items_.size());
}

// ---------------------------------------------------------------------------
// TSV
// ---------------------------------------------------------------------------

Dataset load_tsv(const std::string& path, const std::string& name) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open dataset file: " + path);
  Dataset ds;
  ds.meta.name = name.empty() ? fs::path(path).parent_path().filename().string() : name;
  std::string line;
  std::size_t line_no = 0;
  std::size_t expected_fields = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) throw ParseError("empty row", line_no);
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
      const std::size_t tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (fields.size() < 2) throw ParseError("row needs a label and at least one value", line_no);
    if (expected_fields == 0) expected_fields = fields.size();
    if (fields.size() != expected_fields)
      throw ParseError("ragged row: expected " + std::to_string(expected_fields - 1) +
                           " values, got " + std::to_string(fields.size() - 1),
                       line_no);
    LabeledSeries item;
    item.label = parse_label_token(fields[0], line_no);
    item.series = Series(1, static_cast<std::int64_t>(fields.size() - 1));
    for (std::size_t i = 1; i < fields.size(); ++i) {
      const double v = parse_double_token(fields[i], line_no);
      if (!std::isfinite(v)) throw ParseError("non-finite value", line_no);
      item.series.values[i - 1] = v;
    }
    ds.items.push_back(std::move(item));
  }
  if (ds.items.empty()) throw ParseError("empty dataset file", 1);
  finalize_dataset(ds);
  return ds;
}

void write_tsv(const Dataset& ds, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open for writing: " + path);
  for (const auto& it : ds.items) {
    os << ds.class_labels[it.label];
    for (double v : it.series.values) os << '\t' << format_double(v);
    os << '\n';
  }
  if (!os) throw IoError("write failed: " + path);
}

// ---------------------------------------------------------------------------
// JSON lines
// ---------------------------------------------------------------------------

Dataset load_jsonl(const std::string& path, const std::string& name) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open dataset file: " + path);
  Dataset ds;
  ds.meta.name = name.empty() ? fs::path(path).parent_path().filename().string() : name;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) throw ParseError("empty row", line_no);
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(std::string("bad JSON: ") + e.what(), line_no);
    }
    if (!obj.contains("label") || !obj["label"].is_number_integer())
      throw ParseError("missing integer 'label'", line_no);
    if (!obj.contains("channels") || !obj["channels"].is_array() || obj["channels"].empty())
      throw ParseError("missing non-empty 'channels' array", line_no);
    const auto& chans = obj["channels"];
    const std::size_t L = chans[0].size();
    if (L == 0) throw ParseError("empty channel", line_no);
    LabeledSeries item;
    item.label = obj["label"].get<int>();
    item.series = Series(static_cast<std::int64_t>(chans.size()), static_cast<std::int64_t>(L));
    for (std::size_t c = 0; c < chans.size(); ++c) {
      if (!chans[c].is_array() || chans[c].size() != L)
        throw ParseError("channels have unequal lengths", line_no);
      for (std::size_t t = 0; t < L; ++t) {
        if (!chans[c][t].is_number())
          throw ParseError("non-numeric value in channel " + std::to_string(c), line_no);
        const double v = chans[c][t].get<double>();
        if (!std::isfinite(v)) throw ParseError("non-finite value", line_no);
        item.series.at(static_cast<std::int64_t>(c), static_cast<std::int64_t>(t)) = v;
      }
    }
    ds.items.push_back(std::move(item));
  }
  if (ds.items.empty()) throw ParseError("empty dataset file", 1);
  finalize_dataset(ds);
  return ds;
}

void write_jsonl(const Dataset& ds, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open for writing: " + path);
  for (const auto& it : ds.items) {
    os << "{\"label\":" << ds.class_labels[it.label] << ",\"channels\":[";
    for (std::int64_t c = 0; c < it.series.channels; ++c) {
      if (c) os << ',';
      os << '[';
      for (std::int64_t t = 0; t < it.series.length; ++t) {
        if (t) os << ',';
        os << format_double(it.series.at(c, t));
      }
      os << ']';
    }
    os << "]}\n";
  }
  if (!os) throw IoError("write failed: " + path);
}

// ---------------------------------------------------------------------------
// Directory form
// ---------------------------------------------------------------------------

Dataset load_dataset(const std::string& dir) {
  const fs::path base(dir);
  const fs::path tsv = base / "data.tsv";
  const fs::path jsonl = base / "data.jsonl";
  std::string name = base.filename().string();
  const fs::path meta_path = base / "meta.json";
  if (fs::exists(meta_path)) {
    std::ifstream is(meta_path);
    try {
      json meta = json::parse(is);
      if (meta.contains("name")) name = meta["name"].get<std::string>();
    } catch (const json::exception& e) {
      throw ParseError(std::string("bad meta.json: ") + e.what(), 1);
    }
  }
  if (fs::exists(tsv)) return load_tsv(tsv.string(), name);
  if (fs::exists(jsonl)) return load_jsonl(jsonl.string(), name);
  throw IoError("no data.tsv or data.jsonl under " + dir);
}

void write_dataset(const Dataset& ds, const std::string& dir) {
  fs::create_directories(dir);
  const bool univariate = ds.meta.channels == 1;
  if (univariate && ds.meta.length != 0)
    write_tsv(ds, (fs::path(dir) / "data.tsv").string());
  else
    write_jsonl(ds, (fs::path(dir) / "data.jsonl").string());
  json meta;
  meta["name"] = ds.meta.name;
  meta["channels"] = ds.meta.channels;
  meta["length"] = ds.meta.length;
  meta["classes"] = ds.meta.classes;
  std::ofstream os(fs::path(dir) / "meta.json", std::ios::trunc);
  os << meta.dump(2) << '\n';
  if (!os) throw IoError("cannot write meta.json under " + dir);
}

// ---------------------------------------------------------------------------
// Split protocol
// ---------------------------------------------------------------------------

SplitBundle split(const Dataset& ds, std::uint64_t seed) {
  const std::int64_t n = static_cast<std::int64_t>(ds.items.size());
  if (n < 10)
    throw UsageError("split: dataset needs at least 10 samples, got " + std::to_string(n));
  const std::int64_t n_test = n / 10;
  const std::int64_t n_val = n / 10;
  const std::int64_t n_train = 3 * n / 10;
  const std::int64_t n_pretrain = n - n_train - n_val - n_test;

  Rng rng = Rng::derive(seed, "split");
  const auto perm = rng.permutation(static_cast<std::size_t>(n));

  SplitBundle out;
  out.seed = seed;
  out.dataset_id = ds.meta.name;
  out.n_classes = ds.meta.classes;
  std::int64_t pos = 0;
  for (std::int64_t i = 0; i < n_pretrain; ++i)
    out.pretrain.push_back(ds.items[perm[pos++]].series);  // label dropped here
  for (std::int64_t i = 0; i < n_train; ++i) out.train.push_back(ds.items[perm[pos++]]);
  for (std::int64_t i = 0; i < n_val; ++i) out.validation.push_back(ds.items[perm[pos++]]);
  std::vector<LabeledSeries> test;
  for (std::int64_t i = 0; i < n_test; ++i) test.push_back(ds.items[perm[pos++]]);
  out.test = TestSplit(std::move(test));
  return out;
}

// ---------------------------------------------------------------------------
// Normalization
// ---------------------------------------------------------------------------

void znormalize(Series& s) {
  for (std::int64_t c = 0; c < s.channels; ++c) {
    double* row = s.values.data() + c * s.length;
    double mean = 0.0;
    for (std::int64_t t = 0; t < s.length; ++t) mean += row[t];
    mean /= static_cast<double>(s.length);
    double var = 0.0;
    for (std::int64_t t = 0; t < s.length; ++t) var += (row[t] - mean) * (row[t] - mean);
    var /= static_cast<double>(s.length);
    if (var == 0.0) {
      for (std::int64_t t = 0; t < s.length; ++t) row[t] = 0.0;
    } else {
      const double inv = 1.0 / std::sqrt(var);
      for (std::int64_t t = 0; t < s.length; ++t) row[t] = (row[t] - mean) * inv;
    }
  }
}

void TestSplit::normalize_values() {
  for (auto& it : items_) znormalize(it.series);
}

void znormalize(SplitBundle& bundle, NormalizeMode mode) {
  if (mode == NormalizeMode::Off) return;
  for (auto& s : bundle.pretrain) znormalize(s);
  for (auto& it : bundle.train) znormalize(it.series);
  for (auto& it : bundle.validation) znormalize(it.series);
  bundle.test.normalize_values();
}

// ---------------------------------------------------------------------------
// Synthetic datasets
// ---------------------------------------------------------------------------

namespace {

double wave_value(int cls, double theta) {
  switch (cls) {
    case 0: return std::sin(theta);
    case 1: return std::sin(theta) >= 0.0 ? 1.0 : -1.0;  // square
    default: {
      // sawtooth in [-1, 1]
      const double frac = theta / (2.0 * std::numbers::pi);
      return 2.0 * (frac - std::floor(frac)) - 1.0;
    }
  }
}

Dataset synth_waves(const SynthSpec& spec, Rng& rng, int n_classes) {
  Dataset ds;
  ds.meta.name = spec.name;
  for (std::int64_t i = 0; i < spec.n; ++i) {
    const int cls = static_cast<int>(i % n_classes);
    LabeledSeries item;
    item.label = cls;
    item.series = Series(1, spec.length);
    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double amp = rng.uniform(0.8, 1.2);
    double cycles = 2.0;
    int wave_cls = cls;
    if (spec.name == "two-class-freq") {
      cycles = cls == 0 ? rng.uniform(1.0, 2.0) : rng.uniform(6.0, 8.0);
      wave_cls = 0;  // both classes are sines, frequency separates them
    }
    for (std::int64_t t = 0; t < spec.length; ++t) {
      const double theta =
          2.0 * std::numbers::pi * cycles * static_cast<double>(t) /
              static_cast<double>(spec.length) +
          phase;
      item.series.values[t] = amp * wave_value(wave_cls, theta) +
                              spec.noise_sigma * rng.normal();
    }
    ds.items.push_back(std::move(item));
  }
  finalize_dataset(ds);
  return ds;
}

Dataset synth_blobs_walk(const SynthSpec& spec, Rng& rng) {
  Dataset ds;
  ds.meta.name = spec.name;
  for (std::int64_t i = 0; i < spec.n; ++i) {
    const int cls = static_cast<int>(i % 2);
    LabeledSeries item;
    item.label = cls;
    item.series = Series(1, spec.length);
    const double center = (cls == 0 ? 0.25 : 0.75) * static_cast<double>(spec.length);
    const double width = static_cast<double>(spec.length) / 8.0;
    double walk = 0.0;
    for (std::int64_t t = 0; t < spec.length; ++t) {
      walk += 0.1 * rng.normal();
      const double d = (static_cast<double>(t) - center) / width;
      item.series.values[t] = 2.0 * std::exp(-0.5 * d * d) + walk +
                              spec.noise_sigma * rng.normal();
    }
    ds.items.push_back(std::move(item));
  }
  finalize_dataset(ds);
  return ds;
}

}  // namespace

Dataset synth_dataset(const SynthSpec& spec, Rng& rng) {
  if (spec.n < 1 || spec.length < 1)
    throw UsageError("synth_dataset: n and length must be positive");
  if (spec.name == "three-class-waves") return synth_waves(spec, rng, 3);
  if (spec.name == "two-class-freq") return synth_waves(spec, rng, 2);
  if (spec.name == "gaussian-blobs-walk") return synth_blobs_walk(spec, rng);
  throw UsageError("synth_dataset: unknown spec '" + spec.name + "'");
}

}  // namespace tsbench
