#include "tsbench/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>

#include "tsbench/errors.hpp"

namespace tsbench {

namespace fs = std::filesystem;

namespace {

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

}  // namespace

bool ResultsMatrix::has(std::size_t m, std::size_t d) const {
  return !std::isnan(accuracy[m][d]);
}

ResultsMatrix ResultsMatrix::from_records(std::span<const ExperimentRecord> records) {
  std::set<std::string> method_set, dataset_set;
  for (const auto& r : records) {
    method_set.insert(r.method);
    dataset_set.insert(r.dataset);
  }
  ResultsMatrix m;
  m.methods.assign(method_set.begin(), method_set.end());
  m.datasets.assign(dataset_set.begin(), dataset_set.end());
  m.accuracy.assign(m.methods.size(), std::vector<double>(m.datasets.size(), kMissing));
  for (const auto& r : records) {
    const auto mi = std::lower_bound(m.methods.begin(), m.methods.end(), r.method) -
                    m.methods.begin();
    const auto di = std::lower_bound(m.datasets.begin(), m.datasets.end(), r.dataset) -
                    m.datasets.begin();
    m.accuracy[mi][di] = r.test_accuracy;
  }
  return m;
}

RankTable average_rank(const ResultsMatrix& matrix) {
  const std::size_t n_methods = matrix.methods.size();
  if (n_methods < 2) throw UsageError("average_rank: need at least 2 methods");

  std::vector<RankEntry> entries(n_methods);
  for (std::size_t m = 0; m < n_methods; ++m) entries[m].method = matrix.methods[m];
  for (std::size_t m = 0; m < n_methods; ++m)
    for (std::size_t d = 0; d < matrix.datasets.size(); ++d)
      if (!matrix.has(m, d)) ++entries[m].missing_cells;

  std::vector<double> rank_sum(n_methods, 0.0);
  std::int64_t used = 0, excluded = 0;
  for (std::size_t d = 0; d < matrix.datasets.size(); ++d) {
    bool complete = true;
    for (std::size_t m = 0; m < n_methods; ++m) complete = complete && matrix.has(m, d);
    if (!complete) {
      ++excluded;
      continue;
    }
    ++used;
    // Sort by accuracy descending; equal accuracies share the mean position.
    std::vector<std::size_t> order(n_methods);
    for (std::size_t m = 0; m < n_methods; ++m) order[m] = m;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return matrix.accuracy[a][d] > matrix.accuracy[b][d];
    });
    std::size_t i = 0;
    while (i < n_methods) {
      std::size_t j = i;
      while (j + 1 < n_methods &&
             matrix.accuracy[order[j + 1]][d] == matrix.accuracy[order[i]][d])
        ++j;
      const double shared = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
      for (std::size_t k = i; k <= j; ++k) rank_sum[order[k]] += shared;
      i = j + 1;
    }
  }
  if (used == 0)
    throw UsageError("average_rank: no dataset has results for every method");

  RankTable table;
  table.excluded_datasets = excluded;
  for (std::size_t m = 0; m < n_methods; ++m) {
    entries[m].avg_rank = rank_sum[m] / static_cast<double>(used);
    entries[m].n_datasets = used;
  }
  std::sort(entries.begin(), entries.end(), [](const RankEntry& a, const RankEntry& b) {
    if (a.avg_rank != b.avg_rank) return a.avg_rank < b.avg_rank;
    return a.method < b.method;
  });
  table.entries = std::move(entries);
  return table;
}

std::vector<std::string> top_k(const RankTable& table, std::size_t k) {
  if (k > table.entries.size())
    throw UsageError("top_k: k exceeds the number of methods");
  std::vector<std::string> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.push_back(table.entries[i].method);
  return out;
}

SizeGainResult size_vs_gain(std::span<const ExperimentRecord> method_a,
                            std::span<const ExperimentRecord> method_b) {
  std::map<std::string, const ExperimentRecord*> by_dataset;
  for (const auto& r : method_b) by_dataset[r.dataset] = &r;
  SizeGainResult out;
  for (const auto& a : method_a) {
    auto it = by_dataset.find(a.dataset);
    if (it == by_dataset.end()) continue;
    out.points.push_back({a.dataset, static_cast<double>(a.pretrain_size),
                          a.test_accuracy - it->second->test_accuracy});
  }
  if (out.points.size() < 2)
    throw UsageError("size_vs_gain: need at least 2 shared datasets");
  std::sort(out.points.begin(), out.points.end(),
            [](const SizeGainPoint& a, const SizeGainPoint& b) {
              return a.dataset < b.dataset;
            });
  const double n = static_cast<double>(out.points.size());
  double sx = 0, sy = 0, sxy = 0, sxx = 0;
  for (const auto& p : out.points) {
    sx += p.pretrain_size;
    sy += p.gain;
    sxy += p.pretrain_size * p.gain;
    sxx += p.pretrain_size * p.pretrain_size;
  }
  const double denom = sxx - sx * sx / n;
  if (denom == 0.0) throw UsageError("size_vs_gain: degenerate x values");
  out.slope = (sxy - sx * sy / n) / denom;
  out.intercept = sy / n - out.slope * sx / n;
  return out;
}

void emit_report(const RankTable& table, std::span<const ExperimentRecord> records,
                 const std::string& out_dir, const SizeGainResult* size_gain,
                 const std::string& size_gain_label) {
  if (table.entries.empty()) throw UsageError("emit_report: empty rank table");
  fs::create_directories(out_dir);

  {
    std::ofstream os(fs::path(out_dir) / "rank_table.csv", std::ios::trunc);
    if (!os) throw IoError("emit_report: cannot write rank_table.csv");
    os << "method,avg_rank,n_datasets\n";
    for (const auto& e : table.entries)
      os << e.method << ',' << format_double(e.avg_rank) << ',' << e.n_datasets << '\n';
  }

  {
    std::ofstream os(fs::path(out_dir) / "report.md", std::ios::trunc);
    if (!os) throw IoError("emit_report: cannot write report.md");
    os << "# Benchmark report\n\n";
    os << "- records: " << records.size() << "\n";
    os << "- methods: " << table.entries.size() << "\n";
    os << "- ranked datasets: " << (table.entries.empty() ? 0 : table.entries[0].n_datasets)
       << "\n";
    os << "- datasets excluded (incomplete method coverage): " << table.excluded_datasets
       << "\n\n";
    os << "| rank | method | avg rank | missing cells |\n";
    os << "|-----:|--------|---------:|--------------:|\n";
    int pos = 1;
    for (const auto& e : table.entries)
      os << "| " << pos++ << " | " << e.method << " | " << format_double(e.avg_rank)
         << " | " << e.missing_cells << " |\n";
    if (size_gain) {
      os << "\n## Pretraining-set size vs accuracy gain";
      if (!size_gain_label.empty()) os << " (" << size_gain_label << ")";
      os << "\n\n";
      os << "- points: " << size_gain->points.size() << "\n";
      os << "- OLS slope: " << format_double(size_gain->slope) << "\n";
      os << "- OLS intercept: " << format_double(size_gain->intercept) << "\n";
    }
  }

  if (size_gain) {
    std::ofstream os(fs::path(out_dir) / "size_gain.csv", std::ios::trunc);
    if (!os) throw IoError("emit_report: cannot write size_gain.csv");
    os << "dataset,pretrain_size,gain\n";
    for (const auto& p : size_gain->points)
      os << p.dataset << ',' << format_double(p.pretrain_size) << ','
         << format_double(p.gain) << '\n';
  }
}

std::vector<ExperimentRecord> load_records(const std::string& records_dir) {
  std::vector<fs::path> files;
  if (!fs::exists(records_dir)) throw IoError("records directory not found: " + records_dir);
  for (const auto& entry : fs::directory_iterator(records_dir))
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  std::vector<ExperimentRecord> out;
  for (const auto& f : files) {
    std::ifstream is(f);
    nlohmann::json j;
    try {
      is >> j;
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("record " + f.string() + ": " + e.what(), 1);
    }
    out.push_back(ExperimentRecord::from_json(j));
  }
  return out;
}

}  // namespace tsbench
