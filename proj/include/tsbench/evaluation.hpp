#pragma once
// Cross-dataset aggregation: average-rank tables over a methods x datasets
// accuracy grid, top-k listings, the pretraining-size vs accuracy-gain
// regression, and report emission.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tsbench/pipeline.hpp"

namespace tsbench {

struct ResultsMatrix {
  std::vector<std::string> methods;   // sorted, unique
  std::vector<std::string> datasets;  // sorted, unique
  // accuracy[m][d]; quiet NaN marks a missing cell
  std::vector<std::vector<double>> accuracy;

  static ResultsMatrix from_records(std::span<const ExperimentRecord> records);
  bool has(std::size_t m, std::size_t d) const;
};

struct RankEntry {
  std::string method;
  double avg_rank = 0.0;
  std::int64_t n_datasets = 0;
  std::int64_t missing_cells = 0;
};

struct RankTable {
  std::vector<RankEntry> entries;  // ascending avg_rank, ties by method name
  std::int64_t excluded_datasets = 0;
};

// Rank 1 = highest accuracy; ties get the mean of the tied positions. Only
// datasets where every method has an entry are ranked; the rest are counted
// into excluded_datasets. Requires >= 2 methods and >= 1 complete column.
RankTable average_rank(const ResultsMatrix& matrix);

// First k methods by ascending average rank (ties already broken by name).
std::vector<std::string> top_k(const RankTable& table, std::size_t k);

struct SizeGainPoint {
  std::string dataset;
  double pretrain_size = 0.0;
  double gain = 0.0;  // accuracy(A) - accuracy(B)
};

struct SizeGainResult {
  double slope = 0.0;
  double intercept = 0.0;
  std::vector<SizeGainPoint> points;
};

// Ordinary least squares of accuracy gain (A minus B) against pretraining-set
// size over the datasets both methods cover. Positive gain means A wins.
SizeGainResult size_vs_gain(std::span<const ExperimentRecord> method_a,
                            std::span<const ExperimentRecord> method_b);

// Writes report.md and rank_table.csv (header: method,avg_rank,n_datasets);
// when a size-gain analysis is supplied, also size_gain.csv. Output is
// byte-stable for identical inputs.
void emit_report(const RankTable& table, std::span<const ExperimentRecord> records,
                 const std::string& out_dir, const SizeGainResult* size_gain = nullptr,
                 const std::string& size_gain_label = "");

// Loads every *.json under the directory, sorted by filename.
std::vector<ExperimentRecord> load_records(const std::string& records_dir);

}  // namespace tsbench
