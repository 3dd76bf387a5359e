#pragma once
// Four-stage experiment driver: Pretrain -> Fine-tune -> Validate -> Test.
//
// Every random draw derives from the config seed through named streams, so a
// (config, seed) pair reproduces a bit-identical record. Wall time is kept on
// the in-memory record as telemetry but stays out of the canonical JSON.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tsbench/baselines.hpp"
#include "tsbench/datasets.hpp"
#include "tsbench/generators.hpp"
#include "tsbench/optim.hpp"
#include "tsbench/pretrain.hpp"

namespace tsbench {

struct ExperimentConfig {
  // Method identity; `baseline` (1nn_ed / 1nn_dtw) overrides the triple.
  BackboneKind backbone = BackboneKind::ResNet;
  PtmKind ptm = PtmKind::None;
  GeneratorKind generator = GeneratorKind::None;
  std::string baseline;

  // Data: a dataset directory, or a built-in synthetic spec when empty.
  std::string dataset_path;
  SynthSpec synth{"three-class-waves", 300, 64, 0.3};

  std::uint64_t seed = 0;
  std::int64_t epochs = 400;
  std::int64_t batch_size = 64;
  std::int64_t pretrain_epochs = -1;   // -1: use epochs
  std::int64_t finetune_epochs = -1;   // -1: use epochs
  std::int64_t generator_epochs = -1;  // -1: use epochs
  std::int64_t val_interval = 10;
  std::int64_t gen_threshold = kUcrGenThreshold;
  std::string normalize = "per_series";  // per_series | off

  AdamWConfig optim;        // optim.lr doubles as the 1cycle max_lr
  OneCycleConfig onecycle;  // max_lr/total_steps filled per stage
  ContrastConfig contrast;
  GeneratorConfig generator_cfg;

  std::string method_name() const;
  std::string dataset_id() const;
};

nlohmann::json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const nlohmann::json& j);

struct ValidationPoint {
  std::int64_t epoch = 0;
  double accuracy = 0.0;
};

struct ExperimentRecord {
  nlohmann::json config_snapshot;
  std::string method;
  std::string dataset;
  std::int64_t pretrain_size = 0;
  std::int64_t n_gen = 0;
  std::vector<double> pretrain_losses;  // per-epoch means; empty when stage 1 skipped
  std::vector<double> finetune_losses;
  std::vector<ValidationPoint> validation;
  std::int64_t selected_epoch = 0;
  double test_accuracy = 0.0;
  double wall_time_sec = 0.0;  // telemetry only, not serialized

  nlohmann::json to_json() const;
  static ExperimentRecord from_json(const nlohmann::json& j);
};

// Highest validation accuracy; ties go to the earliest epoch.
std::int64_t select_checkpoint(const std::vector<ValidationPoint>& points);

ExperimentRecord run_experiment(const ExperimentConfig& cfg);

// Stage pieces shared by the CLI.
struct PretrainedModel {
  ContrastiveModel model;
  ExperimentConfig config;
  std::vector<double> losses;
  std::int64_t pretrain_size = 0;
  std::int64_t n_gen = 0;
};
PretrainedModel pretrain_stage(const ExperimentConfig& cfg);
Checkpoint pretrained_checkpoint(const PretrainedModel& pm);
ContrastiveModel model_from_checkpoint(const Checkpoint& ck, ExperimentConfig& cfg_out);

// Runs fine-tune/validate/test on an already-built model.
ExperimentRecord finetune_and_evaluate(ContrastiveModel& model,
                                       const ExperimentConfig& cfg,
                                       std::vector<double> pretrain_losses,
                                       std::int64_t pretrain_size, std::int64_t n_gen);

// Stable identity for resumable record files.
std::string config_hash(const ExperimentConfig& cfg);

// Runs every config, skipping ones whose record file already exists;
// `workers` > 1 runs experiments in parallel, one thread each.
std::vector<std::string> run_experiments(const std::vector<ExperimentConfig>& configs,
                                         const std::string& out_dir, int workers);

}  // namespace tsbench
