// tsbench command-line driver.
//
//   run       run experiments from a config file (single object or
//             {"experiments": [...]}), writing one record JSON each
//   pretrain  run stage 1 only and save the model checkpoint
//   finetune  fine-tune/validate/test a pretrained checkpoint
//   generate  sample series from a generator into dataset files
//   rank      aggregate records into an average-rank table
//   report    rank table + markdown report (+ optional size-vs-gain scatter)

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "tsbench/errors.hpp"
#include "tsbench/evaluation.hpp"
#include "tsbench/generators.hpp"
#include "tsbench/kernels.hpp"
#include "tsbench/pipeline.hpp"

using namespace tsbench;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json read_json_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config file: " + path);
  json j;
  is >> j;
  return j;
}

std::vector<ExperimentConfig> read_configs(const std::string& path) {
  const json j = read_json_file(path);
  std::vector<ExperimentConfig> configs;
  if (j.contains("experiments")) {
    for (const auto& e : j["experiments"]) configs.push_back(config_from_json(e));
  } else {
    configs.push_back(config_from_json(j));
  }
  return configs;
}

int cmd_run(const std::string& config_path, const std::string& out_dir, int workers) {
  auto configs = read_configs(config_path);
  std::cout << "running " << configs.size() << " experiment(s) with " << workers
            << " worker(s); kernels: "
            << kernels::backend_name(kernels::active_backend()) << "\n";
  auto paths = run_experiments(configs, out_dir, workers);
  for (std::size_t i = 0; i < paths.size(); ++i) {
    std::ifstream is(paths[i]);
    json j;
    is >> j;
    std::cout << configs[i].method_name() << " on " << configs[i].dataset_id()
              << ": test_accuracy=" << j.value("test_accuracy", 0.0) << " -> " << paths[i]
              << "\n";
  }
  return 0;
}

int cmd_pretrain(const std::string& config_path, const std::string& out_dir) {
  auto configs = read_configs(config_path);
  if (configs.size() != 1)
    throw UsageError("pretrain expects a config file with a single experiment");
  const ExperimentConfig& cfg = configs[0];
  PretrainedModel pm = pretrain_stage(cfg);
  fs::create_directories(out_dir);
  const fs::path path = fs::path(out_dir) / (cfg.method_name() + "__pretrained.ckpt");
  save_checkpoint(pretrained_checkpoint(pm), path.string());
  std::cout << "pretrained " << cfg.method_name() << ": pretrain_size=" << pm.pretrain_size
            << " n_gen=" << pm.n_gen << " epochs=" << pm.losses.size();
  if (!pm.losses.empty())
    std::cout << " first_loss=" << pm.losses.front() << " last_loss=" << pm.losses.back();
  std::cout << "\nsaved " << path.string() << "\n";
  return 0;
}

int cmd_finetune(const std::string& model_path, const std::string& out_dir) {
  Checkpoint ck = load_checkpoint(model_path);
  ExperimentConfig cfg;
  ContrastiveModel model = model_from_checkpoint(ck, cfg);
  json meta = json::parse(ck.meta);
  ExperimentRecord rec = finetune_and_evaluate(
      model, cfg, meta.value("pretrain_losses", std::vector<double>{}),
      meta.value("pretrain_size", std::int64_t{0}), meta.value("n_gen", std::int64_t{0}));
  fs::create_directories(fs::path(out_dir) / "records");
  const fs::path path = fs::path(out_dir) / "records" /
                        (cfg.method_name() + "__" + cfg.dataset_id() + "__" +
                         config_hash(cfg) + ".json");
  std::ofstream os(path);
  os << rec.to_json().dump(2) << '\n';
  std::cout << "test_accuracy=" << rec.test_accuracy << " (selected epoch "
            << rec.selected_epoch << ")\nsaved " << path.string() << "\n";
  return 0;
}

int cmd_generate(const std::string& kind_name, std::int64_t n, std::int64_t length,
                 std::int64_t channels, const std::string& dataset_dir,
                 const std::string& model_path, const std::string& save_model,
                 std::uint64_t seed, const std::string& out_dir) {
  const GeneratorKind kind = generator_kind_from_name(kind_name);
  Rng rng = Rng::derive(seed, "generate-cli");
  GeneratorModel gm;
  if (!model_path.empty()) {
    gm = generator_from_checkpoint(load_checkpoint(model_path));
  } else if (!dataset_dir.empty()) {
    // Fit on the 50% pretraining split of the dataset, mirroring the pipeline.
    Dataset ds = load_dataset(dataset_dir);
    SplitBundle bundle = split(ds, seed);
    GeneratorConfig gcfg;
    gm = fit_generator(kind, bundle.pretrain, gcfg, rng);
  } else {
    if (kind != GeneratorKind::RandomWalk && kind != GeneratorKind::Sinusoidal)
      throw UsageError("generator '" + kind_name + "' needs --dataset or --model to fit");
    if (kind == GeneratorKind::RandomWalk)
      gm.model = RwGenerator{channels, length};
    else
      gm.model = SwGenerator{channels, length};
    gm.kind = kind;
  }
  auto samples = sample_generator(gm, n, rng);

  // Samples carry no labels; the dataset formats require a label column, so
  // every row is written with label 0.
  Dataset out;
  out.meta.name = "generated-" + kind_name;
  out.class_labels = {0};
  for (auto& s : samples) out.items.push_back({std::move(s), 0});
  out.meta.channels = out.items[0].series.channels;
  out.meta.length = out.items[0].series.length;
  out.meta.classes = 1;
  write_dataset(out, out_dir);
  std::cout << "wrote " << out.items.size() << " series (" << out.meta.channels << "x"
            << out.meta.length << ") to " << out_dir << "\n";
  if (!save_model.empty() && kind != GeneratorKind::None) {
    save_checkpoint(generator_checkpoint(gm), save_model);
    std::cout << "saved generator checkpoint to " << save_model << "\n";
  }
  return 0;
}

int cmd_rank(const std::string& records_dir, const std::string& out_dir) {
  auto records = load_records(records_dir);
  RankTable table = average_rank(ResultsMatrix::from_records(records));
  emit_report(table, records, out_dir);
  std::cout << "method,avg_rank,n_datasets\n";
  for (const auto& e : table.entries)
    std::cout << e.method << ',' << e.avg_rank << ',' << e.n_datasets << "\n";
  std::cout << "wrote " << (fs::path(out_dir) / "rank_table.csv").string() << "\n";
  return 0;
}

int cmd_report(const std::string& records_dir, const std::string& out_dir,
               const std::string& size_gain_pair) {
  auto records = load_records(records_dir);
  RankTable table = average_rank(ResultsMatrix::from_records(records));
  SizeGainResult gain;
  bool have_gain = false;
  std::string label;
  if (!size_gain_pair.empty()) {
    const auto comma = size_gain_pair.find(',');
    if (comma == std::string::npos)
      throw UsageError("--size-gain expects 'methodA,methodB'");
    const std::string ma = size_gain_pair.substr(0, comma);
    const std::string mb = size_gain_pair.substr(comma + 1);
    std::vector<ExperimentRecord> ra, rb;
    for (const auto& r : records) {
      if (r.method == ma) ra.push_back(r);
      if (r.method == mb) rb.push_back(r);
    }
    gain = size_vs_gain(ra, rb);
    have_gain = true;
    label = ma + " minus " + mb;
  }
  emit_report(table, records, out_dir, have_gain ? &gain : nullptr, label);
  std::cout << "wrote report under " << out_dir << "\n";
  if (have_gain)
    std::cout << "size-vs-gain slope=" << gain.slope << " intercept=" << gain.intercept
              << " over " << gain.points.size() << " datasets\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"time-series pretraining benchmark toolkit"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", records_dir, model_path;
  int workers = 1;

  auto* run = app.add_subcommand("run", "run experiments from a config file");
  run->add_option("--config", config_path, "experiment config JSON")->required();
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--workers", workers, "parallel experiments");

  auto* pretrain = app.add_subcommand("pretrain", "stage 1 only; saves a checkpoint");
  pretrain->add_option("--config", config_path, "experiment config JSON")->required();
  pretrain->add_option("--out", out_dir, "output directory");

  auto* finetune = app.add_subcommand("finetune", "fine-tune a pretrained checkpoint");
  finetune->add_option("--model", model_path, "pretrained checkpoint")->required();
  finetune->add_option("--out", out_dir, "output directory");

  std::string gen_kind = "rw", save_model, dataset_dir, size_gain_pair;
  std::int64_t gen_n = 100, gen_length = 64, gen_channels = 1;
  std::uint64_t gen_seed = 0;
  auto* generate = app.add_subcommand("generate", "sample series from a generator");
  generate->add_option("--kind", gen_kind, "rw|sw|mg|gan|bvae|diff")->required();
  generate->add_option("--n", gen_n, "number of series")->required();
  generate->add_option("--length", gen_length, "series length (rw/sw without --dataset)");
  generate->add_option("--channels", gen_channels, "channels (rw/sw without --dataset)");
  generate->add_option("--dataset", dataset_dir, "dataset dir to fit trainable kinds on");
  generate->add_option("--model", model_path, "generator checkpoint to sample from");
  generate->add_option("--save-model", save_model, "write the fitted generator here");
  generate->add_option("--seed", gen_seed, "sampling seed");
  generate->add_option("--out", out_dir, "output dataset directory");

  auto* rank = app.add_subcommand("rank", "average-rank table from records");
  rank->add_option("--records", records_dir, "records directory")->required();
  rank->add_option("--out", out_dir, "output directory");

  auto* report = app.add_subcommand("report", "full report from records");
  report->add_option("--records", records_dir, "records directory")->required();
  report->add_option("--out", out_dir, "output directory");
  report->add_option("--size-gain", size_gain_pair,
                     "methodA,methodB accuracy-gain scatter and fit");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path, out_dir, workers);
    if (pretrain->parsed()) return cmd_pretrain(config_path, out_dir);
    if (finetune->parsed()) return cmd_finetune(model_path, out_dir);
    if (generate->parsed())
      return cmd_generate(gen_kind, gen_n, gen_length, gen_channels, dataset_dir,
                          model_path, save_model, gen_seed, out_dir);
    if (rank->parsed()) return cmd_rank(records_dir, out_dir);
    if (report->parsed()) return cmd_report(records_dir, out_dir, size_gain_pair);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
