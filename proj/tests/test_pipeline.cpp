#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "tsbench/errors.hpp"
#include "tsbench/pipeline.hpp"

using namespace tsbench;
namespace fs = std::filesystem;

namespace {

// Small, fast config used across these tests.
ExperimentConfig tiny_config() {
  ExperimentConfig cfg;
  cfg.backbone = BackboneKind::ResNet;
  cfg.ptm = PtmKind::None;
  cfg.generator = GeneratorKind::None;
  cfg.synth = {"three-class-waves", 60, 16, 0.1};
  cfg.seed = 0;
  cfg.epochs = 2;
  cfg.batch_size = 16;
  cfg.val_interval = 1;
  cfg.gen_threshold = 40;
  cfg.optim.lr = 3e-4;
  cfg.generator_cfg.latent_dim = 8;
  cfg.generator_cfg.hidden_channels = 4;
  cfg.generator_cfg.diff_steps = 4;
  cfg.generator_cfg.batch_size = 16;
  return cfg;
}

}  // namespace

TEST_CASE("config json round-trips") {
  ExperimentConfig cfg = tiny_config();
  cfg.ptm = PtmKind::TimeCLR;
  cfg.generator = GeneratorKind::RandomWalk;
  cfg.contrast.temperature = 0.07;
  cfg.contrast.augment.mask_frac = 0.25;
  cfg.onecycle.div_factor = 10;
  const auto j = config_to_json(cfg);
  const auto back = config_to_json(config_from_json(j));
  CHECK(j.dump() == back.dump());
}

TEST_CASE("select_checkpoint") {
  CHECK(select_checkpoint({{1, 0.5}, {2, 0.9}, {3, 0.7}}) == 2);
  CHECK(select_checkpoint({{1, 0.8}, {2, 0.8}}) == 1);  // tie -> earliest
  CHECK(select_checkpoint({{5, 0.4}}) == 5);
  CHECK_THROWS_AS(select_checkpoint({}), UsageError);
}

TEST_CASE("no-ptm experiments skip stage 1") {
  ExperimentConfig cfg = tiny_config();
  ExperimentRecord rec = run_experiment(cfg);
  CHECK(rec.pretrain_losses.empty());
  CHECK(rec.n_gen == 0);
  CHECK(rec.pretrain_size == 30);  // 50% of 60
  CHECK(rec.test_accuracy >= 0.0);
  CHECK(rec.test_accuracy <= 1.0);
  CHECK(!rec.finetune_losses.empty());
  CHECK(rec.method == "resnet+none+ng");
}

TEST_CASE("generator experiments record the generation budget") {
  ExperimentConfig cfg = tiny_config();
  cfg.ptm = PtmKind::TimeCLR;
  cfg.generator = GeneratorKind::RandomWalk;
  cfg.gen_threshold = 41;  // above the 30-sample pretraining split
  ExperimentRecord rec = run_experiment(cfg);
  CHECK(rec.pretrain_size == 30);
  CHECK(rec.n_gen == 41);  // threshold wins below it
  CHECK(rec.pretrain_losses.size() == 2);
  for (double l : rec.pretrain_losses) CHECK(std::isfinite(l));
}

TEST_CASE("a sub-threshold pretraining split records the archive budget") {
  // 1000 samples -> 500 in the pretraining split, below the univariate
  // archive threshold, so 1494 series are generated.
  ExperimentConfig cfg = tiny_config();
  cfg.ptm = PtmKind::TimeCLR;
  cfg.generator = GeneratorKind::RandomWalk;
  cfg.synth = {"two-class-freq", 1000, 16, 0.2};
  cfg.epochs = 1;
  cfg.batch_size = 64;
  cfg.gen_threshold = kUcrGenThreshold;
  ExperimentRecord rec = run_experiment(cfg);
  CHECK(rec.pretrain_size == 500);
  CHECK(rec.n_gen == 1494);
}

TEST_CASE("identical config and seed give bit-identical records") {
  ExperimentConfig cfg = tiny_config();
  cfg.ptm = PtmKind::MixingUp;
  cfg.generator = GeneratorKind::Sinusoidal;
  cfg.gen_threshold = 35;
  ExperimentRecord a = run_experiment(cfg);
  ExperimentRecord b = run_experiment(cfg);
  CHECK(a.to_json().dump() == b.to_json().dump());
}

TEST_CASE("validation cadence and checkpoint selection wiring") {
  ExperimentConfig cfg = tiny_config();
  cfg.epochs = 4;
  cfg.val_interval = 2;
  ExperimentRecord rec = run_experiment(cfg);
  REQUIRE(rec.validation.size() == 2);  // epochs 2 and 4
  CHECK(rec.validation[0].epoch == 2);
  CHECK(rec.validation[1].epoch == 4);
  double best = -1;
  for (const auto& p : rec.validation) best = std::max(best, p.accuracy);
  // The selected checkpoint's accuracy equals the recorded maximum.
  for (const auto& p : rec.validation)
    if (p.epoch == rec.selected_epoch) CHECK(p.accuracy == best);
}

TEST_CASE("training loss decreases on a separable toy set") {
  ExperimentConfig cfg = tiny_config();
  cfg.synth = {"three-class-waves", 60, 16, 0.0};
  cfg.epochs = 8;
  cfg.seed = 0;
  ExperimentRecord rec = run_experiment(cfg);
  REQUIRE(rec.finetune_losses.size() == 8);
  CHECK(rec.finetune_losses.back() < rec.finetune_losses.front());
}

TEST_CASE("1nn baselines produce records") {
  ExperimentConfig cfg = tiny_config();
  cfg.baseline = "1nn_ed";
  ExperimentRecord ed = run_experiment(cfg);
  CHECK(ed.method == "1nn_ed");
  CHECK(ed.test_accuracy >= 0.0);
  cfg.baseline = "1nn_dtw";
  ExperimentRecord dtw = run_experiment(cfg);
  CHECK(dtw.method == "1nn_dtw");
  // Noise-free waves are easy for both distances at this scale.
  CHECK(dtw.test_accuracy >= 1.0 / 3.0);
}

TEST_CASE("pretrained checkpoints restore the exact model") {
  ExperimentConfig cfg = tiny_config();
  cfg.ptm = PtmKind::TimeCLR;
  cfg.generator = GeneratorKind::None;
  PretrainedModel pm = pretrain_stage(cfg);
  Checkpoint ck = pretrained_checkpoint(pm);

  ExperimentConfig restored_cfg;
  ContrastiveModel restored = model_from_checkpoint(ck, restored_cfg);
  CHECK(config_to_json(restored_cfg).dump() == config_to_json(cfg).dump());

  Rng rng(3);
  std::vector<Series> probe;
  Series s(1, 16);
  for (auto& v : s.values) v = rng.normal();
  probe.push_back(s);
  NoGradGuard ng;
  Tensor a = pm.model.projector.forward(pm.model.backbone->forward(batch_to_tensor(probe)));
  Tensor b = restored.projector.forward(restored.backbone->forward(batch_to_tensor(probe)));
  CHECK(a.vec() == b.vec());
}

TEST_CASE("run_experiments writes resumable records") {
  ExperimentConfig cfg = tiny_config();
  const fs::path out = fs::temp_directory_path() / "tsbench_runner_test";
  fs::remove_all(out);

  std::vector<ExperimentConfig> configs;
  configs.push_back(cfg);
  cfg.seed = 1;
  configs.push_back(cfg);
  cfg.baseline = "1nn_ed";
  configs.push_back(cfg);

  auto paths = run_experiments(configs, out.string(), 2);
  REQUIRE(paths.size() == 3);
  for (const auto& p : paths) CHECK(fs::exists(p));

  // Second invocation resumes: file contents stay identical.
  std::vector<std::string> before;
  for (const auto& p : paths) {
    std::ifstream is(p);
    before.emplace_back(std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>{});
  }
  auto paths2 = run_experiments(configs, out.string(), 1);
  for (std::size_t i = 0; i < paths.size(); ++i) {
    std::ifstream is(paths2[i]);
    std::string after(std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>{});
    CHECK(after == before[i]);
  }
}

TEST_CASE("every backbone and ptm combination runs end to end") {
  for (BackboneKind backbone : {BackboneKind::ResNet, BackboneKind::Transformer}) {
    for (PtmKind ptm :
         {PtmKind::TimeCLR, PtmKind::Ts2Vec, PtmKind::MixingUp, PtmKind::TfC}) {
      ExperimentConfig cfg = tiny_config();
      cfg.backbone = backbone;
      cfg.ptm = ptm;
      cfg.generator = GeneratorKind::MultivariateGaussian;
      cfg.epochs = 1;
      cfg.batch_size = 8;
      cfg.gen_threshold = 24;
      INFO(backbone_kind_name(backbone), "+", ptm_kind_name(ptm));
      ExperimentRecord rec = run_experiment(cfg);
      // 30 pretraining samples exceed the 24-series threshold.
      CHECK(rec.n_gen == 30);
      REQUIRE(rec.pretrain_losses.size() == 1);
      CHECK(std::isfinite(rec.pretrain_losses[0]));
      CHECK(rec.test_accuracy >= 0.0);
      CHECK(rec.test_accuracy <= 1.0);
    }
  }
}

TEST_CASE("test split scoring") {
  std::vector<LabeledSeries> items;
  for (int i = 0; i < 6; ++i) {
    LabeledSeries it;
    it.label = i % 3;
    it.series = Series(1, 4);
    items.push_back(it);
  }
  TestSplit split(items);
  CHECK(split.score({0, 1, 2, 0, 1, 2}) == 1.0);           // all correct
  CHECK(split.score({0, 0, 0, 0, 0, 0}) == doctest::Approx(1.0 / 3));  // constant predictor
  CHECK(split.score({0, 1, 2, 0, 1, 0}) == doctest::Approx(5.0 / 6));  // hand scan
  CHECK_THROWS_AS(split.score({0, 1}), UsageError);
  CHECK_THROWS_AS(TestSplit{}.score({}), UsageError);
}
