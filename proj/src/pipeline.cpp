#include "tsbench/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <thread>

#include "tsbench/errors.hpp"

namespace tsbench {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Config (de)serialization
// ---------------------------------------------------------------------------

std::string ExperimentConfig::method_name() const {
  if (!baseline.empty()) return baseline;
  return backbone_kind_name(backbone) + "+" + ptm_kind_name(ptm) + "+" +
         generator_kind_name(generator);
}

std::string ExperimentConfig::dataset_id() const {
  if (!dataset_path.empty()) return fs::path(dataset_path).filename().string();
  return synth.name + "-n" + std::to_string(synth.n) + "-L" +
         std::to_string(synth.length);
}

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["backbone"] = backbone_kind_name(c.backbone);
  j["ptm"] = ptm_kind_name(c.ptm);
  j["generator"] = generator_kind_name(c.generator);
  j["baseline"] = c.baseline;
  j["dataset"]["path"] = c.dataset_path;
  j["dataset"]["synth"]["name"] = c.synth.name;
  j["dataset"]["synth"]["n"] = c.synth.n;
  j["dataset"]["synth"]["length"] = c.synth.length;
  j["dataset"]["synth"]["noise_sigma"] = c.synth.noise_sigma;
  j["seed"] = c.seed;
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["pretrain_epochs"] = c.pretrain_epochs;
  j["finetune_epochs"] = c.finetune_epochs;
  j["generator_epochs"] = c.generator_epochs;
  j["val_interval"] = c.val_interval;
  j["gen_threshold"] = c.gen_threshold;
  j["normalize"] = c.normalize;
  j["optim"]["lr"] = c.optim.lr;
  j["optim"]["beta1"] = c.optim.beta1;
  j["optim"]["beta2"] = c.optim.beta2;
  j["optim"]["eps"] = c.optim.eps;
  j["optim"]["weight_decay"] = c.optim.weight_decay;
  j["onecycle"]["warmup_frac"] = c.onecycle.warmup_frac;
  j["onecycle"]["div_factor"] = c.onecycle.div_factor;
  j["onecycle"]["final_div_factor"] = c.onecycle.final_div_factor;
  j["contrast"]["temperature"] = c.contrast.temperature;
  j["contrast"]["mixup_alpha"] = c.contrast.mixup_alpha;
  j["contrast"]["tfc_weight_time"] = c.contrast.tfc_weight_time;
  j["contrast"]["tfc_weight_freq"] = c.contrast.tfc_weight_freq;
  j["contrast"]["tfc_weight_cross"] = c.contrast.tfc_weight_cross;
  j["contrast"]["tfc_jitter_sigma"] = c.contrast.tfc_jitter_sigma;
  const AugmentParams& a = c.contrast.augment;
  json ja;
  ja["jitter_sigma"] = a.jitter_sigma;
  ja["scale_min"] = a.scale_min;
  ja["scale_max"] = a.scale_max;
  ja["smooth_window"] = a.smooth_window;
  ja["warp_knots"] = a.warp_knots;
  ja["warp_sigma"] = a.warp_sigma;
  ja["shift_frac"] = a.shift_frac;
  ja["slope_max"] = a.slope_max;
  ja["spike_min"] = a.spike_min;
  ja["spike_max"] = a.spike_max;
  ja["step_max"] = a.step_max;
  ja["mask_frac"] = a.mask_frac;
  ja["crop_min"] = a.crop_min;
  ja["crop_max"] = a.crop_max;
  j["contrast"]["augment"] = ja;
  j["contrast"]["freq_augment"]["remove_frac"] = c.contrast.freq_augment.remove_frac;
  j["contrast"]["freq_augment"]["add_frac"] = c.contrast.freq_augment.add_frac;
  j["contrast"]["freq_augment"]["add_scale"] = c.contrast.freq_augment.add_scale;
  j["generator_cfg"]["latent_dim"] = c.generator_cfg.latent_dim;
  j["generator_cfg"]["hidden_channels"] = c.generator_cfg.hidden_channels;
  j["generator_cfg"]["diff_steps"] = c.generator_cfg.diff_steps;
  j["generator_cfg"]["diff_beta_min"] = c.generator_cfg.diff_beta_min;
  j["generator_cfg"]["diff_beta_max"] = c.generator_cfg.diff_beta_max;
  j["generator_cfg"]["beta"] = c.generator_cfg.beta;
  j["generator_cfg"]["batch_size"] = c.generator_cfg.batch_size;
  j["generator_cfg"]["lr"] = c.generator_cfg.lr;
  j["generator_cfg"]["gan_clip"] = c.generator_cfg.gan_clip;
  return j;
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  if (j.contains("backbone")) c.backbone = backbone_kind_from_name(j["backbone"]);
  if (j.contains("ptm")) c.ptm = ptm_kind_from_name(j["ptm"]);
  if (j.contains("generator")) c.generator = generator_kind_from_name(j["generator"]);
  c.baseline = j.value("baseline", c.baseline);
  if (j.contains("dataset")) {
    const json& d = j["dataset"];
    c.dataset_path = d.value("path", c.dataset_path);
    if (d.contains("synth")) {
      const json& s = d["synth"];
      c.synth.name = s.value("name", c.synth.name);
      c.synth.n = s.value("n", c.synth.n);
      c.synth.length = s.value("length", c.synth.length);
      c.synth.noise_sigma = s.value("noise_sigma", c.synth.noise_sigma);
    }
  }
  c.seed = j.value("seed", c.seed);
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.pretrain_epochs = j.value("pretrain_epochs", c.pretrain_epochs);
  c.finetune_epochs = j.value("finetune_epochs", c.finetune_epochs);
  c.generator_epochs = j.value("generator_epochs", c.generator_epochs);
  c.val_interval = j.value("val_interval", c.val_interval);
  c.gen_threshold = j.value("gen_threshold", c.gen_threshold);
  c.normalize = j.value("normalize", c.normalize);
  if (j.contains("optim")) {
    const json& o = j["optim"];
    c.optim.lr = o.value("lr", c.optim.lr);
    c.optim.beta1 = o.value("beta1", c.optim.beta1);
    c.optim.beta2 = o.value("beta2", c.optim.beta2);
    c.optim.eps = o.value("eps", c.optim.eps);
    c.optim.weight_decay = o.value("weight_decay", c.optim.weight_decay);
  }
  if (j.contains("onecycle")) {
    const json& o = j["onecycle"];
    c.onecycle.warmup_frac = o.value("warmup_frac", c.onecycle.warmup_frac);
    c.onecycle.div_factor = o.value("div_factor", c.onecycle.div_factor);
    c.onecycle.final_div_factor = o.value("final_div_factor", c.onecycle.final_div_factor);
  }
  if (j.contains("contrast")) {
    const json& o = j["contrast"];
    c.contrast.temperature = o.value("temperature", c.contrast.temperature);
    c.contrast.mixup_alpha = o.value("mixup_alpha", c.contrast.mixup_alpha);
    c.contrast.tfc_weight_time = o.value("tfc_weight_time", c.contrast.tfc_weight_time);
    c.contrast.tfc_weight_freq = o.value("tfc_weight_freq", c.contrast.tfc_weight_freq);
    c.contrast.tfc_weight_cross = o.value("tfc_weight_cross", c.contrast.tfc_weight_cross);
    c.contrast.tfc_jitter_sigma = o.value("tfc_jitter_sigma", c.contrast.tfc_jitter_sigma);
    if (o.contains("augment")) {
      const json& ja = o["augment"];
      AugmentParams& a = c.contrast.augment;
      a.jitter_sigma = ja.value("jitter_sigma", a.jitter_sigma);
      a.scale_min = ja.value("scale_min", a.scale_min);
      a.scale_max = ja.value("scale_max", a.scale_max);
      a.smooth_window = ja.value("smooth_window", a.smooth_window);
      a.warp_knots = ja.value("warp_knots", a.warp_knots);
      a.warp_sigma = ja.value("warp_sigma", a.warp_sigma);
      a.shift_frac = ja.value("shift_frac", a.shift_frac);
      a.slope_max = ja.value("slope_max", a.slope_max);
      a.spike_min = ja.value("spike_min", a.spike_min);
      a.spike_max = ja.value("spike_max", a.spike_max);
      a.step_max = ja.value("step_max", a.step_max);
      a.mask_frac = ja.value("mask_frac", a.mask_frac);
      a.crop_min = ja.value("crop_min", a.crop_min);
      a.crop_max = ja.value("crop_max", a.crop_max);
    }
    if (o.contains("freq_augment")) {
      const json& jf = o["freq_augment"];
      c.contrast.freq_augment.remove_frac =
          jf.value("remove_frac", c.contrast.freq_augment.remove_frac);
      c.contrast.freq_augment.add_frac =
          jf.value("add_frac", c.contrast.freq_augment.add_frac);
      c.contrast.freq_augment.add_scale =
          jf.value("add_scale", c.contrast.freq_augment.add_scale);
    }
  }
  if (j.contains("generator_cfg")) {
    const json& o = j["generator_cfg"];
    c.generator_cfg.latent_dim = o.value("latent_dim", c.generator_cfg.latent_dim);
    c.generator_cfg.hidden_channels =
        o.value("hidden_channels", c.generator_cfg.hidden_channels);
    c.generator_cfg.diff_steps = o.value("diff_steps", c.generator_cfg.diff_steps);
    c.generator_cfg.diff_beta_min = o.value("diff_beta_min", c.generator_cfg.diff_beta_min);
    c.generator_cfg.diff_beta_max = o.value("diff_beta_max", c.generator_cfg.diff_beta_max);
    c.generator_cfg.beta = o.value("beta", c.generator_cfg.beta);
    c.generator_cfg.batch_size = o.value("batch_size", c.generator_cfg.batch_size);
    c.generator_cfg.lr = o.value("lr", c.generator_cfg.lr);
    c.generator_cfg.gan_clip = o.value("gan_clip", c.generator_cfg.gan_clip);
  }
  return c;
}

// ---------------------------------------------------------------------------
// Records
// ---------------------------------------------------------------------------

json ExperimentRecord::to_json() const {
  json j;
  j["config"] = config_snapshot;
  j["method"] = method;
  j["dataset"] = dataset;
  j["pretrain_size"] = pretrain_size;
  j["n_gen"] = n_gen;
  j["pretrain_losses"] = pretrain_losses;
  j["finetune_losses"] = finetune_losses;
  json v = json::array();
  for (const auto& p : validation) v.push_back({{"epoch", p.epoch}, {"accuracy", p.accuracy}});
  j["validation"] = v;
  j["selected_epoch"] = selected_epoch;
  j["test_accuracy"] = test_accuracy;
  return j;
}

ExperimentRecord ExperimentRecord::from_json(const json& j) {
  ExperimentRecord r;
  r.config_snapshot = j.value("config", json::object());
  r.method = j.value("method", "");
  r.dataset = j.value("dataset", "");
  r.pretrain_size = j.value("pretrain_size", 0);
  r.n_gen = j.value("n_gen", 0);
  r.pretrain_losses = j.value("pretrain_losses", std::vector<double>{});
  r.finetune_losses = j.value("finetune_losses", std::vector<double>{});
  for (const auto& p : j.value("validation", json::array()))
    r.validation.push_back({p.value("epoch", std::int64_t{0}), p.value("accuracy", 0.0)});
  r.selected_epoch = j.value("selected_epoch", 0);
  r.test_accuracy = j.value("test_accuracy", 0.0);
  return r;
}

std::int64_t select_checkpoint(const std::vector<ValidationPoint>& points) {
  if (points.empty()) throw UsageError("select_checkpoint: no checkpoints");
  std::size_t best = 0;
  for (std::size_t i = 1; i < points.size(); ++i)
    if (points[i].accuracy > points[best].accuracy) best = i;
  return points[best].epoch;
}

// ---------------------------------------------------------------------------
// Stage helpers
// ---------------------------------------------------------------------------

namespace {

NormalizeMode normalize_mode(const std::string& s) {
  if (s == "per_series") return NormalizeMode::PerSeries;
  if (s == "off") return NormalizeMode::Off;
  throw UsageError("unknown normalize mode '" + s + "'");
}

Dataset load_or_synth(const ExperimentConfig& cfg) {
  Dataset ds;
  if (!cfg.dataset_path.empty()) {
    ds = load_dataset(cfg.dataset_path);
  } else {
    Rng rng = Rng::derive(cfg.seed, "synth-data");
    ds = synth_dataset(cfg.synth, rng);
  }
  // Variable-length archives are unified to the median length up front so
  // batches stay rectangular and generators see one shape.
  if (ds.meta.length == 0 && !ds.items.empty()) {
    std::vector<Series> all;
    for (const auto& it : ds.items) all.push_back(it.series);
    const std::int64_t target = median_length(all);
    for (auto& it : ds.items) it.series = resample_series(it.series, target);
    ds.meta.length = target;
  }
  return ds;
}

std::int64_t effective(std::int64_t stage_epochs, std::int64_t fallback) {
  return stage_epochs > 0 ? stage_epochs : fallback;
}

// Shuffled batch views over `data`; batches smaller than min_batch are dropped.
template <typename T>
std::vector<std::vector<T>> shuffled_batches(const std::vector<T>& data,
                                             std::int64_t batch_size,
                                             std::int64_t min_batch, Rng& rng) {
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  std::vector<std::vector<T>> out;
  for (std::size_t start = 0; start < data.size();
       start += static_cast<std::size_t>(batch_size)) {
    const std::size_t len =
        std::min<std::size_t>(static_cast<std::size_t>(batch_size), data.size() - start);
    if (static_cast<std::int64_t>(len) < min_batch) continue;
    std::vector<T> batch;
    batch.reserve(len);
    for (std::size_t i = 0; i < len; ++i) batch.push_back(data[order[start + i]]);
    out.push_back(std::move(batch));
  }
  return out;
}

std::vector<int> predict_batch(const ContrastiveModel& model, const Classifier& classifier,
                               std::span<const Series> series, std::int64_t batch_size) {
  NoGradGuard ng;
  std::vector<int> preds;
  preds.reserve(series.size());
  for (std::size_t start = 0; start < series.size();
       start += static_cast<std::size_t>(batch_size)) {
    const std::size_t len =
        std::min<std::size_t>(static_cast<std::size_t>(batch_size), series.size() - start);
    Tensor logits = classify_logits(model, classifier,
                                    batch_to_tensor({series.data() + start, len}));
    const std::int64_t k = logits.dim(1);
    for (std::size_t i = 0; i < len; ++i) {
      const double* row = logits.data() + static_cast<std::int64_t>(i) * k;
      int best = 0;
      for (std::int64_t c = 1; c < k; ++c)
        if (row[c] > row[best]) best = static_cast<int>(c);
      preds.push_back(best);
    }
  }
  return preds;
}

double labeled_accuracy(const ContrastiveModel& model, const Classifier& classifier,
                        std::span<const LabeledSeries> items, std::int64_t batch_size) {
  std::vector<Series> series;
  series.reserve(items.size());
  for (const auto& it : items) series.push_back(it.series);
  const auto preds = predict_batch(model, classifier, series, batch_size);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < items.size(); ++i)
    if (preds[i] == items[i].label) ++correct;
  return items.empty() ? 0.0 : static_cast<double>(correct) / items.size();
}

ExperimentRecord run_1nn_baseline(const ExperimentConfig& cfg) {
  Dataset ds = load_or_synth(cfg);
  SplitBundle bundle = split(ds, cfg.seed);
  znormalize(bundle, normalize_mode(cfg.normalize));
  const DistanceKind kind = cfg.baseline == "1nn_ed" ? DistanceKind::Euclidean
                            : cfg.baseline == "1nn_dtw"
                                ? DistanceKind::Dtw
                                : throw UsageError("unknown baseline '" + cfg.baseline + "'");
  ExperimentRecord rec;
  rec.config_snapshot = config_to_json(cfg);
  rec.method = cfg.method_name();
  rec.dataset = cfg.dataset_id();
  rec.pretrain_size = static_cast<std::int64_t>(bundle.pretrain.size());
  rec.n_gen = 0;
  double val_correct = 0;
  for (const auto& it : bundle.validation)
    if (one_nn_classify(bundle.train, it.series, kind) == it.label) val_correct += 1.0;
  rec.validation.push_back(
      {0, bundle.validation.empty() ? 0.0 : val_correct / bundle.validation.size()});
  rec.selected_epoch = 0;
  std::vector<int> preds;
  for (std::size_t i = 0; i < bundle.test.size(); ++i)
    preds.push_back(one_nn_classify(bundle.train, bundle.test.series(i), kind));
  rec.test_accuracy = bundle.test.score(preds);
  return rec;
}

}  // namespace

// ---------------------------------------------------------------------------
// Stage 1: pretraining
// ---------------------------------------------------------------------------

PretrainedModel pretrain_stage(const ExperimentConfig& cfg) {
  Dataset ds = load_or_synth(cfg);
  SplitBundle bundle = split(ds, cfg.seed);
  znormalize(bundle, normalize_mode(cfg.normalize));

  Rng model_rng = Rng::derive(cfg.seed, "model-init");
  PretrainedModel out;
  out.model = make_contrastive_model(cfg.ptm, cfg.backbone, ds.meta.channels, model_rng);
  out.config = cfg;
  out.pretrain_size = static_cast<std::int64_t>(bundle.pretrain.size());
  if (cfg.ptm == PtmKind::None) return out;  // stage 1 skipped entirely

  std::vector<Series> data;
  if (cfg.generator == GeneratorKind::None) {
    data = bundle.pretrain;
  } else {
    GeneratorConfig gcfg = cfg.generator_cfg;
    gcfg.epochs = effective(cfg.generator_epochs, cfg.epochs);
    Rng gen_rng = Rng::derive(cfg.seed, "generator");
    GeneratorModel gm = fit_generator(cfg.generator, bundle.pretrain, gcfg, gen_rng);
    out.n_gen = n_gen_policy(out.pretrain_size, cfg.gen_threshold);
    data = sample_generator(gm, out.n_gen, gen_rng);
    if (normalize_mode(cfg.normalize) == NormalizeMode::PerSeries)
      for (auto& s : data) znormalize(s);
  }

  const std::int64_t epochs = effective(cfg.pretrain_epochs, cfg.epochs);
  const std::int64_t steps_per_epoch = std::max<std::int64_t>(
      1, static_cast<std::int64_t>(data.size()) / cfg.batch_size);
  OneCycleConfig sched = cfg.onecycle;
  sched.max_lr = cfg.optim.lr;
  sched.total_steps = std::max<std::int64_t>(1, epochs * steps_per_epoch);

  AdamW opt(out.model.params(), cfg.optim);
  Rng shuffle_rng = Rng::derive(cfg.seed, "pretrain-shuffle");
  Rng aug_rng = Rng::derive(cfg.seed, "pretrain-aug");
  std::int64_t step = 0;
  for (std::int64_t epoch = 0; epoch < epochs; ++epoch) {
    double epoch_loss = 0.0;
    std::int64_t n_batches = 0;
    for (const auto& batch : shuffled_batches(data, cfg.batch_size, 2, shuffle_rng)) {
      opt.zero_grad();
      Tensor loss = pretrain_step(batch, out.model, cfg.contrast, aug_rng);
      epoch_loss += loss.item();
      ++n_batches;
      loss.backward();
      const std::int64_t s = std::min(step, sched.total_steps - 1);
      opt.step(onecycle_lr(s, sched));
      ++step;
    }
    out.losses.push_back(n_batches ? epoch_loss / static_cast<double>(n_batches) : 0.0);
  }
  return out;
}

Checkpoint pretrained_checkpoint(const PretrainedModel& pm) {
  json meta;
  meta["config"] = config_to_json(pm.config);
  meta["pretrain_size"] = pm.pretrain_size;
  meta["n_gen"] = pm.n_gen;
  meta["pretrain_losses"] = pm.losses;
  return checkpoint_from_params(pm.model.params(), meta.dump());
}

ContrastiveModel model_from_checkpoint(const Checkpoint& ck, ExperimentConfig& cfg_out) {
  json meta;
  try {
    meta = json::parse(ck.meta);
  } catch (const json::exception& e) {
    throw ParseError(std::string("model checkpoint meta: ") + e.what(), 1);
  }
  cfg_out = config_from_json(meta.at("config"));
  Dataset ds = load_or_synth(cfg_out);
  Rng model_rng = Rng::derive(cfg_out.seed, "model-init");
  ContrastiveModel model =
      make_contrastive_model(cfg_out.ptm, cfg_out.backbone, ds.meta.channels, model_rng);
  ParamList params = model.params();
  restore_params(params, ck);
  return model;
}

// ---------------------------------------------------------------------------
// Stages 2-4: fine-tune, validate, test
// ---------------------------------------------------------------------------

ExperimentRecord finetune_and_evaluate(ContrastiveModel& model, const ExperimentConfig& cfg,
                                       std::vector<double> pretrain_losses,
                                       std::int64_t pretrain_size, std::int64_t n_gen) {
  Dataset ds = load_or_synth(cfg);
  SplitBundle bundle = split(ds, cfg.seed);
  znormalize(bundle, normalize_mode(cfg.normalize));
  if (bundle.n_classes < 2)
    throw UsageError("fine-tune: dataset needs at least 2 classes");

  Rng cls_rng = Rng::derive(cfg.seed, "classifier-init");
  Classifier classifier(model.projection_dim(), bundle.n_classes, cls_rng);

  ParamList trainable = model.params();
  trainable.extend("classifier.", classifier.params(""));
  AdamW opt(trainable, cfg.optim);

  const std::int64_t epochs = effective(cfg.finetune_epochs, cfg.epochs);
  const std::int64_t steps_per_epoch = std::max<std::int64_t>(
      1,
      (static_cast<std::int64_t>(bundle.train.size()) + cfg.batch_size - 1) / cfg.batch_size);
  OneCycleConfig sched = cfg.onecycle;
  sched.max_lr = cfg.optim.lr;
  sched.total_steps = std::max<std::int64_t>(1, epochs * steps_per_epoch);

  ExperimentRecord rec;
  rec.config_snapshot = config_to_json(cfg);
  rec.method = cfg.method_name();
  rec.dataset = cfg.dataset_id();
  rec.pretrain_size = pretrain_size;
  rec.n_gen = n_gen;
  rec.pretrain_losses = std::move(pretrain_losses);

  Rng shuffle_rng = Rng::derive(cfg.seed, "finetune-shuffle");
  std::vector<std::pair<std::int64_t, Checkpoint>> checkpoints;
  std::int64_t step = 0;
  for (std::int64_t epoch = 1; epoch <= epochs; ++epoch) {
    double epoch_loss = 0.0;
    std::int64_t n_batches = 0;
    for (const auto& batch : shuffled_batches(bundle.train, cfg.batch_size, 1, shuffle_rng)) {
      std::vector<Series> series;
      std::vector<std::int64_t> labels;
      for (const auto& it : batch) {
        series.push_back(it.series);
        labels.push_back(it.label);
      }
      opt.zero_grad();
      Tensor loss = cross_entropy(classify_logits(model, classifier, batch_to_tensor(series)),
                                  labels);
      epoch_loss += loss.item();
      ++n_batches;
      loss.backward();
      const std::int64_t s = std::min(step, sched.total_steps - 1);
      opt.step(onecycle_lr(s, sched));
      ++step;
    }
    rec.finetune_losses.push_back(n_batches ? epoch_loss / n_batches : 0.0);
    if (epoch % cfg.val_interval == 0 || epoch == epochs) {
      const double acc = labeled_accuracy(model, classifier, bundle.validation, cfg.batch_size);
      rec.validation.push_back({epoch, acc});
      checkpoints.emplace_back(epoch, checkpoint_from_params(trainable, ""));
    }
  }

  rec.selected_epoch = select_checkpoint(rec.validation);
  for (auto& [epoch, ck] : checkpoints)
    if (epoch == rec.selected_epoch) restore_params(trainable, ck);

  // The single test-set read of the whole experiment.
  std::vector<Series> test_series;
  for (std::size_t i = 0; i < bundle.test.size(); ++i)
    test_series.push_back(bundle.test.series(i));
  const auto preds = predict_batch(model, classifier, test_series, cfg.batch_size);
  rec.test_accuracy = bundle.test.score(preds);
  return rec;
}

ExperimentRecord run_experiment(const ExperimentConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentRecord rec;
  if (!cfg.baseline.empty()) {
    rec = run_1nn_baseline(cfg);
  } else {
    PretrainedModel pm = pretrain_stage(cfg);
    rec = finetune_and_evaluate(pm.model, cfg, std::move(pm.losses), pm.pretrain_size,
                                pm.n_gen);
  }
  rec.wall_time_sec =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

// ---------------------------------------------------------------------------
// Batch runner
// ---------------------------------------------------------------------------

std::string config_hash(const ExperimentConfig& cfg) {
  const std::string s = config_to_json(cfg).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

std::vector<std::string> run_experiments(const std::vector<ExperimentConfig>& configs,
                                         const std::string& out_dir, int workers) {
  const fs::path records_dir = fs::path(out_dir) / "records";
  fs::create_directories(records_dir);
  std::vector<std::string> paths(configs.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= configs.size()) return;
      const ExperimentConfig& cfg = configs[i];
      const fs::path path =
          records_dir / (cfg.method_name() + "__" + cfg.dataset_id() + "__" +
                         config_hash(cfg) + ".json");
      paths[i] = path.string();
      if (fs::exists(path)) continue;  // resumable: already done
      ExperimentRecord rec = run_experiment(cfg);
      const fs::path tmp = path.string() + ".tmp";
      {
        std::ofstream os(tmp, std::ios::trunc);
        os << rec.to_json().dump(2) << '\n';
        if (!os) throw IoError("cannot write record " + path.string());
      }
      fs::rename(tmp, path);  // atomic publish
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  return paths;
}

}  // namespace tsbench
