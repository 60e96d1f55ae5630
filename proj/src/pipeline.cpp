#include "cavparse/pipeline.hpp"

#include <spdlog/spdlog.h>

#include <chrono>
#include <cstdio>

#include "cavparse/parallel.hpp"
#include "cavparse/random.hpp"

namespace cavparse::pipeline {
namespace {

class StageTimer {
 public:
  explicit StageTimer(std::vector<std::pair<std::string, double>>& sink) : sink_(sink) {}
  void mark(const std::string& stage) {
    const auto now = std::chrono::steady_clock::now();
    const double seconds = std::chrono::duration<double>(now - last_).count();
    sink_.emplace_back(stage, seconds);
    spdlog::debug("stage {:<12} {:8.3f} s", stage, seconds);
    last_ = now;
  }

 private:
  std::vector<std::pair<std::string, double>>& sink_;
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

void validate(const PipelineConfig& cfg) {
  if (cfg.slic.target_count < 1) throw InvalidInput("superpixel target count must be >= 1");
  if (cfg.slic.iterations < 1) throw InvalidInput("superpixel iterations must be >= 1");
  if (!(cfg.slic.compactness >= 0)) throw InvalidInput("superpixel compactness must be >= 0");
  if (cfg.grid_side < 1) throw InvalidInput("block grid side must be >= 1");
  if (!(cfg.ocp_alpha >= 0)) throw InvalidInput("OCP smoothing alpha must be >= 0");
  if (cfg.fusion_hidden < 0) throw InvalidInput("integration hidden size must be >= 0");
  if (!(cfg.holdout_fraction >= 0.0 && cfg.holdout_fraction < 1.0)) {
    throw InvalidInput("holdout fraction must lie in [0, 1)");
  }
  if (!(cfg.warm_start_gain > 0.0)) throw InvalidInput("warm start gain must be positive");
  if (cfg.classifier.epochs < 0 || !(cfg.classifier.learning_rate > 0) || cfg.classifier.hidden < 0) {
    throw InvalidInput("invalid classifier training configuration");
  }
  ganet::validate(cfg.ga);
}

ImageAnalysis analyze_image(const RasterImage& image, const superpixel::SlicParams& slic, int grid_side) {
  ImageAnalysis a;
  a.spmap = superpixel::slic_segment(image, slic);
  a.blocks = superpixel::assign_blocks(a.spmap, grid_side);
  a.features = visual::extract_features(image, a.spmap);
  return a;
}

TrainReport train_model(const data::Dataset& train, const PipelineConfig& cfg, std::string* stage) {
  std::string local_stage;
  std::string& current = stage ? *stage : local_stage;
  current = "config";
  validate(cfg);
  data::validate(train);
  if (train.items.empty()) throw InvalidInput("training set is empty");
  const int m = train.class_count;
  const int hidden = cfg.fusion_hidden > 0 ? cfg.fusion_hidden : 2 * m;
  const std::size_t n = train.size();

  TrainReport report;
  StageTimer timer(report.stage_seconds);

  std::vector<std::size_t> layer1_idx, fusion_idx;
  if (cfg.holdout_fraction > 0 && n >= 2) {
    std::tie(layer1_idx, fusion_idx) = data::split_indices(n, 1.0 - cfg.holdout_fraction, derive_seed(cfg.seed, 1));
  }
  if (layer1_idx.empty() || fusion_idx.empty()) {
    layer1_idx.resize(n);
    for (std::size_t i = 0; i < n; ++i) layer1_idx[i] = i;
    fusion_idx = layer1_idx;
  }
  report.layer1_images = layer1_idx.size();
  report.fusion_images = fusion_idx.size();

  superpixel::SlicParams slic = cfg.slic;
  slic.seed = cfg.seed;
  current = "segment";
  std::vector<ImageAnalysis> analyses(n);
  std::vector<std::vector<int>> truth(n);
  parallel_for(n, cfg.workers, [&](std::size_t i) {
    analyses[i] = analyze_image(train.items[i].image, slic, cfg.grid_side);
    truth[i] = context::majority_classes(analyses[i].spmap, train.items[i].labels, m);
  });
  timer.mark("segment");

  current = "visual";
  visual::FeatureMatrix stacked;
  stacked.dim = visual::feature::kDim;
  std::vector<int> stacked_labels;
  for (std::size_t i : layer1_idx) {
    const auto& a = analyses[i];
    for (int s = 0; s < a.spmap.count; ++s) {
      if (truth[i][s] == context::kNoClass) continue;
      const auto row = a.features.row(s);
      stacked.data.insert(stacked.data.end(), row.begin(), row.end());
      stacked_labels.push_back(truth[i][s]);
      ++stacked.rows;
    }
  }
  if (stacked.rows == 0) throw InvalidInput("training set has no labelled superpixels");
  visual::TrainConfig tc = cfg.classifier;
  tc.seed = derive_seed(cfg.seed, 2);
  tc.workers = cfg.workers;
  visual::ClassifierBank bank = visual::train_classifier_bank(stacked, stacked_labels, m, tc);
  timer.mark("visual");

  current = "ocp";
  std::vector<context::OcpImage> ocp_images;
  ocp_images.reserve(n);
  for (std::size_t i = 0; i < n; ++i) ocp_images.push_back({analyses[i].spmap, analyses[i].blocks, truth[i]});
  context::OcpModel ocp = context::estimate_ocp(ocp_images, m, cfg.grid_side, cfg.ocp_alpha, cfg.workers);
  timer.mark("ocp");

  current = "context";
  std::vector<std::vector<fusion::FusionSample>> per_image(fusion_idx.size());
  parallel_for(fusion_idx.size(), cfg.workers, [&](std::size_t f) {
    const std::size_t i = fusion_idx[f];
    const auto& a = analyses[i];
    const auto p_vis = visual::predict_visual_all(bank, a.features);
    std::vector<int> predicted(a.spmap.count);
    for (int s = 0; s < a.spmap.count; ++s) predicted[s] = most_probable_class(p_vis[s]);
    const auto cav = context::compute_votes(predicted, a.spmap, a.blocks, ocp);
    for (int s = 0; s < a.spmap.count; ++s) {
      if (truth[i][s] == context::kNoClass) continue;
      per_image[f].push_back({p_vis[s], cav[s].v_local, cav[s].v_global, truth[i][s],
                              static_cast<double>(a.spmap.pixel_count[s])});
    }
  });
  std::vector<fusion::FusionSample> samples;
  for (auto& v : per_image) samples.insert(samples.end(), v.begin(), v.end());
  report.fusion_samples = samples.size();
  timer.mark("context");

  current = "integration";
  ganet::GaConfig ga = cfg.ga;
  ga.seed = derive_seed(cfg.seed, 3);
  ga.workers = cfg.workers;
  if (cfg.warm_start) {
    if (hidden >= m) {
      ga.initial_genomes = {fusion::pack_genome(fusion::pass_through_visual(m, hidden, cfg.fusion_mode, cfg.warm_start_gain))};
    } else {
      spdlog::warn("warm start needs at least {} hidden units, got {}; using random init", m, hidden);
    }
  }
  fusion::IntegrationResult integration = fusion::train_integration(samples, m, hidden, cfg.fusion_mode, ga);
  timer.mark("integration");

  bundle::ModelBundle& b = report.bundle;
  b.class_count = m;
  b.class_names = train.class_names;
  b.palette = data::default_palette(m);
  b.slic = slic;
  b.grid_side = cfg.grid_side;
  b.classifier = std::move(bank);
  b.ocp = std::move(ocp);
  b.integration = std::move(integration.net);
  b.ga_history = integration.ga.history;
  b.provenance["seed"] = std::to_string(cfg.seed);
  b.provenance["holdout_fraction"] = std::to_string(cfg.holdout_fraction);
  b.provenance["dataset_hash"] = hex64(data::dataset_hash(train));
  b.provenance["train_images"] = std::to_string(n);
  b.provenance["layer1_images"] = std::to_string(report.layer1_images);
  b.provenance["fusion_images"] = std::to_string(report.fusion_images);
  b.provenance["warm_start"] = cfg.warm_start ? "true" : "false";
  if (cfg.warm_start) b.provenance["warm_start_gain"] = std::to_string(cfg.warm_start_gain);
  b.provenance["ga_best_fitness"] = std::to_string(integration.ga.best.fitness);
  return report;
}

StageOutputs run_stages(const bundle::ModelBundle& model, const RasterImage& image) {
  StageOutputs out;
  out.analysis = analyze_image(image, model.slic, model.grid_side);
  const auto& a = out.analysis;
  out.p_vis = visual::predict_visual_all(model.classifier, a.features);
  out.visual_class.resize(a.spmap.count);
  for (int s = 0; s < a.spmap.count; ++s) out.visual_class[s] = most_probable_class(out.p_vis[s]);
  out.cav = context::compute_votes(out.visual_class, a.spmap, a.blocks, model.ocp);
  out.final_prob.resize(a.spmap.count);
  out.final_class.resize(a.spmap.count);
  for (int s = 0; s < a.spmap.count; ++s) {
    out.final_prob[s] = fusion::forward(model.integration, out.p_vis[s], out.cav[s].v_local, out.cav[s].v_global);
    out.final_class[s] = fusion::predict_label(model.integration, out.p_vis[s], out.cav[s].v_local, out.cav[s].v_global);
  }
  return out;
}

LabelMap paint(const superpixel::SuperpixelMap& spmap, const std::vector<int>& classes) {
  LabelMap out(spmap.width, spmap.height);
  for (std::size_t p = 0; p < out.size(); ++p) out[p] = static_cast<ClassId>(classes[spmap.assignment[p]]);
  return out;
}

RasterImage colorize(const LabelMap& labels, const std::vector<Rgb>& palette) {
  RasterImage out(labels.width(), labels.height());
  for (std::size_t p = 0; p < labels.size(); ++p) {
    out[p] = labels[p] < palette.size() ? palette[labels[p]] : Rgb{0, 0, 0};
  }
  return out;
}

EvalReport evaluate(const bundle::ModelBundle& model, const data::Dataset& ds, unsigned workers) {
  if (ds.class_count != model.class_count) {
    throw InvalidInput("dataset has " + std::to_string(ds.class_count) + " classes, bundle has " +
                       std::to_string(model.class_count));
  }
  std::vector<metrics::ConfusionMatrix> finals(ds.size(), metrics::ConfusionMatrix(model.class_count));
  std::vector<metrics::ConfusionMatrix> visuals(ds.size(), metrics::ConfusionMatrix(model.class_count));
  parallel_for(ds.size(), workers, [&](std::size_t i) {
    const auto stages = run_stages(model, ds.items[i].image);
    finals[i].accumulate(paint(stages.analysis.spmap, stages.final_class), ds.items[i].labels);
    visuals[i].accumulate(paint(stages.analysis.spmap, stages.visual_class), ds.items[i].labels);
  });
  EvalReport report{metrics::ConfusionMatrix(model.class_count), metrics::ConfusionMatrix(model.class_count)};
  for (std::size_t i = 0; i < ds.size(); ++i) {
    report.final_cm += finals[i];
    report.visual_cm += visuals[i];
  }
  return report;
}

}  // namespace cavparse::pipeline
