// cavparse: train, run and inspect the superpixel scene parser.

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "cavparse/bundle.hpp"
#include "cavparse/data.hpp"
#include "cavparse/error.hpp"
#include "cavparse/image_io.hpp"
#include "cavparse/metrics.hpp"
#include "cavparse/parallel.hpp"
#include "cavparse/pipeline.hpp"

namespace fs = std::filesystem;
using namespace cavparse;
using nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitInvalid = 2;

struct CommonOptions {
  unsigned workers = default_workers();
};

struct TrainOptions {
  fs::path data;
  fs::path out;
  fs::path ga_log;
  std::string classifier_preset = "desk";
  std::string features = "rgb-std-pos-size-hue8-grad8";
  std::optional<double> learning_rate;
  std::optional<int> epochs;
  std::optional<double> l2;
  std::optional<int> classifier_hidden;
  std::string mode = "triple";
  double split_fraction = 0.8;
  std::optional<std::uint64_t> split_seed;
  bool timestamp = false;
  pipeline::PipelineConfig cfg;
};

struct EvalOptions {
  fs::path bundle;
  fs::path data;
  fs::path out;
  std::string subset = "test";
  bool identity = false;
};

struct PredictOptions {
  fs::path bundle;
  fs::path out;
  std::vector<fs::path> images;
  bool dump_stages = false;
};

void configure_logging() {
  auto logger = spdlog::stderr_color_mt("cavparse");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  if (const char* level = std::getenv("CAVPARSE_LOG")) {
    spdlog::set_level(spdlog::level::from_str(level));
  } else {
    spdlog::set_level(spdlog::level::info);
  }
}

// Flat key=value file; '#' starts a comment. Each entry becomes `--key=value`.
std::vector<std::string> read_config_args(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open config file " + path.string());
  std::vector<std::string> args;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      if (b == std::string::npos) return std::string();
      return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InvalidInput(path.string() + ":" + std::to_string(line_no) + ": expected key=value");
    }
    args.push_back("--" + trim(line.substr(0, eq)) + "=" + trim(line.substr(eq + 1)));
  }
  return args;
}

// Splices `--config FILE` entries in front of the other subcommand arguments so
// that explicit flags, parsed later, win.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  for (std::size_t i = 1; i < args.size(); ++i) {
    std::string file;
    std::size_t consumed = 0;
    if (args[i] == "--config" && i + 1 < args.size()) {
      file = args[i + 1];
      consumed = 2;
    } else if (args[i].rfind("--config=", 0) == 0) {
      file = args[i].substr(9);
      consumed = 1;
    } else {
      continue;
    }
    args.erase(args.begin() + static_cast<long>(i), args.begin() + static_cast<long>(i + consumed));
    const auto extra = read_config_args(file);
    // Subcommand is the first non-option token.
    std::size_t at = 1;
    while (at < args.size() && args[at].rfind("-", 0) == 0) ++at;
    if (at < args.size()) ++at;
    args.insert(args.begin() + static_cast<long>(std::min(at, args.size())), extra.begin(), extra.end());
    break;
  }
  return args;
}

void add_slic_options(CLI::App* sub, superpixel::SlicParams& slic) {
  sub->add_option("--superpixels", slic.target_count, "Target number of superpixels K")->capture_default_str();
  sub->add_option("--compactness", slic.compactness, "SLIC compactness m")->capture_default_str();
  sub->add_option("--slic-iterations", slic.iterations, "SLIC k-means iterations")->capture_default_str();
}

// ---- synth ----

int cmd_synth(const data::SynthConfig& cfg, const fs::path& out, unsigned workers) {
  const auto ds = data::synth_generate(cfg, workers);
  data::write_dataset(ds, out);
  std::printf("wrote %zu images (%d classes) to %s\n", ds.size(), ds.class_count, out.string().c_str());
  return kExitOk;
}

// ---- train ----

void write_ga_log(const std::vector<ganet::GenerationStats>& history, std::ostream& os) {
  os << "generation,best,mean\n";
  char buf[96];
  for (const auto& g : history) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g\n", g.generation, g.best, g.mean);
    os << buf;
  }
}

int cmd_train(TrainOptions& opt, unsigned workers) {
  std::string stage = "load";
  try {
    if (opt.features != bundle::ModelBundle{}.feature_set) {
      throw InvalidInput("unknown feature set '" + opt.features + "'");
    }
    if (!(opt.split_fraction > 0 && opt.split_fraction <= 1)) {
      throw InvalidInput("split fraction must lie in (0, 1]");
    }
    auto& cfg = opt.cfg;
    cfg.workers = workers;
    cfg.classifier = visual::train_preset(opt.classifier_preset);
    if (opt.learning_rate) cfg.classifier.learning_rate = *opt.learning_rate;
    if (opt.epochs) cfg.classifier.epochs = *opt.epochs;
    if (opt.l2) cfg.classifier.l2 = *opt.l2;
    if (opt.classifier_hidden) cfg.classifier.hidden = *opt.classifier_hidden;
    cfg.fusion_mode = fusion::input_mode_from_string(opt.mode);
    pipeline::validate(cfg);

    const auto ds = data::load_dataset(opt.data, workers);
    if (ds.items.empty()) throw InvalidInput("dataset " + opt.data.string() + " has no images");
    const std::uint64_t split_seed = opt.split_seed.value_or(cfg.seed);
    data::Dataset train = ds;
    if (opt.split_fraction < 1) train = data::split(ds, opt.split_fraction, split_seed).first;
    spdlog::info("training on {} of {} images", train.size(), ds.size());

    auto report = pipeline::train_model(train, cfg, &stage);
    stage = "save";
    auto& b = report.bundle;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", opt.split_fraction);
    b.provenance["split_fraction"] = buf;
    b.provenance["split_seed"] = std::to_string(split_seed);
    b.provenance["source_images"] = std::to_string(ds.size());
    b.provenance["classifier_preset"] = opt.classifier_preset;
    if (opt.timestamp) {
      const std::time_t now = std::time(nullptr);
      std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
      b.provenance["timestamp"] = buf;
    }
    bundle::save_bundle(b, opt.out);
    if (!opt.ga_log.empty()) {
      std::ofstream os(opt.ga_log, std::ios::binary);
      if (!os) throw std::runtime_error("cannot write " + opt.ga_log.string());
      write_ga_log(b.ga_history, os);
    }
    for (const auto& [name, seconds] : report.stage_seconds) std::printf("stage %-12s %8.3f s\n", name.c_str(), seconds);
    std::printf("layer-1 images %zu, fusion images %zu, fusion samples %zu\n", report.layer1_images,
                report.fusion_images, report.fusion_samples);
    if (!b.ga_history.empty()) std::printf("GA best fitness %.6f\n", b.ga_history.back().best);
    std::printf("bundle written to %s\n", opt.out.string().c_str());
    return kExitOk;
  } catch (const InvalidInput& e) {
    spdlog::error("train failed in stage '{}': {}", stage, e.what());
    return kExitInvalid;
  } catch (const std::exception& e) {
    spdlog::error("train failed in stage '{}': {}", stage, e.what());
    return kExitRuntime;
  }
}

// ---- eval ----

ordered_json optional_vector(const std::vector<std::optional<double>>& v) {
  ordered_json j = ordered_json::array();
  for (const auto& x : v) j.push_back(x ? ordered_json(*x) : ordered_json(nullptr));
  return j;
}

ordered_json metrics_json(const metrics::ConfusionMatrix& cm) {
  ordered_json j;
  j["pixel_accuracy"] = metrics::pixel_accuracy(cm);
  j["class_accuracy"] = metrics::class_accuracy(cm);
  j["mean_iou"] = metrics::mean_iou(cm);
  j["per_class_accuracy"] = optional_vector(metrics::per_class_accuracy(cm));
  j["per_class_iou"] = optional_vector(metrics::per_class_iou(cm));
  ordered_json rows = ordered_json::array();
  for (int g = 0; g < cm.class_count(); ++g) {
    ordered_json row = ordered_json::array();
    for (int p = 0; p < cm.class_count(); ++p) row.push_back(cm.at(g, p));
    rows.push_back(row);
  }
  j["confusion"] = rows;
  return j;
}

std::string pct(const std::optional<double>& v) {
  if (!v) return "-";
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%.1f", 100.0 * *v);
  return buf;
}

// One row per method: per-class accuracy, then Global, Avg and mIoU (percent).
void print_table(const std::vector<std::string>& names,
                 const std::vector<std::pair<std::string, const metrics::ConfusionMatrix*>>& rows) {
  std::printf("%-14s", "Method");
  for (const auto& n : names) std::printf(" %8s", n.substr(0, 8).c_str());
  std::printf(" %8s %8s %8s\n", "Global", "Avg", "mIoU");
  for (const auto& [label, cm] : rows) {
    std::printf("%-14s", label.c_str());
    for (const auto& v : metrics::per_class_accuracy(*cm)) std::printf(" %8s", pct(v).c_str());
    std::printf(" %8s %8s %8s\n", pct(metrics::pixel_accuracy(*cm)).c_str(),
                pct(metrics::class_accuracy(*cm)).c_str(), pct(metrics::mean_iou(*cm)).c_str());
  }
}

int cmd_eval(const EvalOptions& opt, unsigned workers) {
  try {
    if (opt.subset != "test" && opt.subset != "all") throw InvalidInput("--subset must be 'test' or 'all'");
    auto ds = data::load_dataset(opt.data, workers);
    if (ds.items.empty()) throw InvalidInput("dataset " + opt.data.string() + " has no images");

    ordered_json results;
    results["dataset"] = opt.data.string();
    if (opt.identity) {
      // Ground truth scored against itself.
      metrics::ConfusionMatrix cm(ds.class_count);
      for (const auto& item : ds.items) cm.accumulate(item.labels, item.labels);
      results["mode"] = "identity";
      results["images"] = ds.size();
      results["class_names"] = ds.class_names;
      results["final"] = metrics_json(cm);
      print_table(ds.class_names, {{"Identity", &cm}});
    } else {
      if (opt.bundle.empty()) throw InvalidInput("--bundle is required unless --identity is given");
      const auto model = bundle::load_bundle(opt.bundle);
      if (opt.subset == "test") {
        const auto& prov = model.provenance;
        const auto frac = prov.find("split_fraction");
        const auto seed = prov.find("split_seed");
        if (frac != prov.end() && seed != prov.end() && std::stod(frac->second) < 1) {
          const auto parts = data::split(ds, std::stod(frac->second), std::stoull(seed->second));
          if (const auto h = prov.find("dataset_hash"); h != prov.end()) {
            char buf[17];
            std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(data::dataset_hash(parts.first)));
            if (h->second != buf) spdlog::warn("dataset differs from the one the bundle was trained on");
          }
          ds = parts.second;
        } else {
          spdlog::warn("bundle records no held-out split; evaluating every image");
        }
      }
      if (ds.items.empty()) throw InvalidInput("evaluation subset is empty");
      const auto report = pipeline::evaluate(model, ds, workers);
      results["mode"] = "model";
      results["subset"] = opt.subset;
      results["images"] = ds.size();
      results["class_names"] = model.class_names;
      results["final"] = metrics_json(report.final_cm);
      results["visual_only"] = metrics_json(report.visual_cm);
      print_table(model.class_names, {{"Visual only", &report.visual_cm}, {"Full", &report.final_cm}});
    }
    if (!opt.out.empty()) {
      std::ofstream os(opt.out, std::ios::binary);
      if (!os) throw std::runtime_error("cannot write " + opt.out.string());
      os << results.dump(2) << "\n";
    }
    return kExitOk;
  } catch (const InvalidInput& e) {
    spdlog::error("eval: {}", e.what());
    return kExitInvalid;
  } catch (const FormatError& e) {
    spdlog::error("eval: {}", e.what());
    return kExitInvalid;
  } catch (const std::exception& e) {
    spdlog::error("eval: {}", e.what());
    return kExitRuntime;
  }
}

// ---- predict ----

void dump_stages(const pipeline::StageOutputs& st, const fs::path& path) {
  ordered_json j;
  j["superpixels"] = st.analysis.spmap.count;
  ordered_json items = ordered_json::array();
  for (int s = 0; s < st.analysis.spmap.count; ++s) {
    ordered_json e;
    e["id"] = s;
    e["pixels"] = st.analysis.spmap.pixel_count[s];
    e["p_vis"] = st.p_vis[s];
    e["v_local"] = st.cav[s].v_local;
    e["v_global"] = st.cav[s].v_global;
    e["final"] = st.final_prob[s];
    e["visual_class"] = st.visual_class[s];
    e["final_class"] = st.final_class[s];
    items.push_back(std::move(e));
  }
  j["stages"] = std::move(items);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << j.dump(1) << "\n";
}

int cmd_predict(const PredictOptions& opt) {
  bundle::ModelBundle model;
  try {
    model = bundle::load_bundle(opt.bundle);
    fs::create_directories(opt.out);
  } catch (const InvalidInput& e) {
    spdlog::error("predict: {}", e.what());
    return kExitInvalid;
  } catch (const std::exception& e) {
    spdlog::error("predict: {}", e.what());
    return kExitRuntime;
  }
  int status = kExitOk;
  for (const auto& path : opt.images) {
    try {
      const auto image = io::read_image(path);
      const auto st = pipeline::run_stages(model, image);
      const auto labels = pipeline::paint(st.analysis.spmap, st.final_class);
      const auto stem = path.stem().string();
      io::write_label_png(opt.out / (stem + "_labels.png"), labels);
      io::write_png_rgb(opt.out / (stem + "_overlay.png"), pipeline::colorize(labels, model.palette));
      if (opt.dump_stages) dump_stages(st, opt.out / (stem + "_stages.json"));
      std::printf("%s: %d superpixels\n", path.string().c_str(), st.analysis.spmap.count);
    } catch (const std::exception& e) {
      spdlog::error("{}: {}", path.string(), e.what());
      const bool invalid = dynamic_cast<const InvalidInput*>(&e) || dynamic_cast<const FormatError*>(&e);
      if (status == kExitOk) status = invalid ? kExitInvalid : kExitRuntime;
    }
  }
  return status;
}

// ---- inspect-ocp ----

RasterImage heatmap(const std::vector<double>& values, int rows, int cols, int cell) {
  RasterImage img(cols * cell, rows * cell);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const double v = std::clamp(values[static_cast<std::size_t>(r) * cols + c], 0.0, 1.0);
      // Black to yellow through red.
      const auto red = static_cast<std::uint8_t>(std::lround(255 * std::min(1.0, 2 * v)));
      const auto green = static_cast<std::uint8_t>(std::lround(255 * std::max(0.0, 2 * v - 1)));
      for (int y = 0; y < cell; ++y)
        for (int x = 0; x < cell; ++x) img.at(c * cell + x, r * cell + y) = Rgb{red, green, 0};
    }
  }
  return img;
}

void print_matrix(const std::vector<std::string>& row_names, const std::vector<std::string>& col_names,
                  const std::vector<double>& values) {
  std::printf("%-10s", "");
  for (const auto& n : col_names) std::printf(" %8s", n.substr(0, 8).c_str());
  std::printf("\n");
  for (std::size_t r = 0; r < row_names.size(); ++r) {
    std::printf("%-10s", row_names[r].substr(0, 10).c_str());
    for (std::size_t c = 0; c < col_names.size(); ++c) std::printf(" %8.4f", values[r * col_names.size() + c]);
    std::printf("\n");
  }
}

int cmd_inspect_ocp(const fs::path& bundle_path, const fs::path& out) {
  try {
    const auto model = bundle::load_bundle(bundle_path);
    const auto& ocp = model.ocp;
    const int m = ocp.class_count;
    const int b = ocp.grid_side * ocp.grid_side;
    std::printf("local OCP: P(neighbour class | class)\n");
    print_matrix(model.class_names, model.class_names, ocp.local);
    std::vector<std::string> blocks;
    for (int i = 0; i < b; ++i) blocks.push_back("block " + std::to_string(i));
    std::printf("\nblock prior: P(class | block)\n");
    print_matrix(blocks, model.class_names, ocp.block_prior);

    // Global tensor as a (B*M) x (B*M) mosaic: row = (source block, class),
    // column = (target block, class).
    const int side = b * m;
    std::vector<double> mosaic(static_cast<std::size_t>(side) * side);
    for (int sb = 0; sb < b; ++sb)
      for (int sc = 0; sc < m; ++sc)
        for (int tb = 0; tb < b; ++tb) {
          const auto row = ocp.global_row(sb, sc, tb);
          for (int tc = 0; tc < m; ++tc)
            mosaic[static_cast<std::size_t>(sb * m + sc) * side + tb * m + tc] = row[tc];
        }
    if (!out.empty()) {
      fs::create_directories(out);
      io::write_png_rgb(out / "local_ocp.png", heatmap(ocp.local, m, m, 24));
      io::write_png_rgb(out / "global_ocp.png", heatmap(mosaic, side, side, 8));
      io::write_png_rgb(out / "block_prior.png", heatmap(ocp.block_prior, b, m, 24));
      std::printf("\nheatmaps written to %s\n", out.string().c_str());
    }
    return kExitOk;
  } catch (const InvalidInput& e) {
    spdlog::error("inspect-ocp: {}", e.what());
    return kExitInvalid;
  } catch (const FormatError& e) {
    spdlog::error("inspect-ocp: {}", e.what());
    return kExitInvalid;
  } catch (const std::exception& e) {
    spdlog::error("inspect-ocp: {}", e.what());
    return kExitRuntime;
  }
}

// ---- ga-log ----

int cmd_ga_log(const fs::path& bundle_path, const fs::path& out) {
  try {
    const auto model = bundle::load_bundle(bundle_path);
    if (out.empty()) {
      write_ga_log(model.ga_history, std::cout);
    } else {
      std::ofstream os(out, std::ios::binary);
      if (!os) throw std::runtime_error("cannot write " + out.string());
      write_ga_log(model.ga_history, os);
    }
    return kExitOk;
  } catch (const InvalidInput& e) {
    spdlog::error("ga-log: {}", e.what());
    return kExitInvalid;
  } catch (const FormatError& e) {
    spdlog::error("ga-log: {}", e.what());
    return kExitInvalid;
  } catch (const std::exception& e) {
    spdlog::error("ga-log: {}", e.what());
    return kExitRuntime;
  }
}

// ---- inspect-seg ----

int cmd_inspect_seg(const fs::path& image_path, const fs::path& out, superpixel::SlicParams slic, int grid_side,
                    const fs::path& bundle_path) {
  try {
    if (!bundle_path.empty()) {
      const auto model = bundle::load_bundle(bundle_path);
      slic = model.slic;
      grid_side = model.grid_side;
    }
    const auto image = io::read_image(image_path);
    const auto a = pipeline::analyze_image(image, slic, grid_side);
    std::size_t edges = 0;
    for (const auto& n : a.spmap.adjacency) edges += n.size();
    std::printf("%d superpixels, %zu adjacency edges\n", a.spmap.count, edges / 2);
    if (!out.empty()) {
      std::vector<std::uint16_t> ids(a.spmap.assignment.begin(), a.spmap.assignment.end());
      io::write_png_gray16(out, a.spmap.width, a.spmap.height, ids);
    }
    return kExitOk;
  } catch (const InvalidInput& e) {
    spdlog::error("inspect-seg: {}", e.what());
    return kExitInvalid;
  } catch (const std::exception& e) {
    spdlog::error("inspect-seg: {}", e.what());
    return kExitRuntime;
  }
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();
  std::vector<std::string> args(argv, argv + argc);
  try {
    args = expand_config(std::move(args));
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitInvalid;
  }

  CLI::App app{"Superpixel scene parser with co-occurrence context and a GA-trained integration layer"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");
  CommonOptions common;
  app.add_option("--workers", common.workers, "Worker threads (default: hardware concurrency)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  // Subcommands accept flat key=value config files: --config FILE (flags win).
  app.footer("Every subcommand accepts --config FILE with key=value lines; explicit flags win.\n"
             "Log verbosity: CAVPARSE_LOG=trace|debug|info|warn|error|off.");

  // synth
  data::SynthConfig synth;
  fs::path synth_out;
  auto* s = app.add_subcommand("synth", "Generate the synthetic banded-scene corpus");
  s->add_option("--out", synth_out, "Dataset root to write")->required();
  s->add_option("--classes", synth.class_count, "Number of classes M (2..8)")->capture_default_str();
  s->add_option("--width", synth.width, "Image width")->capture_default_str();
  s->add_option("--height", synth.height, "Image height")->capture_default_str();
  s->add_option("--count", synth.count, "Number of images")->capture_default_str();
  s->add_option("--noise-sigma", synth.noise_sigma, "Gaussian colour noise sigma")->capture_default_str();
  s->add_option("--band-jitter", synth.band_jitter, "Band boundary jitter (fraction of band height)")
      ->capture_default_str();
  s->add_option("--wave", synth.wave_amplitude, "Band boundary wave amplitude")->capture_default_str();
  s->add_option("--blobs-min", synth.blobs_min, "Minimum foreground blobs per image")->capture_default_str();
  s->add_option("--blobs-max", synth.blobs_max, "Maximum foreground blobs per image")->capture_default_str();
  s->add_option("--seed", synth.seed, "Generator seed")->capture_default_str();
  s->add_option("--workers", common.workers, "Worker threads");

  // train
  TrainOptions train;
  auto& cfg = train.cfg;
  auto* t = app.add_subcommand("train", "Train all three layers and write a model bundle");
  t->add_option("--data", train.data, "Dataset root (images/, labels/, classes.txt)")->required();
  t->add_option("--out", train.out, "Output bundle path (.cpb)")->required();
  t->add_option("--ga-log", train.ga_log, "Write GA history CSV (generation,best,mean)");
  t->add_option("--split", train.split_fraction, "Train fraction of the dataset; the rest is the test split")
      ->capture_default_str();
  t->add_option("--split-seed", train.split_seed, "Seed of the train/test split (default: --seed)");
  t->add_option("--holdout", cfg.holdout_fraction, "Share of training images held out to fit the integration layer")
      ->capture_default_str();
  t->add_option("--seed", cfg.seed, "Master seed for classifier, GA and holdout")->capture_default_str();
  add_slic_options(t, cfg.slic);
  t->add_option("--features", train.features, "Feature set")->capture_default_str();
  t->add_option("--classifier", train.classifier_preset, "Classifier preset: desk (lr 1e-2, 500 epochs) or decayed "
                                                         "(lr 1e-4, x0.1 every 30 epochs, 90 epochs)")
      ->capture_default_str();
  t->add_option("--lr", train.learning_rate, "Classifier learning rate (overrides preset)");
  t->add_option("--epochs", train.epochs, "Classifier epochs (overrides preset)");
  t->add_option("--l2", train.l2, "Classifier L2 penalty (overrides preset)");
  t->add_option("--classifier-hidden", train.classifier_hidden, "Hidden units per classifier; 0 = logistic");
  t->add_option("--grid", cfg.grid_side, "Block grid side G")->capture_default_str();
  t->add_option("--alpha", cfg.ocp_alpha, "OCP add-alpha smoothing")->capture_default_str();
  t->add_option("--hidden", cfg.fusion_hidden, "Integration hidden units H; 0 = 2M")->capture_default_str();
  t->add_option("--mode", train.mode, "Integration input: triple (p_vis, V^l, V^g) or fused (p_vis, fused context)")
      ->capture_default_str();
  t->add_option("--generations", cfg.ga.generations, "GA generations T")->capture_default_str();
  t->add_option("--population", cfg.ga.population, "GA population N")->capture_default_str();
  t->add_option("--mating-pool", cfg.ga.mating_pool, "GA mating pool size")->capture_default_str();
  t->add_option("--crossover-prob", cfg.ga.crossover_prob, "GA crossover probability p_C")->capture_default_str();
  t->add_option("--mutation-prob", cfg.ga.mutation_prob, "GA mutation probability p_M")->capture_default_str();
  t->add_option("--mutation-fraction", cfg.ga.mutation_fraction, "Share of genes resampled per mutation")
      ->capture_default_str();
  t->add_option("--init-low", cfg.ga.init_low, "Lower bound of gene initialisation")->capture_default_str();
  t->add_option("--init-high", cfg.ga.init_high, "Upper bound of gene initialisation")->capture_default_str();
  t->add_option("--elitism", cfg.ga.elitism, "Keep parents in the next generation")->capture_default_str();
  t->add_option("--warm-start", cfg.warm_start, "Seed one GA member with the visual pass-through net")
      ->capture_default_str();
  t->add_option("--warm-start-gain", cfg.warm_start_gain, "Logit scale of the warm-start net")->capture_default_str();
  t->add_flag("--timestamp", train.timestamp, "Record the wall-clock time in the bundle (breaks bit-identity)");
  t->add_option("--workers", common.workers, "Worker threads");

  // predict
  PredictOptions predict;
  auto* p = app.add_subcommand("predict", "Label images with a trained bundle");
  p->add_option("--bundle", predict.bundle, "Model bundle")->required();
  p->add_option("--out", predict.out, "Output directory")->required();
  p->add_option("images", predict.images, "Input images (PNG or PPM)")->required();
  p->add_flag("--dump-stages", predict.dump_stages, "Also write per-superpixel stage probabilities as JSON");

  // eval
  EvalOptions eval;
  auto* e = app.add_subcommand("eval", "Score a bundle on a dataset");
  e->add_option("--bundle", eval.bundle, "Model bundle");
  e->add_option("--data", eval.data, "Dataset root")->required();
  e->add_option("--out", eval.out, "Write results JSON");
  e->add_option("--subset", eval.subset, "test: the split held out at training time; all: every image")
      ->capture_default_str();
  e->add_flag("--identity", eval.identity, "Score ground truth against itself (debug)");
  e->add_option("--workers", common.workers, "Worker threads");

  // inspect-ocp
  fs::path ocp_bundle, ocp_out;
  auto* o = app.add_subcommand("inspect-ocp", "Print co-occurrence priors and write heatmaps");
  o->add_option("--bundle", ocp_bundle, "Model bundle")->required();
  o->add_option("--out", ocp_out, "Directory for heatmap PNGs");

  // ga-log
  fs::path log_bundle, log_out;
  auto* g = app.add_subcommand("ga-log", "Export the GA history of a bundle as CSV");
  g->add_option("--bundle", log_bundle, "Model bundle")->required();
  g->add_option("--out", log_out, "CSV path (default: stdout)");

  // inspect-seg
  fs::path seg_image, seg_out, seg_bundle;
  superpixel::SlicParams seg_slic;
  int seg_grid = 3;
  auto* sg = app.add_subcommand("inspect-seg", "Segment one image and dump superpixel ids as 16-bit PNG");
  sg->add_option("--image", seg_image, "Input image")->required();
  sg->add_option("--out", seg_out, "16-bit PNG of superpixel ids");
  sg->add_option("--bundle", seg_bundle, "Take segmentation parameters from a bundle");
  add_slic_options(sg, seg_slic);
  sg->add_option("--grid", seg_grid, "Block grid side G")->capture_default_str();

  std::vector<const char*> cargs;
  for (const auto& a : args) cargs.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(cargs.size()), cargs.data());
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kExitOk : kExitInvalid;
  }
  if (common.workers < 1) common.workers = 1;

  if (*s) {
    try {
      return cmd_synth(synth, synth_out, common.workers);
    } catch (const InvalidInput& ex) {
      spdlog::error("synth: {}", ex.what());
      return kExitInvalid;
    } catch (const std::exception& ex) {
      spdlog::error("synth: {}", ex.what());
      return kExitRuntime;
    }
  }
  if (*t) return cmd_train(train, common.workers);
  if (*p) return cmd_predict(predict);
  if (*e) return cmd_eval(eval, common.workers);
  if (*o) return cmd_inspect_ocp(ocp_bundle, ocp_out);
  if (*g) return cmd_ga_log(log_bundle, log_out);
  if (*sg) return cmd_inspect_seg(seg_image, seg_out, seg_slic, seg_grid, seg_bundle);
  return kExitRuntime;
}
