// Acceptance suite: one PASS/FAIL line per criterion.

#include <spdlog/spdlog.h>
#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <queue>
#include <set>
#include <sstream>
#include <string>

#include "cavparse/bundle.hpp"
#include "cavparse/data.hpp"
#include "cavparse/error.hpp"
#include "cavparse/image_io.hpp"
#include "cavparse/pipeline.hpp"
#include "cavparse/random.hpp"
#include "oracles/ocp_oracle.hpp"
#include "unit/bundle_fixture.hpp"
#include "unit/test_util.hpp"

using namespace cavparse;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Collects the first few failures with context.
class Check {
 public:
  void expect(bool ok, const std::string& what) {
    if (ok) return;
    ++failures_;
    if (failures_ <= 3) messages_ += (messages_.empty() ? "" : "; ") + what;
  }
  bool ok() const { return failures_ == 0; }
  Outcome outcome(const std::string& summary) const {
    if (ok()) return {true, summary};
    return {false, std::to_string(failures_) + " failure(s): " + messages_};
  }

 private:
  int failures_ = 0;
  std::string messages_;
};

std::string num(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(CAVPARSE_CLI) + " " + args + " >>" + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool normalized(std::span<const double> p) {
  double sum = 0;
  for (double x : p) {
    if (!(x >= 0.0)) return false;
    sum += x;
  }
  return std::abs(sum - 1.0) <= 1e-6;
}

ProbVector random_prob(Rng& rng, int m) {
  ProbVector p(m);
  double s = 0;
  for (double& x : p) s += x = uniform01(rng) + 1e-9;
  for (double& x : p) x /= s;
  return p;
}

// Random grid partition of a w x h image.
superpixel::SuperpixelMap random_partition(Rng& rng, int w, int h) {
  const int cw = 1 + static_cast<int>(uniform_index(rng, 5)), ch = 1 + static_cast<int>(uniform_index(rng, 5));
  std::vector<std::int32_t> a(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) a[static_cast<std::size_t>(y) * w + x] = (y / ch) * 1000 + x / cw;
  return superpixel::from_assignment(w, h, std::move(a));
}

// 1. Every emitted probability vector is normalized.
Outcome criterion_normalization() {
  Rng rng(101);
  Check c;
  for (int trial = 0; trial < 1000; ++trial) {
    const int m = 2 + static_cast<int>(uniform_index(rng, 9));
    const double scale = std::pow(10.0, uniform_real(rng, -2, 2));

    visual::ClassifierBank bank;
    bank.class_count = m;
    bank.feature_dim = visual::feature::kDim;
    bank.hidden = trial % 2 ? 0 : 1 + static_cast<int>(uniform_index(rng, 4));
    const int d = bank.feature_dim, hd = bank.hidden;
    for (int i = 0; i < d; ++i) {
      bank.feature_mean.push_back(uniform_real(rng, -1, 1));
      bank.feature_scale.push_back(uniform_real(rng, 0.1, 3));
    }
    bank.weights.resize(static_cast<std::size_t>(m) * (hd ? hd : d));
    for (double& w : bank.weights) w = uniform_real(rng, -scale, scale);
    bank.bias.resize(m);
    for (double& b : bank.bias) b = uniform_real(rng, -scale, scale);
    if (hd) {
      bank.hidden_weights.resize(static_cast<std::size_t>(m) * d * hd);
      for (double& w : bank.hidden_weights) w = uniform_real(rng, -scale, scale);
      bank.hidden_bias.resize(static_cast<std::size_t>(m) * hd);
      for (double& b : bank.hidden_bias) b = uniform_real(rng, -scale, scale);
    }
    std::vector<double> f(d);
    for (double& x : f) x = uniform_real(rng, -5, 5);
    c.expect(normalized(visual::predict_visual(bank, f)), "predict_visual trial " + std::to_string(trial));

    const int w = 3 + static_cast<int>(uniform_index(rng, 12)), h = 3 + static_cast<int>(uniform_index(rng, 12));
    const auto sp = random_partition(rng, w, h);
    const int g = 1 + static_cast<int>(uniform_index(rng, 3));
    const auto blocks = superpixel::assign_blocks(sp, g);
    context::OcpCounts counts(m, g);
    for (auto& v : counts.local) v = uniform_index(rng, 4);
    for (auto& v : counts.global) v = uniform_index(rng, 3);
    for (auto& v : counts.block_class) v = uniform_index(rng, 3);
    const auto ocp = context::smooth_counts(counts, uniform_index(rng, 3) == 0 ? 0.0 : uniform_real(rng, 0, 2));
    std::vector<int> predicted(sp.count);
    for (int& p : predicted) p = static_cast<int>(uniform_index(rng, m));
    const int j = static_cast<int>(uniform_index(rng, sp.count));
    const auto lv = context::local_vote(j, predicted, sp, ocp);
    const auto gv = context::global_vote(j, predicted, sp, blocks, ocp);
    c.expect(normalized(lv), "local_vote trial " + std::to_string(trial));
    c.expect(normalized(gv), "global_vote trial " + std::to_string(trial));
    c.expect(normalized(context::fuse_context(lv, gv)), "fuse_context trial " + std::to_string(trial));

    const auto mode = trial % 3 ? fusion::InputMode::kTriple : fusion::InputMode::kFusedContext;
    const int hidden = 1 + static_cast<int>(uniform_index(rng, 2 * m));
    std::vector<double> genome(fusion::genome_length(m, hidden, mode));
    for (double& x : genome) x = uniform_real(rng, -scale, scale);
    const auto net = fusion::unpack_genome(genome, m, hidden, mode);
    c.expect(normalized(fusion::forward(net, random_prob(rng, m), random_prob(rng, m), random_prob(rng, m))),
             "forward trial " + std::to_string(trial));
  }
  return c.outcome("1000 trials x 5 producers");
}

// Independent partition checks: flood fill and a pixel scan for adjacency.
void check_partition(const superpixel::SuperpixelMap& sp, const std::string& name, Check& c) {
  const int w = sp.width, h = sp.height;
  bool total = static_cast<int>(sp.assignment.size()) == w * h && sp.count >= 1;
  std::vector<std::int64_t> sizes(std::max(sp.count, 0), 0);
  for (auto a : sp.assignment) {
    if (a < 0 || a >= sp.count) {
      total = false;
      break;
    }
    ++sizes[a];
  }
  for (auto s : sizes) total = total && s > 0;
  c.expect(total, name + ": not a total partition");
  if (!total) return;

  std::vector<char> seen(sp.assignment.size(), 0);
  std::vector<int> components(sp.count, 0);
  for (int start = 0; start < w * h; ++start) {
    if (seen[start]) continue;
    const int label = sp.assignment[start];
    ++components[label];
    std::queue<int> q;
    q.push(start);
    seen[start] = 1;
    while (!q.empty()) {
      const int p = q.front();
      q.pop();
      const int x = p % w, y = p / w;
      const int nbr[4][2] = {{x - 1, y}, {x + 1, y}, {x, y - 1}, {x, y + 1}};
      for (const auto& n : nbr) {
        if (n[0] < 0 || n[1] < 0 || n[0] >= w || n[1] >= h) continue;
        const int np = n[1] * w + n[0];
        if (!seen[np] && sp.assignment[np] == label) {
          seen[np] = 1;
          q.push(np);
        }
      }
    }
  }
  c.expect(std::all_of(components.begin(), components.end(), [](int k) { return k == 1; }),
           name + ": a superpixel is not 4-connected");

  std::vector<std::set<int>> adj(sp.count);
  for (auto [a, b] : oracle::ordered_adjacent_pairs(sp)) adj[a].insert(b);
  bool same = static_cast<int>(sp.adjacency.size()) == sp.count;
  bool symmetric = same;
  for (int s = 0; same && s < sp.count; ++s) {
    same = std::vector<int>(adj[s].begin(), adj[s].end()) ==
           std::vector<int>(sp.adjacency[s].begin(), sp.adjacency[s].end());
    for (int t : sp.adjacency[s]) {
      symmetric = symmetric && std::binary_search(sp.adjacency[t].begin(), sp.adjacency[t].end(), s);
    }
  }
  c.expect(symmetric, name + ": adjacency not symmetric");
  c.expect(same, name + ": adjacency differs from pixel scan");
}

// 2. SLIC output is a connected, total partition with symmetric adjacency.
Outcome criterion_partition() {
  Check c;
  Rng rng(202);
  for (int i = 0; i < 50; ++i) {
    const int w = 8 + static_cast<int>(uniform_index(rng, 90)), h = 8 + static_cast<int>(uniform_index(rng, 90));
    const auto img = i % 2 ? testutil::random_image(w, h, 500 + i) : testutil::blobby_image(w, h, 500 + i);
    superpixel::SlicParams p;
    p.target_count = std::min(w * h, 2 + static_cast<int>(uniform_index(rng, 200)));
    p.compactness = uniform_real(rng, 0, 40);
    p.iterations = 1 + static_cast<int>(uniform_index(rng, 10));
    p.seed = i;
    check_partition(superpixel::slic_segment(img, p), "random " + std::to_string(i), c);
  }
  std::vector<std::pair<std::string, RasterImage>> crafted;
  crafted.emplace_back("1x1", RasterImage(1, 1, {9, 9, 9}));
  crafted.emplace_back("constant", RasterImage(40, 30, {120, 60, 10}));
  crafted.emplace_back("strip", testutil::random_image(97, 1, 7));
  RasterImage checker(32, 32);
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x) checker.at(x, y) = (x + y) % 2 ? Rgb{255, 255, 255} : Rgb{0, 0, 0};
  crafted.emplace_back("checkerboard", checker);
  RasterImage rings(48, 48);
  for (int y = 0; y < 48; ++y)
    for (int x = 0; x < 48; ++x) {
      const int r = static_cast<int>(std::hypot(x - 23.5, y - 23.5));
      rings.at(x, y) = r % 6 < 3 ? Rgb{200, 30, 30} : Rgb{30, 30, 200};
    }
  crafted.emplace_back("rings", rings);
  for (const auto& [name, img] : crafted) {
    for (int k : {1, 4, 50}) {
      superpixel::SlicParams p;
      p.target_count = std::min(k, img.width() * img.height());
      check_partition(superpixel::slic_segment(img, p), name + " K=" + std::to_string(k), c);
    }
  }
  return c.outcome("50 random + 5 crafted images");
}

// 3. Priors and votes equal the brute-force oracle.
Outcome criterion_ocp_oracle() {
  Check c;
  data::SynthConfig sc;
  sc.width = 20;
  sc.height = 20;
  sc.count = 10;
  sc.seed = 303;
  const auto ds = data::synth_generate(sc);
  const int m = ds.class_count;
  const int g = 2;
  std::vector<oracle::NaiveImage> naive;
  int max_count = 0;
  for (const auto& it : ds.items) {
    superpixel::SlicParams p;
    p.target_count = 6;
    oracle::NaiveImage im;
    im.spmap = superpixel::slic_segment(it.image, p);
    im.blocks = superpixel::assign_blocks(im.spmap, g);
    im.classes = context::majority_classes(im.spmap, it.labels, m);
    max_count = std::max(max_count, im.spmap.count);
    naive.push_back(std::move(im));
  }
  c.expect(max_count <= 10, "an image has more than 10 superpixels");
  std::vector<context::OcpImage> views;
  for (const auto& im : naive) views.push_back({im.spmap, im.blocks, im.classes});

  double worst = 0;
  auto compare = [&](std::span<const double> a, std::span<const double> b, const std::string& what) {
    bool ok = a.size() == b.size();
    for (std::size_t i = 0; ok && i < a.size(); ++i) {
      worst = std::max(worst, std::abs(a[i] - b[i]));
      ok = std::abs(a[i] - b[i]) <= 1e-12;
    }
    c.expect(ok, what);
  };
  Rng rng(304);
  for (double alpha : {0.0, 0.5, 1.0}) {
    const auto ocp = context::estimate_ocp(views, m, g, alpha);
    const auto ref = oracle::naive_ocp(naive, m, g, alpha);
    const std::string tag = " alpha " + num("%.1f", alpha);
    compare(ocp.local, ref.local, "local prior" + tag);
    compare(ocp.global, ref.global, "global prior" + tag);
    compare(ocp.block_prior, ref.block_prior, "block prior" + tag);
    for (const auto& im : naive) {
      std::vector<int> predicted(im.spmap.count);
      for (int& p : predicted) p = static_cast<int>(uniform_index(rng, m));
      for (int j = 0; j < im.spmap.count; ++j) {
        compare(context::local_vote(j, predicted, im.spmap, ocp), oracle::naive_local_vote(j, predicted, im.spmap, ref),
                "local vote" + tag);
        compare(context::global_vote(j, predicted, im.spmap, im.blocks, ocp),
                oracle::naive_global_vote(j, predicted, im.spmap, im.blocks, ref), "global vote" + tag);
      }
    }
  }
  return c.outcome("max |diff| " + num("%.1e", worst) + ", <= " + std::to_string(max_count) + " superpixels");
}

// 4. Elitism monotonicity, null-operator fixed point, quadratic optimum.
Outcome criterion_ga() {
  Check c;
  Rng cfg_rng(404);
  for (int k = 0; k < 20; ++k) {
    ganet::GaConfig cfg;
    cfg.population = 2 + static_cast<int>(uniform_index(cfg_rng, 15));
    cfg.mating_pool = 1 + static_cast<int>(uniform_index(cfg_rng, 2 * cfg.population));
    cfg.generations = 10 + static_cast<int>(uniform_index(cfg_rng, 60));
    cfg.crossover_prob = uniform01(cfg_rng);
    cfg.mutation_prob = uniform01(cfg_rng);
    cfg.mutation_fraction = uniform01(cfg_rng);
    cfg.init_high = uniform_real(cfg_rng, 0.1, 3);
    cfg.init_low = -cfg.init_high;
    const std::size_t len = 1 + uniform_index(cfg_rng, 30);
    const double a = uniform_real(cfg_rng, 1, 6), b = uniform_real(cfg_rng, 0, 3);
    auto fitness = [a, b](std::span<const double> x) {
      double s = 0;
      for (std::size_t i = 0; i < x.size(); ++i) s += std::sin(a * x[i] + b * i);
      return 0.5 + 0.5 * s / x.size();
    };
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      cfg.seed = seed * 1000 + k;
      const auto r = ganet::run(cfg, len, fitness);
      bool mono = r.history.size() == static_cast<std::size_t>(cfg.generations);
      for (std::size_t t = 1; mono && t < r.history.size(); ++t) mono = r.history[t].best >= r.history[t - 1].best;
      c.expect(mono, "config " + std::to_string(k) + " seed " + std::to_string(seed) + " not monotone");
    }
  }

  ganet::GaConfig null_cfg;
  null_cfg.crossover_prob = null_cfg.mutation_prob = 0;
  null_cfg.seed = 405;
  auto fitness = [](std::span<const double> x) {
    double s = 0;
    for (double v : x) s += v * v;
    return 1.0 / (1.0 + s);
  };
  null_cfg.generations = 1;
  const auto first = ganet::run(null_cfg, 11, fitness).best;
  for (int t : {2, 5, 17, 40}) {
    null_cfg.generations = t;
    const auto r = ganet::run(null_cfg, 11, fitness);
    c.expect(std::memcmp(r.best.genome.data(), first.genome.data(), first.genome.size() * sizeof(double)) == 0,
             "null operators moved the best genome at T=" + std::to_string(t));
    for (const auto& h : r.history) c.expect(h.best == first.fitness, "null operators changed best fitness");
  }

  auto quadratic = [](std::span<const double> g) { return 1.0 - std::min(1.0, (g[0] - 0.5) * (g[0] - 0.5)); };
  double oracle_best = 0;
  for (int i = 0; i <= 2000; ++i) oracle_best = std::max(oracle_best, quadratic(std::vector<double>{-1 + i * 1e-3}));
  c.expect(oracle_best == 1.0, "grid oracle optimum is not 1");
  double worst = 1;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    ganet::GaConfig cfg;
    cfg.seed = seed;
    const auto r = ganet::run(cfg, 1, quadratic);
    worst = std::min(worst, r.best.fitness);
    c.expect(r.best.fitness >= 0.999 && r.best.fitness <= oracle_best, "quadratic seed " + std::to_string(seed));
  }
  return c.outcome("60 monotone runs, null fixed point, quadratic min best " + num("%.6f", worst));
}

// 5. The pass-through net reproduces visual labels and visual accuracy.
Outcome criterion_pass_through() {
  Check c;
  const auto ds = testutil::small_synth(12, 505);
  const auto b = pipeline::train_model(ds, testutil::small_config(505)).bundle;
  const int m = b.class_count;
  std::vector<fusion::FusionSample> samples;
  for (const auto& it : ds.items) {
    const auto st = pipeline::run_stages(b, it.image);
    const auto truth = context::majority_classes(st.analysis.spmap, it.labels, m);
    for (int s = 0; s < st.analysis.spmap.count; ++s) {
      if (truth[s] < 0) continue;
      samples.push_back({st.p_vis[s], st.cav[s].v_local, st.cav[s].v_global, truth[s],
                         static_cast<double>(st.analysis.spmap.pixel_count[s])});
    }
  }
  Rng rng(506);
  for (int i = 0; i < 500; ++i) {
    samples.push_back({random_prob(rng, m), random_prob(rng, m), random_prob(rng, m),
                       static_cast<int>(uniform_index(rng, m)), 1.0 + uniform_index(rng, 50)});
  }
  double max_gap = 0;
  for (auto mode : {fusion::InputMode::kTriple, fusion::InputMode::kFusedContext}) {
    for (int hidden : {m, 2 * m}) {
      const auto net = fusion::pass_through_visual(m, hidden, mode);
      double right = 0, total = 0;
      for (const auto& s : samples) {
        const int vis = most_probable_class(s.p_vis);
        c.expect(fusion::predict_label(net, s.p_vis, s.v_local, s.v_global) == vis, "label differs from visual");
        right += vis == s.truth ? s.weight : 0.0;
        total += s.weight;
      }
      const double fit = fusion::weighted_accuracy(net, fusion::make_batch(samples, m, mode));
      max_gap = std::max(max_gap, std::abs(fit - right / total));
      c.expect(std::abs(fit - right / total) <= 1e-12, "fitness differs from visual accuracy");
    }
  }
  return c.outcome(std::to_string(samples.size()) + " samples, max fitness gap " + num("%.1e", max_gap));
}

// 6. Hand-computed confusion example.
Outcome criterion_metrics() {
  Check c;
  LabelMap truth(4, 1), pred(4, 1);
  const int t[4] = {0, 0, 1, 1}, p[4] = {0, 1, 1, 1};
  for (int i = 0; i < 4; ++i) {
    truth[i] = static_cast<ClassId>(t[i]);
    pred[i] = static_cast<ClassId>(p[i]);
  }
  metrics::ConfusionMatrix cm(2);
  cm.accumulate(pred, truth);
  c.expect(metrics::pixel_accuracy(cm) == 0.75, "pixel accuracy " + num("%.17g", metrics::pixel_accuracy(cm)));
  c.expect(metrics::class_accuracy(cm) == 0.75, "class accuracy " + num("%.17g", metrics::class_accuracy(cm)));
  c.expect(metrics::mean_iou(cm) == 7.0 / 12.0, "mIoU " + num("%.17g", metrics::mean_iou(cm)));
  return c.outcome("pixel 0.75, class 0.75, mIoU 7/12");
}

// Settings shared by the synthetic end-to-end and determinism criteria.
constexpr double kSynthNoiseSigma = 70.0;
const char* const kTrainFlags = "--compactness 30 --warm-start true --crossover-prob 0.2 --mutation-fraction 0.05";

struct SynthRun {
  bool ok = false;
  double visual = 0;
  double full = 0;
};

fs::path g_work;

SynthRun synth_run(std::uint64_t seed, unsigned workers, const std::string& tag) {
  const fs::path dir = g_work / ("synth_" + std::to_string(seed));
  const fs::path log = dir / "log.txt";
  fs::create_directories(dir);
  SynthRun r;
  if (!fs::exists(dir / "ds" / "classes.txt")) {
    if (run_cli("synth --out " + (dir / "ds").string() + " --seed " + std::to_string(seed) +
                    " --noise-sigma " + num("%g", kSynthNoiseSigma),
                log) != 0) {
      return r;
    }
  }
  const std::string bundle = (dir / (tag + ".cpb")).string();
  if (run_cli("train --data " + (dir / "ds").string() + " --out " + bundle + " --seed " + std::to_string(seed) +
                  " --workers " + std::to_string(workers) + " " + kTrainFlags,
              log) != 0) {
    return r;
  }
  const std::string metrics = (dir / (tag + ".json")).string();
  if (run_cli("eval --bundle " + bundle + " --data " + (dir / "ds").string() + " --out " + metrics +
                  " --workers " + std::to_string(workers),
              log) != 0) {
    return r;
  }
  const auto j = nlohmann::json::parse(slurp(metrics));
  r.visual = j.at("visual_only").at("pixel_accuracy").get<double>();
  r.full = j.at("final").at("pixel_accuracy").get<double>();
  r.ok = true;
  return r;
}

// 7. Context improves over visual-only on the noisy synthetic corpus.
Outcome criterion_synthetic() {
  Check c;
  std::vector<double> gains;
  std::string detail;
  int big = 0;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto r = synth_run(seed, 1, "w1");
    c.expect(r.ok, "seed " + std::to_string(seed) + " run failed (see " + (g_work / "synth_*" / "log.txt").string() + ")");
    if (!r.ok) continue;
    c.expect(r.visual >= 0.55 && r.visual <= 0.85, "seed " + std::to_string(seed) + " visual-only " +
                                                        num("%.4f", r.visual) + " outside [0.55, 0.85]");
    const double gain = 100.0 * (r.full - r.visual);
    gains.push_back(gain);
    big += gain >= 1.0;
    detail += (detail.empty() ? "" : ", ") + std::string("seed ") + std::to_string(seed) + " " +
              num("%.2f", 100 * r.visual) + "% -> " + num("%.2f", 100 * r.full) + "% (" + num("%+.2f", gain) + " pp)";
  }
  if (gains.size() == 3) {
    std::sort(gains.begin(), gains.end());
    c.expect(gains[1] > 0, "median gain " + num("%+.2f", gains[1]) + " pp not positive");
    c.expect(big >= 2, std::to_string(big) + " of 3 seeds gain >= 1 pp");
  }
  const auto out = c.outcome(detail);
  return out.pass ? out : Outcome{false, out.detail + " [" + detail + "]"};
}

// 8. Train+eval is bit-reproducible, including across worker counts.
Outcome criterion_determinism() {
  Check c;
  const fs::path dir = g_work / "synth_1";
  if (!fs::exists(dir / "w1.cpb") && !synth_run(1, 1, "w1").ok) return {false, "reference run failed"};
  const auto again = synth_run(1, 1, "w1b");
  const auto wide = synth_run(1, 4, "w4");
  c.expect(again.ok && wide.ok, "run failed");
  if (!c.ok()) return c.outcome("");
  const auto ref_bundle = slurp(dir / "w1.cpb"), ref_metrics = slurp(dir / "w1.json");
  c.expect(!ref_bundle.empty() && ref_bundle == slurp(dir / "w1b.cpb"), "bundles differ between identical runs");
  c.expect(ref_metrics == slurp(dir / "w1b.json"), "metric files differ between identical runs");
  c.expect(ref_bundle == slurp(dir / "w4.cpb"), "bundle differs with 4 workers");
  c.expect(ref_metrics == slurp(dir / "w4.json"), "metric file differs with 4 workers");
  return c.outcome("3 runs (workers 1, 1, 4) bit-identical, bundle " + std::to_string(ref_bundle.size()) + " bytes");
}

bool bits_equal(const std::vector<ProbVector>& a, const std::vector<ProbVector>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].size() != b[i].size() || std::memcmp(a[i].data(), b[i].data(), a[i].size() * sizeof(double)) != 0) {
      return false;
    }
  }
  return true;
}

// 9. Saved and reloaded bundles predict bit-identically.
Outcome criterion_persistence() {
  Check c;
  const auto ds = testutil::small_synth(30, 909);
  auto [train, test] = data::split(ds, 0.6, 909);
  const auto b = pipeline::train_model(train, testutil::small_config(909)).bundle;
  const fs::path path = g_work / "persist.cpb";
  bundle::save_bundle(b, path);
  const auto back = bundle::load_bundle(path);
  c.expect(back == b, "reloaded bundle differs");
  const std::size_t n = std::min<std::size_t>(10, test.size());
  c.expect(n == 10, "fewer than 10 held-out images");
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = pipeline::run_stages(b, test.items[i].image);
    const auto y = pipeline::run_stages(back, test.items[i].image);
    const std::string id = test.items[i].id;
    c.expect(bits_equal(x.p_vis, y.p_vis), id + ": visual probabilities differ");
    c.expect(bits_equal(x.final_prob, y.final_prob), id + ": final probabilities differ");
    c.expect(x.final_class == y.final_class, id + ": labels differ");
    bool votes = x.cav.size() == y.cav.size();
    for (std::size_t s = 0; votes && s < x.cav.size(); ++s) {
      votes = bits_equal({x.cav[s].v_local, x.cav[s].v_global}, {y.cav[s].v_local, y.cav[s].v_global});
    }
    c.expect(votes, id + ": votes differ");
  }
  return c.outcome(std::to_string(n) + " held-out images bit-identical");
}

// 10. An SBD-layout dataset trains and evaluates with the full metric table.
Outcome criterion_sbd() {
  Check c;
  const fs::path dir = g_work / "sbd";
  const fs::path log = dir / "log.txt";
  data::SynthConfig sc;
  sc.class_count = 8;
  sc.width = 80;
  sc.height = 60;
  sc.count = 30;
  sc.noise_sigma = 30;
  sc.seed = 1010;
  auto ds = data::synth_generate(sc);
  ds.class_names = data::sbd_class_names();
  data::write_dataset(ds, dir / "ds");
  c.expect(run_cli("train --data " + (dir / "ds").string() + " --out " + (dir / "m.cpb").string() +
                       " --generations 100 --superpixels 150",
                   log) == 0,
           "train failed");
  const fs::path table = dir / "table.txt";
  const std::string cmd = std::string(CAVPARSE_CLI) + " eval --bundle " + (dir / "m.cpb").string() + " --data " +
                          (dir / "ds").string() + " --out " + (dir / "e.json").string() + " >" + table.string() +
                          " 2>>" + log.string();
  const int status = std::system(cmd.c_str());
  c.expect(WIFEXITED(status) && WEXITSTATUS(status) == 0, "eval failed");
  if (!c.ok()) return c.outcome("");
  const std::string text = slurp(table);
  for (const auto& name : data::sbd_class_names()) c.expect(text.find(name) != std::string::npos, "table lacks " + name);
  for (const char* col : {"Global", "Avg", "mIoU", "Visual only", "Full"}) {
    c.expect(text.find(col) != std::string::npos, std::string("table lacks ") + col);
  }
  const auto j = nlohmann::json::parse(slurp(dir / "e.json"));
  double global = 0, avg = 0;
  for (const char* block : {"final", "visual_only"}) {
    const auto& b = j.at(block);
    for (const char* key : {"pixel_accuracy", "class_accuracy", "mean_iou"}) {
      c.expect(b.contains(key) && b.at(key).is_number(), std::string(block) + "." + key + " missing");
    }
    for (const char* key : {"per_class_accuracy", "per_class_iou"}) {
      c.expect(b.contains(key) && b.at(key).size() == 8, std::string(block) + "." + key + " not 8 wide");
    }
  }
  if (c.ok()) {
    global = j.at("final").at("pixel_accuracy").get<double>();
    avg = j.at("final").at("class_accuracy").get<double>();
  }
  return c.outcome("8 classes, global " + num("%.1f", 100 * global) + "%, avg " + num("%.1f", 100 * avg) + "%");
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_level(spdlog::level::warn);
  // Usage: cavparse_acceptance [workdir] [--only N[,N...]]
  g_work = fs::temp_directory_path() / "cavparse_acceptance";
  std::set<std::size_t> only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--only" && i + 1 < argc) {
      std::stringstream list(argv[++i]);
      for (std::string n; std::getline(list, n, ',');) only.insert(std::stoul(n));
    } else {
      g_work = a;
    }
  }
  std::error_code ec;
  fs::remove_all(g_work, ec);
  fs::create_directories(g_work);

  struct Criterion {
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {"probability normalization", 10, criterion_normalization},
      {"superpixel partition", 30, criterion_partition},
      {"co-occurrence oracle", 10, criterion_ocp_oracle},
      {"GA invariants", 60, criterion_ga},
      {"fusion pass-through", 10, criterion_pass_through},
      {"metrics hand example", 1, criterion_metrics},
      {"synthetic end-to-end", 600, criterion_synthetic},
      {"determinism", 1200, criterion_determinism},
      {"bundle persistence", 30, criterion_persistence},
      {"SBD-format dataset", 0, criterion_sbd},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto& cr = criteria[i];
    if (!only.empty() && !only.count(i + 1)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = cr.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (out.pass && cr.budget_s > 0 && secs > cr.budget_s) {
      out = {false, out.detail + "; runtime over " + num("%g", cr.budget_s) + " s budget"};
    }
    failed += !out.pass;
    std::printf("%s criterion %zu (%s): %s [%.1f s]\n", out.pass ? "PASS" : "FAIL", i + 1, cr.name,
                out.detail.c_str(), secs);
    std::fflush(stdout);
  }
  const std::size_t ran = only.empty() ? criteria.size() : only.size();
  std::printf("%d of %zu criteria passed\n", static_cast<int>(ran) - failed, ran);
  return failed == 0 ? 0 : 1;
}
