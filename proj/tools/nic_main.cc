// Copyright 2026 The NIC Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// Command-line front end: zoo training, encode, decode, evaluation sweeps
// and BD-rate.
//
// Exit codes: 0 ok, 1 I/O error, 2 usage error, 3 parse/format error,
// 4 numeric failure.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "nic/checkpoint.h"
#include "nic/container.h"
#include "nic/errors.h"
#include "nic/evaluation.h"
#include "nic/image_io.h"
#include "nic/overfitter.h"
#include "nic/pipeline.h"
#include "nic/rd.h"
#include "nic/trainer.h"
#include "nic/zoo.h"

namespace nic {
namespace {

namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitIo = 1;
constexpr int kExitUsage = 2;
constexpr int kExitParse = 3;
constexpr int kExitNumeric = 4;

uint64_t DefaultSeed() {
  const char* env = std::getenv("NIC_SEED");
  if (!env || !*env) return 0;
  try {
    size_t used = 0;
    const unsigned long long v = std::stoull(env, &used);
    if (used != std::string(env).size()) throw std::invalid_argument(env);
    return v;
  } catch (const std::exception&) {
    throw InvalidArgument(std::string("NIC_SEED is not an unsigned integer: ") + env);
  }
}

void EchoConfig(const CLI::App& sub, uint64_t seed) {
  std::cerr << "# nic " << sub.get_name() << " (seed " << seed << ")\n";
  std::istringstream lines(sub.config_to_str(true, false));
  for (std::string line; std::getline(lines, line);) {
    if (!line.empty() && line.rfind("seed=", 0) != 0) std::cerr << "#   " << line << '\n';
  }
}

std::vector<int> ParseIntList(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    const size_t dots = item.find("..");
    try {
      if (dots == std::string::npos) {
        out.push_back(std::stoi(item));
      } else {
        const int lo = std::stoi(item.substr(0, dots)), hi = std::stoi(item.substr(dots + 2));
        if (hi < lo) throw InvalidArgument("empty range " + item);
        for (int v = lo; v <= hi; ++v) out.push_back(v);
      }
    } catch (const std::logic_error&) {
      throw InvalidArgument("cannot parse integer list '" + text + "'");
    }
  }
  if (out.empty()) throw InvalidArgument("empty integer list");
  return out;
}

ArchConfig MakeArch(const std::string& kind, int latent, int hyper, int width) {
  ArchConfig arch;
  arch.kind = kind == "factorized" ? ModelKind::kFactorized : ModelKind::kHyperprior;
  arch.latent_channels = latent;
  arch.hyper_channels = hyper;
  arch.base_width = width;
  return arch;
}

StepLogger MakeLogger(int every) {
  if (every <= 0) return nullptr;
  auto sum = std::make_shared<std::pair<double, int>>(0.0, 0);
  return [every, sum](int step, const StepResult& r) {
    sum->first += r.loss;
    ++sum->second;
    if ((step + 1) % every == 0) {
      std::fprintf(stderr, "step %d loss %.5f bpp %.4f mse %.6f\n", step + 1, sum->first / sum->second,
                   r.bpp, r.mse);
      *sum = {0.0, 0};
    }
  };
}

// ---- train ----

struct TrainArgs {
  std::string data, val, out, init, kind = "hyperprior";
  double lambda = 0.016, lr = 1e-4, finetune_lr = 3e-4;
  std::vector<double> lambdas;
  int steps = 20000, batch = 8, crop = 64, quality = -1, finetune_steps = 0, log_every = 100;
  int latent_channels = ArchConfig{}.latent_channels, hyper_channels = ArchConfig{}.hyper_channels;
  int base_width = ArchConfig{}.base_width;
  uint64_t seed = 0;
};

int RunTrain(const TrainArgs& a) {
  const std::vector<Image> data = LoadDataset(a.data);
  const std::vector<Image> val = LoadDataset(a.val.empty() ? a.data : a.val);
  TrainConfig base;
  base.lambda = a.lambda;
  base.steps = a.steps;
  base.batch = a.batch;
  base.crop = a.crop;
  base.learning_rate = a.lr;
  base.seed = a.seed;
  base.data_dir = a.data;
  base.arch = MakeArch(a.kind, a.latent_channels, a.hyper_channels, a.base_width);
  base.init_checkpoint = a.init;
  base.Validate();
  const StepLogger log = MakeLogger(a.log_every);
  ZooManifest manifest;

  if (!a.lambdas.empty()) {
    std::vector<double> lambdas = a.lambdas;
    std::sort(lambdas.begin(), lambdas.end());
    if (a.finetune_steps > 0) {
      manifest = TrainZooWarmStart(base, lambdas, a.finetune_steps, a.finetune_lr, data, val, a.out, log);
    } else {
      std::vector<TrainConfig> configs;
      for (size_t i = 0; i < lambdas.size(); ++i) {
        TrainConfig c = base;
        c.lambda = lambdas[i];
        c.seed = base.seed + i;
        configs.push_back(c);
      }
      manifest = TrainZoo(configs, data, val, a.out, log);
    }
  } else {
    const fs::path manifest_path = fs::path(a.out) / kZooManifestName;
    fs::create_directories(a.out);
    if (fs::exists(manifest_path)) manifest = ReadManifest(manifest_path.string());
    int quality = a.quality;
    for (const auto& e : manifest.entries) {
      if (quality < 0 && e.lambda == a.lambda) quality = e.quality;
    }
    if (quality < 0) {
      quality = 0;
      for (const auto& e : manifest.entries) quality = std::max(quality, e.quality + 1);
    }
    if (quality > 255) throw InvalidArgument("quality index must fit in 8 bits");
    ZooEntry entry;
    entry.quality = quality;
    entry.lambda = a.lambda;
    entry.checkpoint = "q" + std::to_string(quality) + ".nicm";
    try {
      const TrainResult r = TrainModel(base, data, log);
      SaveModel(r.params, (fs::path(a.out) / entry.checkpoint).string());
      const Anchor anchor = MeasureAnchor(r.params, val);
      entry.val_rate_bits = anchor.rate_bits;
      entry.val_psnr_db = anchor.psnr_db;
    } catch (const NumericError& e) {
      entry.failed = true;
      entry.error = e.what();
    }
    std::erase_if(manifest.entries, [&](const ZooEntry& e) { return e.quality == quality; });
    manifest.entries.push_back(entry);
    std::stable_sort(manifest.entries.begin(), manifest.entries.end(),
                     [](const ZooEntry& x, const ZooEntry& y) { return x.lambda < y.lambda; });
    WriteManifest(manifest, manifest_path.string());
  }

  bool failed = false;
  for (const auto& e : manifest.entries) {
    if (e.failed) {
      failed = true;
      std::printf("quality %d lambda %g FAILED: %s\n", e.quality, e.lambda, e.error.c_str());
    } else {
      std::printf("quality %d lambda %g val_rate_bits %.1f val_psnr_db %.3f\n", e.quality, e.lambda,
                  e.val_rate_bits, e.val_psnr_db);
    }
  }
  for (const auto& w : MonotonicityWarnings(manifest)) std::fprintf(stderr, "warning: %s\n", w.c_str());
  return failed ? kExitNumeric : kExitOk;
}

// ---- encode / decode ----

struct EncodeArgs {
  std::string input, zoo, out, trace, recon;
  int quality = 0, layers = 1, iters = 2500, eval_every = 1;
  double lr = 1e-3, q_init = 10.0;
  bool overfit = false, allow_skip = false;
  uint64_t seed = 0;
};

int RunEncode(const EncodeArgs& a) {
  Zoo zoo(a.zoo);
  const Image image = ReadPng(a.input);
  const ModelParams& params = zoo.Model(a.quality);
  const uint8_t q = static_cast<uint8_t>(a.quality);
  std::vector<uint8_t> bytes;
  Image recon;
  if (!a.overfit) {
    const BaselineEncoding e = EncodeBaseline(image, params, q);
    bytes = e.bytes;
    recon = e.reconstruction;
    std::printf("bits %zu psnr_db %.4f bpp %.4f\n", 8 * bytes.size(), e.psnr,
                8.0 * bytes.size() / (image.width * image.height));
  } else {
    const RdInterp r = ImageRateFunction(image, zoo, a.quality);
    OverfitConfig c;
    c.layers = a.layers;
    c.iterations = a.iters;
    c.learning_rate = a.lr;
    c.q_init = a.q_init;
    c.eval_every = a.eval_every;
    c.seed = a.seed;
    const OverfitEncoding e = EncodeOverfit(image, params, q, r, c, a.allow_skip);
    bytes = e.bytes;
    recon = e.skipped ? e.baseline.reconstruction : e.result.best_reconstruction;
    if (!a.trace.empty()) WriteTraceCsv(e.result.trace, a.trace);
    const double psnr = e.skipped ? e.baseline.psnr : e.result.best_psnr;
    std::printf("baseline_bits %zu baseline_psnr_db %.4f\n", 8 * e.baseline.bytes.size(),
                e.baseline.psnr);
    std::printf("bits %zu psnr_db %.4f bpp %.4f best_iteration %d acc %.6f initial_acc %.6f "
                "bit_saving %.6f q %.6g%s\n",
                8 * bytes.size(), psnr, 8.0 * bytes.size() / (image.width * image.height),
                e.result.best_iteration, e.result.best_acc, e.result.initial_acc,
                1.0 - e.result.best_acc, e.result.best.q, e.skipped ? " skipped" : "");
  }
  WriteFileBytes(a.out, bytes);
  if (!a.recon.empty()) WritePng(recon, a.recon);
  return kExitOk;
}

int RunDecode(const std::string& input, const std::string& zoo_dir, const std::string& out) {
  const std::vector<uint8_t> bytes = ReadFileBytes(input);
  const Container c = ReadContainer(bytes);
  Zoo zoo(zoo_dir);
  const Image image = DecodeContainer(c, zoo.Model(c.header.quality));
  WritePng(image, out);
  std::printf("decoded %dx%d quality %d layers %d\n", image.width, image.height, c.header.quality,
              c.header.layers);
  return kExitOk;
}

// ---- eval ----

struct EvalArgs {
  std::string zoo, data, report, layers = "1..3", qualities, seeds;
  int iters = 2500, eval_every = 1, jobs = 0;
  double lr = 1e-3, q_init = 10.0;
  uint64_t seed = 0;
};

int RunEval(const EvalArgs& a) {
  Zoo zoo(a.zoo);
  const std::vector<int> layers = ParseIntList(a.layers);
  std::vector<int> qualities;
  if (a.qualities.empty()) {
    for (const auto& e : zoo.manifest().entries) {
      if (!e.failed) qualities.push_back(e.quality);
    }
  } else {
    qualities = ParseIntList(a.qualities);
  }
  std::vector<uint64_t> seeds;
  if (a.seeds.empty()) {
    seeds.push_back(a.seed);
  } else {
    for (int s : ParseIntList(a.seeds)) seeds.push_back(static_cast<uint64_t>(s));
  }
  const std::vector<std::string> paths = ListPngs(a.data);
  if (paths.empty()) throw IoError(a.data + " contains no PNG images");
  std::vector<Image> images;
  for (const auto& p : paths) images.push_back(ReadPng(p));

  // Models are loaded up front; jobs only read them.
  std::map<int, const ModelParams*> models;
  std::map<int, std::vector<ModelRef>> candidates;
  for (int q : qualities) {
    models[q] = &zoo.Model(q);
    for (int c : zoo.NeighborCandidates(q)) candidates[q].emplace_back(c, &zoo.Model(c));
  }

  struct Job {
    size_t image;
    int quality, layers;
    uint64_t seed;
  };
  std::vector<Job> jobs;
  for (size_t i = 0; i < images.size(); ++i) {
    for (int q : qualities) {
      for (int l : layers) {
        for (uint64_t s : seeds) jobs.push_back({i, q, l, s});
      }
    }
  }
  std::vector<EvalRow> rows(jobs.size());
  std::atomic<size_t> next{0}, done{0};
  std::exception_ptr error;
  std::mutex mu;
  auto worker = [&] {
    for (size_t k; (k = next.fetch_add(1)) < jobs.size();) {
      {
        std::lock_guard<std::mutex> lock(mu);
        if (error) return;
      }
      const Job& j = jobs[k];
      try {
        OverfitConfig c;
        c.layers = j.layers;
        c.iterations = a.iters;
        c.learning_rate = a.lr;
        c.q_init = a.q_init;
        c.eval_every = a.eval_every;
        c.seed = j.seed;
        rows[k] = EvaluateImage(fs::path(paths[j.image]).filename().string(), images[j.image],
                                *models.at(j.quality), j.quality, candidates.at(j.quality), c);
        std::lock_guard<std::mutex> lock(mu);
        const EvalRow& r = rows[k];
        std::fprintf(stderr, "[%zu/%zu] %s q%d l%d seed %llu: saving %.4f%% (acc %.5f -> %.5f)\n",
                     ++done, jobs.size(), r.image.c_str(), r.quality, r.layers,
                     static_cast<unsigned long long>(r.seed), 100.0 * r.bit_saving, r.initial_acc,
                     r.best_acc);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  const int threads = std::max(1, a.jobs > 0 ? a.jobs : static_cast<int>(std::thread::hardware_concurrency()));
  std::vector<std::thread> pool;
  for (int t = 1; t < std::min<int>(threads, static_cast<int>(jobs.size())); ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);

  const EvalReport report = Summarize(std::move(rows));
  if (!a.report.empty()) WriteEvalReport(report, a.report);
  for (const LayerSummary& s : report.layers) {
    std::printf("layers %d rows %d mean_bit_saving %.4f%% median_seed_bit_saving %.4f%% "
                "container_saving %.4f%% bd_rate %.4f%% improved %d/%d\n",
                s.layers, s.rows, 100.0 * s.mean_bit_saving, 100.0 * s.median_seed_bit_saving,
                100.0 * s.mean_bit_saving_container, s.bd_rate, s.improved, s.rows);
  }
  std::printf("best_layers %d sweep_shape %s\n", report.best_layers, report.sweep_shape.c_str());
  return kExitOk;
}

int RunBdRate(const std::string& a, const std::string& b) {
  const double v = BdRate(ReadRdCurveCsv(a), ReadRdCurveCsv(b));
  std::printf("BD-rate %.6f%%\n", v);
  return kExitOk;
}

int Main(int argc, char** argv) {
  CLI::App app{"Learned image codec with per-image decoder bias overfitting"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");
  uint64_t seed = 0;
  bool seed_given = false;

  TrainArgs ta;
  CLI::App* train = app.add_subcommand("train", "Train one zoo entry or a whole zoo");
  train->add_option("--data", ta.data, "Directory of training PNGs")->required()->check(CLI::ExistingDirectory);
  train->add_option("--val", ta.val, "Directory of validation PNGs (default: --data)")->check(CLI::ExistingDirectory);
  train->add_option("--out", ta.out, "Zoo directory")->required();
  train->add_option("--lambda", ta.lambda, "Rate-distortion weight (base lambda in zoo mode)")->capture_default_str();
  train->add_option("--lambdas", ta.lambdas, "Train a zoo with these lambdas")->delimiter(',');
  train->add_option("--steps", ta.steps, "Training steps")->capture_default_str()->check(CLI::NonNegativeNumber);
  train->add_option("--batch", ta.batch, "Batch size")->capture_default_str()->check(CLI::PositiveNumber);
  train->add_option("--crop", ta.crop, "Crop size")->capture_default_str()->check(CLI::PositiveNumber);
  train->add_option("--lr", ta.lr, "Adam learning rate")->capture_default_str();
  train->add_option("--init", ta.init, "Warm-start checkpoint")->check(CLI::ExistingFile);
  train->add_option("--quality", ta.quality, "Quality index of a single-lambda run");
  train->add_option("--kind", ta.kind, "Model kind")->capture_default_str()->check(CLI::IsMember({"hyperprior", "factorized"}));
  train->add_option("--latent-channels", ta.latent_channels, "Channels of y")->capture_default_str();
  train->add_option("--hyper-channels", ta.hyper_channels, "Channels of z")->capture_default_str();
  train->add_option("--base-width", ta.base_width, "Hidden channels of the transforms")->capture_default_str();
  train->add_option("--finetune-steps", ta.finetune_steps, "Zoo mode: fine-tune each lambda from a base model trained for --steps")->capture_default_str();
  train->add_option("--finetune-lr", ta.finetune_lr, "Zoo mode: fine-tuning learning rate")->capture_default_str();
  train->add_option("--log-every", ta.log_every, "Print the mean loss every N steps (0: never)")->capture_default_str();

  EncodeArgs ea;
  CLI::App* encode = app.add_subcommand("encode", "Encode a PNG");
  encode->add_option("input", ea.input, "Input PNG")->required()->check(CLI::ExistingFile);
  encode->add_option("--zoo", ea.zoo, "Zoo directory")->required()->check(CLI::ExistingDirectory);
  encode->add_option("--quality", ea.quality, "Zoo quality index")->capture_default_str();
  encode->add_option("--out", ea.out, "Output bitstream")->required();
  encode->add_flag("--overfit", ea.overfit, "Overfit decoder biases to this image");
  encode->add_option("--layers", ea.layers, "Number of last decoder layers to tune")->capture_default_str();
  encode->add_option("--iters", ea.iters, "Overfitting iterations")->capture_default_str()->check(CLI::NonNegativeNumber);
  encode->add_option("--lr", ea.lr, "Overfitting learning rate")->capture_default_str();
  encode->add_option("--q-init", ea.q_init, "Initial quantization scale")->capture_default_str();
  encode->add_option("--eval-every", ea.eval_every, "Evaluate the test-time ratio every K iterations")->capture_default_str()->check(CLI::PositiveNumber);
  encode->add_flag("--allow-skip", ea.allow_skip, "Drop the update when it does not beat the baseline");
  encode->add_option("--trace", ea.trace, "Write the per-iteration trace CSV");
  encode->add_option("--recon", ea.recon, "Write the encoder-side reconstruction PNG");

  std::string din, dzoo, dout;
  CLI::App* decode = app.add_subcommand("decode", "Decode a bitstream to PNG");
  decode->add_option("input", din, "Input bitstream")->required()->check(CLI::ExistingFile);
  decode->add_option("--zoo", dzoo, "Zoo directory")->required()->check(CLI::ExistingDirectory);
  decode->add_option("--out", dout, "Output PNG")->required();

  EvalArgs va;
  CLI::App* eval = app.add_subcommand("eval", "Overfitting sweep over images, qualities and layer counts");
  eval->add_option("--zoo", va.zoo, "Zoo directory")->required()->check(CLI::ExistingDirectory);
  eval->add_option("--data", va.data, "Directory of test PNGs")->required()->check(CLI::ExistingDirectory);
  eval->add_option("--layers-sweep", va.layers, "Layer counts, e.g. 1..3 or 1,3")->capture_default_str();
  eval->add_option("--qualities", va.qualities, "Qualities (default: every usable one)");
  eval->add_option("--seeds", va.seeds, "Overfitting seeds, e.g. 1..3 (default: --seed)");
  eval->add_option("--iters", va.iters, "Overfitting iterations")->capture_default_str()->check(CLI::NonNegativeNumber);
  eval->add_option("--lr", va.lr, "Overfitting learning rate")->capture_default_str();
  eval->add_option("--q-init", va.q_init, "Initial quantization scale")->capture_default_str();
  eval->add_option("--eval-every", va.eval_every, "Evaluate the test-time ratio every K iterations")->capture_default_str()->check(CLI::PositiveNumber);
  eval->add_option("--jobs", va.jobs, "Worker threads (default: hardware concurrency)");
  eval->add_option("--report", va.report, "Report CSV (also writes <stem>_summary.csv and <stem>_layers.csv)");

  std::string curve_a, curve_b;
  CLI::App* bdrate = app.add_subcommand("bdrate", "BD-rate of curve B against curve A");
  bdrate->add_option("curve_a", curve_a, "Reference RD curve CSV")->required()->check(CLI::ExistingFile);
  bdrate->add_option("curve_b", curve_b, "Test RD curve CSV")->required()->check(CLI::ExistingFile);

  for (CLI::App* sub : {train, encode, eval}) {
    sub->add_option("--seed", seed, "Random seed (default: $NIC_SEED or 0)")
        ->each([&](const std::string&) { seed_given = true; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (!seed_given) seed = DefaultSeed();
    ta.seed = ea.seed = va.seed = seed;
    CLI::App* sub = app.get_subcommands().front();
    EchoConfig(*sub, seed);
    if (sub == train) return RunTrain(ta);
    if (sub == encode) return RunEncode(ea);
    if (sub == decode) return RunDecode(din, dzoo, dout);
    if (sub == eval) return RunEval(va);
    return RunBdRate(curve_a, curve_b);
  } catch (const ParseError& e) {
    std::fprintf(stderr, "parse error: %s\n", e.what());
    return kExitParse;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return kExitNumeric;
  } catch (const InvalidArgument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const ShapeError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIo;
  }
}

}  // namespace
}  // namespace nic

int main(int argc, char** argv) { return nic::Main(argc, argv); }
