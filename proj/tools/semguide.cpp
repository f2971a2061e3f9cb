// SPDX-FileCopyrightText: 2026 semguide contributors
// SPDX-License-Identifier: Apache-2.0

// Operator surface: scene rendering, semantic pretraining, the two training
// stages, dataset filtering, evaluation and report summaries.
//
// Exit codes: 0 success, 2 usage/input error, 3 numeric failure.

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <json.hpp>

#include "semguide/debias/debias.hpp"
#include "semguide/eval/metrics.hpp"
#include "semguide/io/dataset_io.hpp"
#include "semguide/io/image_io.hpp"
#include "semguide/nets/train.hpp"
#include "semguide/sim/scenesim.hpp"

namespace {

using namespace semguide;

constexpr const char* kToolVersion = "0.1.0";

class RunManifest {
 public:
  RunManifest(std::string command, std::string out_dir)
      : command_(std::move(command)), dir_(std::move(out_dir)),
        start_(std::chrono::steady_clock::now()) {}

  void add_input(const std::string& path) {
    std::uint64_t h = 0;
    try {
      const std::string bytes = io::read_file(
          std::filesystem::is_directory(path) ? path + "/index.json" : path);
      h = fnv1a(bytes.data(), bytes.size());
    } catch (...) {
      h = 0;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    inputs_[path] = buf;
  }

  void add_output(const std::string& path) { outputs_.push_back(path); }
  void set_config(nlohmann::json snapshot) { config_ = std::move(snapshot); }

  void write() {
    for (const std::string& out : outputs_)
      if (!std::filesystem::exists(out)) throw TensorError("manifest: missing output " + out);
    nlohmann::json doc;
    doc["tool_version"] = kToolVersion;
    doc["command"] = command_;
    doc["config"] = config_;
    doc["inputs"] = inputs_;
    doc["outputs"] = outputs_;
    doc["wall_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    std::filesystem::create_directories(dir_);
    io::write_file_atomic(dir_ + "/run_manifest.json", doc.dump(2));
  }

 private:
  std::string command_;
  std::string dir_;
  std::chrono::steady_clock::time_point start_;
  nlohmann::json config_;
  std::map<std::string, std::string> inputs_;
  std::vector<std::string> outputs_;
};

std::vector<std::string> split_paths(const std::string& csv) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos < csv.size()) {
    const std::size_t comma = csv.find(',', pos);
    out.push_back(csv.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (out.empty()) throw TensorError("no dataset paths given");
  return out;
}

std::vector<sim::Sequence> load_datasets(const std::string& csv, RunManifest& manifest) {
  std::vector<sim::Sequence> out;
  for (const std::string& dir : split_paths(csv)) {
    manifest.add_input(dir);
    out.push_back(io::load_dataset(dir));
  }
  return out;
}

nets::TrainConfig load_train_config(const std::string& path, std::uint64_t seed_flag, bool seed_set) {
  nets::TrainConfig cfg;
  if (!path.empty()) cfg = nets::TrainConfig::from_json(io::read_file(path));
  if (seed_set) cfg.seed = seed_flag;
  cfg.validate();
  return cfg;
}

Tensor<float> depth_preview(const Tensor<float>& depth) {
  // inverse-depth heat map reads better than raw meters
  Tensor<float> inv = Tensor<float>::zeros(depth.shape());
  float lo = 1e30f, hi = -1e30f;
  for (std::int64_t i = 0; i < depth.size(); ++i) {
    inv[i] = depth[i] > 0 ? 1.0f / depth[i] : 0.0f;
    lo = std::min(lo, inv[i]);
    hi = std::max(hi, inv[i]);
  }
  const float span = hi - lo > 1e-12f ? hi - lo : 1.0f;
  for (std::int64_t i = 0; i < inv.size(); ++i) inv[i] = (inv[i] - lo) / span;
  return inv;
}

int cmd_scene(const std::string& spec_path, const std::string& out_dir, std::uint64_t seed,
              bool seed_set) {
  RunManifest manifest("scene", out_dir);
  manifest.add_input(spec_path);
  sim::SceneSpec spec = sim::parse_scene_spec(io::read_file(spec_path));
  if (seed_set) spec.ground_seed = static_cast<std::uint32_t>(seed);
  manifest.set_config(nlohmann::json::parse(sim::scene_spec_to_json(spec)));
  sim::Sequence seq = sim::make_dataset(spec);
  io::save_dataset(seq, out_dir);
  manifest.add_output(out_dir + "/index.json");
  for (std::size_t t = 0; t < seq.frames.size(); ++t) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "frame_%04zu", t);
    for (const char* ext : {".ppm", ".pfm", ".pgm"}) manifest.add_output(out_dir + "/" + buf + ext);
  }
  manifest.write();
  std::printf("rendered %zu frames to %s\n", seq.frames.size(), out_dir.c_str());
  return 0;
}

int cmd_pretrain(const std::string& data_csv, const std::string& holdout_csv, int epochs,
                 std::uint64_t seed, const std::string& out_dir) {
  RunManifest manifest("pretrain-semantic", out_dir);
  std::vector<sim::Sequence> data = load_datasets(data_csv, manifest);
  std::vector<sim::Sequence> holdout;
  if (!holdout_csv.empty()) holdout = load_datasets(holdout_csv, manifest);
  nets::SemanticPretrainResult result = nets::pretrain_semantic(data, epochs, seed, holdout);

  std::filesystem::create_directories(out_dir);
  nets::save_params(result.params, out_dir + "/semantic.params");
  nlohmann::json info;
  info["epochs"] = epochs;
  info["seed"] = seed;
  info["epoch_cross_entropy"] = result.epoch_cross_entropy;
  info["holdout_accuracy"] = result.holdout_accuracy;
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(result.content_hash));
  info["content_hash"] = buf;
  io::write_file_atomic(out_dir + "/pretrain.json", info.dump(2));
  manifest.set_config(info);
  manifest.add_output(out_dir + "/semantic.params");
  manifest.add_output(out_dir + "/pretrain.json");
  manifest.write();
  std::printf("pretrained semantic net: holdout accuracy %.4f\n", result.holdout_accuracy);
  return 0;
}

int run_training(const std::string& command, const std::string& config_path,
                 const std::string& data_csv, const std::string& semantic_path,
                 const std::string& report_path, const std::string& out_dir, std::uint64_t seed,
                 bool seed_set) {
  RunManifest manifest(command, out_dir);
  nets::TrainConfig cfg = load_train_config(config_path, seed, seed_set);
  if (!config_path.empty()) manifest.add_input(config_path);
  std::vector<sim::Sequence> data = load_datasets(data_csv, manifest);

  nets::ParamSet semantic;
  const nets::ParamSet* semantic_ptr = nullptr;
  if (!semantic_path.empty()) {
    manifest.add_input(semantic_path);
    semantic = nets::load_params(semantic_path);
    semantic_ptr = &semantic;
  }

  std::vector<int> kept;
  const std::vector<int>* kept_ptr = nullptr;
  if (!report_path.empty()) {
    manifest.add_input(report_path);
    const debias::FilterReport report = debias::FilterReport::from_json(io::read_file(report_path));
    for (int i = 0; i < report.total_frames; ++i)
      if (!report.dropped(i)) kept.push_back(i);
    kept_ptr = &kept;
    if (!seed_set) cfg.seed = cfg.seed ^ 0x57A6E200DDull;  // stage 2 restarts from scratch
  }
  manifest.set_config(nlohmann::json::parse(cfg.to_json()));

  nets::Checkpoint ckpt = nets::train_depth_pose(data, cfg, semantic_ptr, {}, kept_ptr);
  nets::save_checkpoint(ckpt, out_dir);
  for (const char* f : {"/manifest.json", "/depth.params", "/pose.params", "/training_log.csv"})
    manifest.add_output(out_dir + f);
  manifest.write();
  std::printf("%s: final loss %.6f over %d iterations -> %s\n", command.c_str(),
              ckpt.history.back().total, ckpt.iterations_run, out_dir.c_str());
  return 0;
}

int cmd_filter(const std::string& ckpt_dir, const std::string& data_csv, int threshold,
               const std::string& out_path) {
  const std::string out_dir = std::filesystem::path(out_path).parent_path().string();
  RunManifest manifest("filter", out_dir.empty() ? "." : out_dir);
  manifest.add_input(ckpt_dir + "/manifest.json");
  std::vector<sim::Sequence> data = load_datasets(data_csv, manifest);
  nets::Checkpoint ckpt = nets::load_checkpoint(ckpt_dir);

  debias::FilterOptions opts;
  opts.threshold = threshold;
  debias::FilterReport report = debias::filter_dataset(
      [&ckpt](const sim::FrameSample& f) { return nets::predict_depth(ckpt, f); }, data,
      ckpt.config.d_max, opts);
  io::write_file_atomic(out_path, report.to_json());
  manifest.set_config({{"threshold", threshold}});
  manifest.add_output(out_path);
  manifest.write();
  std::printf("threshold=%d dropped=%zu/%d kept_fraction=%.4f -> %s\n", report.threshold,
              report.dropped_indices.size(), report.total_frames, report.kept_fraction,
              out_path.c_str());
  return 0;
}

int cmd_eval(const std::string& ckpt_dir, const std::string& data_csv, const std::string& out_dir,
             double cap, bool median_scale) {
  RunManifest manifest("eval", out_dir);
  manifest.add_input(ckpt_dir + "/manifest.json");
  std::vector<sim::Sequence> data = load_datasets(data_csv, manifest);
  nets::Checkpoint ckpt = nets::load_checkpoint(ckpt_dir);
  std::filesystem::create_directories(out_dir);

  eval::EvalOptions opts;
  opts.cap = cap;
  opts.median_scale = median_scale;

  std::string csv = "frame,abs_rel,sq_rel,rmse,rmse_log,delta1,delta2,delta3,pixels\n";
  std::vector<eval::DepthMetrics> per_frame;
  std::map<int, std::vector<eval::DepthMetrics>> per_class_acc;
  std::vector<double> class_avgs;
  int frame_id = 0;
  for (const sim::Sequence& seq : data) {
    for (const sim::FrameSample& frame : seq.frames) {
      const Tensor<float> depth = nets::predict_depth(ckpt, frame);
      Tensor<float> mask = Tensor<float>::zeros(frame.depth_gt.shape());
      for (std::int64_t i = 0; i < mask.size(); ++i) mask[i] = frame.depth_gt[i] > 0 ? 1.0f : 0.0f;
      // bin by the semantic network's prediction when one is present
      const std::vector<std::uint8_t> classes =
          ckpt.semantic.size() ? nets::predict_semantic(ckpt.semantic, frame.image) : frame.semantic_gt;
      eval::ClassBinnedMetrics binned = eval::class_binned(depth, frame.depth_gt, classes, mask, opts);
      per_frame.push_back(binned.global);
      for (const auto& [cls, m] : binned.per_class) per_class_acc[cls].push_back(m);
      class_avgs.push_back(binned.class_average_abs_rel);

      char row[256];
      std::snprintf(row, sizeof(row), "%d,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%lld\n", frame_id,
                    binned.global.abs_rel, binned.global.sq_rel, binned.global.rmse,
                    binned.global.rmse_log, binned.global.delta1, binned.global.delta2,
                    binned.global.delta3, static_cast<long long>(binned.global.pixel_count));
      csv += row;

      char stem[32];
      std::snprintf(stem, sizeof(stem), "depth_%04d", frame_id);
      io::write_pfm(out_dir + "/" + stem + ".pfm", depth);
      Tensor<float> preview = depth_preview(depth);
      std::vector<std::uint8_t> bytes(static_cast<std::size_t>(preview.size()));
      for (std::int64_t i = 0; i < preview.size(); ++i)
        bytes[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(preview[i] * 255.0f);
      io::write_pgm(out_dir + "/preview_" + std::to_string(frame_id) + ".pgm",
                    preview.extent(0), preview.extent(1), bytes);
      manifest.add_output(out_dir + "/" + stem + ".pfm");
      ++frame_id;
    }
  }
  const eval::DepthMetrics agg = eval::aggregate(per_frame);
  char row[256];
  std::snprintf(row, sizeof(row), "aggregate,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%lld\n", agg.abs_rel,
                agg.sq_rel, agg.rmse, agg.rmse_log, agg.delta1, agg.delta2, agg.delta3,
                static_cast<long long>(agg.pixel_count));
  csv += row;
  io::write_file_atomic(out_dir + "/metrics.csv", csv);

  std::string class_csv = "class,abs_rel,sq_rel,rmse,rmse_log,delta1,delta2,delta3,pixels\n";
  double class_avg_abs_rel = 0;
  int class_count = 0;
  for (const auto& [cls, rows] : per_class_acc) {
    const eval::DepthMetrics m = eval::aggregate(rows);
    char line[256];
    std::snprintf(line, sizeof(line), "%s,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%lld\n",
                  sim::class_name(cls), m.abs_rel, m.sq_rel, m.rmse, m.rmse_log, m.delta1, m.delta2,
                  m.delta3, static_cast<long long>(m.pixel_count));
    class_csv += line;
    class_avg_abs_rel += m.abs_rel;
    ++class_count;
  }
  if (class_count) class_avg_abs_rel /= class_count;
  io::write_file_atomic(out_dir + "/class_metrics.csv", class_csv);

  nlohmann::json summary;
  summary["abs_rel"] = agg.abs_rel;
  summary["sq_rel"] = agg.sq_rel;
  summary["rmse"] = agg.rmse;
  summary["rmse_log"] = agg.rmse_log;
  summary["delta1"] = agg.delta1;
  summary["delta2"] = agg.delta2;
  summary["delta3"] = agg.delta3;
  summary["class_average_abs_rel"] = class_avg_abs_rel;
  summary["frames"] = frame_id;
  summary["median_scale"] = median_scale;
  summary["cap"] = cap;
  io::write_file_atomic(out_dir + "/summary.json", summary.dump(2));

  manifest.set_config({{"cap", cap}, {"median_scale", median_scale}});
  manifest.add_output(out_dir + "/metrics.csv");
  manifest.add_output(out_dir + "/class_metrics.csv");
  manifest.add_output(out_dir + "/summary.json");
  manifest.write();
  std::printf("eval: abs_rel %.4f rmse %.4f delta1 %.4f class-avg abs_rel %.4f -> %s\n", agg.abs_rel,
              agg.rmse, agg.delta1, class_avg_abs_rel, out_dir.c_str());
  return 0;
}

int cmd_report(const std::string& path) {
  const std::string text = io::read_file(
      std::filesystem::is_directory(path) ? path + "/manifest.json" : path);
  const nlohmann::json doc = nlohmann::json::parse(text);
  if (doc.contains("per_frame_below_counts")) {
    const debias::FilterReport r = debias::FilterReport::from_json(text);
    std::printf("filter report: threshold=%d frames=%d dropped=%zu flagged=%zu kept_fraction=%.4f\n",
                r.threshold, r.total_frames, r.dropped_indices.size(), r.flagged_indices.size(),
                r.kept_fraction);
    std::printf("dropped:");
    for (int d : r.dropped_indices) std::printf(" %d", d);
    std::printf("\n");
  } else if (doc.contains("iterations_run")) {
    std::printf("checkpoint: %d iterations, final loss %.6f, guidance=%s, semantic_hash=%s\n",
                doc.at("iterations_run").get<int>(), doc.value("final_loss", 0.0),
                doc.at("config").at("guidance_source").get<std::string>().c_str(),
                doc.at("semantic_hash").get<std::string>().c_str());
  } else if (doc.contains("abs_rel")) {
    std::printf("metrics: abs_rel %.4f rmse %.4f delta1 %.4f class-avg %.4f over %d frames\n",
                doc.at("abs_rel").get<double>(), doc.at("rmse").get<double>(),
                doc.at("delta1").get<double>(), doc.value("class_average_abs_rel", 0.0),
                doc.value("frames", 0));
  } else {
    std::printf("%s\n", doc.dump(2).c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"semantically-guided self-supervised monocular depth laboratory"};
  app.require_subcommand(1);

  std::string spec_path, data_csv, holdout_csv, out_path, config_path, semantic_path, ckpt_dir,
      report_path, in_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int epochs = 18;
  int threshold = 10;
  double cap = 80.0;
  bool no_median_scale = false;

  auto add_seed = [&](CLI::App* cmd) {
    cmd->add_option_function<std::uint64_t>(
        "--seed",
        [&](const std::uint64_t& v) {
          seed = v;
          seed_set = true;
        },
        "override the configured seed");
  };

  CLI::App* scene = app.add_subcommand("scene", "render a dataset from a scene spec");
  scene->add_option("--spec", spec_path, "scene spec JSON")->required();
  scene->add_option("--out", out_path, "output dataset directory")->required();
  add_seed(scene);

  CLI::App* pretrain = app.add_subcommand("pretrain-semantic", "supervised semantic pretraining");
  pretrain->add_option("--data", data_csv, "comma-separated dataset dirs")->required();
  pretrain->add_option("--holdout", holdout_csv, "held-out dataset dirs");
  pretrain->add_option("--epochs", epochs, "training epochs");
  pretrain->add_option("--out", out_path, "output directory")->required();
  add_seed(pretrain);

  CLI::App* train = app.add_subcommand("train", "stage-1 self-supervised training");
  train->add_option("--config", config_path, "train config JSON");
  train->add_option("--data", data_csv, "comma-separated dataset dirs")->required();
  train->add_option("--semantic", semantic_path, "frozen semantic .params file");
  train->add_option("--out", out_path, "checkpoint directory")->required();
  add_seed(train);

  CLI::App* filter = app.add_subcommand("filter", "audit below-ground projections and drop frames");
  filter->add_option("--checkpoint", ckpt_dir, "stage-1 checkpoint directory")->required();
  filter->add_option("--data", data_csv, "comma-separated dataset dirs")->required();
  filter->add_option("--threshold", threshold, "below-ground count threshold (default 10)");
  filter->add_option("--out", out_path, "report JSON path")->required();

  CLI::App* retrain = app.add_subcommand("retrain", "stage-2 training on the filtered dataset");
  retrain->add_option("--config", config_path, "train config JSON");
  retrain->add_option("--data", data_csv, "comma-separated dataset dirs")->required();
  retrain->add_option("--semantic", semantic_path, "frozen semantic .params file");
  retrain->add_option("--report", report_path, "filter report JSON")->required();
  retrain->add_option("--out", out_path, "checkpoint directory")->required();
  add_seed(retrain);

  CLI::App* evalc = app.add_subcommand("eval", "depth metrics for a checkpoint");
  evalc->add_option("--checkpoint", ckpt_dir, "checkpoint directory")->required();
  evalc->add_option("--data", data_csv, "comma-separated dataset dirs")->required();
  evalc->add_option("--cap", cap, "depth cap in meters (default 80)");
  evalc->add_flag("--no-median-scale", no_median_scale, "disable median scaling");
  evalc->add_option("--out", out_path, "output directory")->required();

  CLI::App* report = app.add_subcommand("report", "summarize a report, checkpoint or metrics file");
  report->add_option("--in", in_path, "path to summarize")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return 2;
  }

  try {
    if (scene->parsed()) return cmd_scene(spec_path, out_path, seed, seed_set);
    if (pretrain->parsed()) return cmd_pretrain(data_csv, holdout_csv, epochs, seed, out_path);
    if (train->parsed())
      return run_training("train", config_path, data_csv, semantic_path, "", out_path, seed, seed_set);
    if (retrain->parsed())
      return run_training("retrain", config_path, data_csv, semantic_path, report_path, out_path, seed,
                          seed_set);
    if (filter->parsed()) return cmd_filter(ckpt_dir, data_csv, threshold, out_path);
    if (evalc->parsed()) return cmd_eval(ckpt_dir, data_csv, out_path, cap, !no_median_scale);
    if (report->parsed()) return cmd_report(in_path);
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return 3;
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return 2;
  }
  return 2;
}
