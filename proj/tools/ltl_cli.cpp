// ltl: command-line front end for the LiDAR transfer-learning pipeline.
#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "ltl/config.hpp"
#include "ltl/pipeline.hpp"
#include "ltl/synth.hpp"

namespace fs = std::filesystem;

namespace {

void print_eval(const std::string& label, const ltl::EvalReport& e) {
  std::printf("%s: samples=%zu acc=%.4f maf1=%.4f\n", label.c_str(), e.samples, e.micro_f1, e.macro_f1);
  std::printf("  confusion (rows truth car/ped/cyc):\n");
  for (const auto& row : e.confusion) std::printf("    %6zu %6zu %6zu\n", row[0], row[1], row[2]);
}

void print_report(const ltl::RunReport& r) {
  const auto& c = r.counters;
  std::printf("mode=%s frames=%zu skipped=%zu clusters=%zu prelabels=%zu confirmed_tracks=%zu\n",
              std::string(ltl::to_string(r.mode)).c_str(), c.frames, c.skipped_frames, c.clusters, c.prelabels,
              c.tracks_confirmed);
  std::printf("samples emitted=%zu undersampled=%zu learned=%zu\n", c.samples_emitted, c.samples_undersampled,
              c.samples_learned);
  for (const auto& cp : r.series)
    if (cp.eval) std::printf("  checkpoint %zu: acc=%.4f maf1=%.4f\n", cp.learned, cp.eval->micro_f1, cp.eval->macro_f1);
  if (r.final_eval) print_eval("final", *r.final_eval);
}

int cmd_run(const std::string& config_path, const std::optional<std::string>& mode, const std::optional<std::uint64_t>& seed,
            const std::optional<std::string>& checkpoint_dir, const std::optional<std::string>& report,
            const std::optional<std::string>& timing, const std::optional<std::string>& dump) {
  ltl::RunConfig config = ltl::load_config(config_path);
  if (mode) config.mode = ltl::parse_mode(*mode);
  if (seed) config.forest.seed = *seed;
  if (checkpoint_dir) config.checkpoint_dir = *checkpoint_dir;
  if (dump) config.feature_dump = *dump;
  const auto result = ltl::run_online(config);
  print_report(result.report);
  if (report) ltl::write_report_csv(*report, result.report);
  if (timing) ltl::write_timing_csv(*timing, result.report);
  return 0;
}

int cmd_eval(const std::string& model_path, const std::string& test_path) {
  const auto model = ltl::OnlineRandomForest::load(fs::path(model_path));
  fs::path test = test_path;
  if (fs::is_directory(test)) test /= "test_features.csv";
  print_eval("eval", ltl::evaluate(model, ltl::read_features_csv(test)));
  return 0;
}

int cmd_synth(const std::string& scenario, const std::string& out_dir, const std::optional<std::uint64_t>& seed) {
  const fs::path out = out_dir;
  fs::create_directories(out);
  ltl::SceneParams train_params = ltl::scenario(scenario);
  if (seed) train_params.seed = *seed;
  ltl::SceneParams test_params = ltl::scenario("test");
  if (seed) test_params.seed = *seed + 7919;

  ltl::RunConfig config;
  const auto train = ltl::generate_scene(train_params);
  ltl::write_sequence(out / "train", train, ltl::SceneGenerator::kitti_like_calibration());
  ltl::write_features_csv(out / "train_features.csv",
                          ltl::ground_truth_features(train, config.cluster, config.filter));
  const auto test = ltl::generate_scene(test_params);
  ltl::write_features_csv(out / "test_features.csv", ltl::ground_truth_features(test, config.cluster, config.filter, 3));

  config.train_dir = "train";
  config.test_features = "test_features.csv";
  config.train_features = "train_features.csv";
  std::ofstream(out / "config.txt") << ltl::format_config(config);
  std::printf("wrote %zu training frames and config to %s\n", train.size(), out.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ltl: online LiDAR classifier trained from image detections"};
  app.require_subcommand(1);

  std::string config_path, model_path, test_path, scenario = "default", out_dir;
  std::optional<std::string> mode, checkpoint_dir, report, timing, dump;
  std::optional<std::uint64_t> seed, synth_seed;

  auto* run = app.add_subcommand("run", "run the online learning loop");
  run->add_option("--config", config_path, "config file")->required()->check(CLI::ExistingFile);
  run->add_option("--mode", mode, "full | no-tracker | volumetric-only | orf-only");
  run->add_option("--seed", seed, "forest seed");
  run->add_option("--checkpoint-dir", checkpoint_dir, "where model checkpoints go");
  run->add_option("--report", report, "per-checkpoint metrics CSV");
  run->add_option("--timing", timing, "per-stage timing CSV");
  run->add_option("--dump-features", dump, "debug: write every learned feature vector as CSV");

  auto* eval = app.add_subcommand("eval", "score a saved model");
  eval->add_option("--model", model_path, "checkpoint file")->required()->check(CLI::ExistingFile);
  eval->add_option("--test", test_path, "feature CSV or directory holding test_features.csv")->required();

  auto* synth = app.add_subcommand("synth", "write a synthetic dataset");
  synth->add_option("--scenario", scenario, "default | small");
  synth->add_option("--out", out_dir, "output directory")->required();
  synth->add_option("--seed", synth_seed, "scene seed");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(config_path, mode, seed, checkpoint_dir, report, timing, dump);
    if (*eval) return cmd_eval(model_path, test_path);
    if (*synth) return cmd_synth(scenario, out_dir, synth_seed);
  } catch (const std::exception& e) {
    std::cerr << "ltl: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
