// Command-line front end: TFR preprocessing, synthetic data generation,
// LOSO training/evaluation, subspace analysis, and the gradient-check
// suite. Exit codes: 0 ok, 1 usage, 2 data error, 3 numerical failure.

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "scpt/analysis.hpp"
#include "scpt/dataset.hpp"
#include "scpt/gradcheck.hpp"
#include "scpt/trainer.hpp"

namespace fs = std::filesystem;
using namespace scpt;

namespace {

constexpr const char* kUsage = R"(usage: scpt_cli <command> [options]

commands:
  tfr <wave.txt> <out.tensor> [--config cfg] [--rows R] [--cols C] [--pgm out.pgm]
      waveform -> Morse CWT -> band crop -> resize -> normalize, saved as
      tensors (values, freq_axis_hz, time_axis_s)
  synth --subjects K --trials M --confound c --seed s <dir>
      write a synthetic dataset directory
  train --config cfg [--fold i|all] <data_dir> <run_dir>
      leave-one-subject-out training; writes per-fold logs, checkpoints,
      features, and results.csv
  eval --checkpoint ckpt --mode train_path|invariant [--config cfg] <data_dir>
      evaluate a checkpoint over a dataset directory (per-subject metrics)
  analyze --run run_dir [--gnuplot]
      pooled singular-direction relevance and CEV reports from the
      features dumped by train
  gradcheck [--seed s]
      finite-difference check of every trainable tensor (tiny profile)
)";

struct Args {
  std::vector<std::string> positional;
  std::map<std::string, std::string> options;

  bool has(const std::string& k) const { return options.count(k) > 0; }
  std::string get(const std::string& k, const std::string& def = "") const {
    auto it = options.find(k);
    return it == options.end() ? def : it->second;
  }
};

Args parse_args(int argc, char** argv, int first, const std::vector<std::string>& known_flags) {
  Args a;
  for (int i = first; i < argc; ++i) {
    std::string arg = argv[i];
    if (arg.rfind("--", 0) == 0) {
      std::string key = arg.substr(2);
      bool known = false;
      for (const auto& f : known_flags) known = known || f == key;
      if (!known) throw UsageError("unknown option --" + key);
      if (i + 1 >= argc) throw UsageError("option --" + key + " needs a value");
      a.options[key] = argv[++i];
    } else {
      a.positional.push_back(arg);
    }
  }
  return a;
}

int cmd_tfr(const Args& a) {
  if (a.positional.size() != 2) throw UsageError("tfr needs <wave.txt> <out.tensor>");
  Config cfg = a.has("config") ? Config::parse_file(a.get("config")) : Config();
  TfrSettings ts = TfrSettings::from_config(cfg);
  const int rows = a.has("rows") ? std::stoi(a.get("rows")) : 224;
  const int cols = a.has("cols") ? std::stoi(a.get("cols")) : 224;

  Waveform w = read_waveform_text(a.positional[0]);
  TFRImage tfr = morse_cwt(w, ts.morse);
  tfr = band_crop(tfr, ts.f_lo, ts.f_hi);
  tfr = resize_bilinear(tfr, rows, cols);
  tfr = normalize_tfr(tfr);

  NamedTensors out;
  out.emplace_back("values", tfr.values);
  out.emplace_back("freq_axis_hz", Tensor({tfr.rows()}, tfr.freq_axis_hz));
  out.emplace_back("time_axis_s", Tensor({tfr.cols()}, tfr.time_axis_s));
  write_tensor_file(a.positional[1], out);
  if (a.has("pgm")) write_tfr_pgm(tfr, a.get("pgm"));
  std::cout << "tfr: " << tfr.rows() << "x" << tfr.cols() << " -> " << a.positional[1] << "\n";
  return 0;
}

int cmd_synth(const Args& a) {
  if (a.positional.size() != 1) throw UsageError("synth needs an output <dir>");
  SynthSpec spec;
  if (a.has("subjects")) spec.num_subjects = std::stoi(a.get("subjects"));
  if (a.has("trials")) spec.trials_per_subject = std::stoi(a.get("trials"));
  if (a.has("confound")) spec.confound_strength = std::stod(a.get("confound"));
  if (a.has("seed")) spec.seed = std::stoull(a.get("seed"));
  std::vector<Sample> trials = synth_dataset(spec);
  write_dataset_dir(trials, spec, a.positional[0]);
  std::cout << "synth: " << trials.size() << " trials (" << spec.num_subjects << " subjects) -> "
            << a.positional[0] << "\n";
  return 0;
}

std::vector<ClipData> load_clips(const std::string& data_dir, const Config& cfg,
                                 const ModelConfig& mcfg) {
  std::vector<Sample> trials = read_dataset_dir(data_dir);
  const double clip_seconds = cfg.get_real("data.clip_seconds");
  std::vector<Sample> clips;
  for (const Sample& t : trials) {
    std::vector<Sample> parts = segment_trial(t, clip_seconds);
    std::move(parts.begin(), parts.end(), std::back_inserter(clips));
  }
  return preprocess_clips(clips, mcfg, TfrSettings::from_config(cfg));
}

int cmd_train(const Args& a) {
  if (a.positional.size() != 2) throw UsageError("train needs <data_dir> <run_dir>");
  if (!a.has("config")) throw UsageError("train needs --config");
  Config cfg = Config::parse_file(a.get("config"));
  ModelConfig mcfg = ModelConfig::from_config(cfg);
  TrainSettings ts = TrainSettings::from_config(cfg);
  const std::string run_dir = a.positional[1];
  fs::create_directories(run_dir);
  cfg.write_file((fs::path(run_dir) / "config.cfg").string());

  std::vector<ClipData> clips = load_clips(a.positional[0], cfg, mcfg);
  LOSOPlan plan = build_loso_clipdata(clips, ts.seed);

  std::vector<int> fold_ids;
  const std::string fold_arg = a.get("fold", "all");
  if (fold_arg == "all") {
    for (size_t i = 0; i < plan.folds.size(); ++i) fold_ids.push_back(static_cast<int>(i));
  } else {
    const int f = std::stoi(fold_arg);
    if (f < 0 || f >= static_cast<int>(plan.folds.size()))
      throw UsageError("fold index outside [0, " + std::to_string(plan.folds.size()) + ")");
    fold_ids.push_back(f);
  }

  std::vector<FoldOutcome> outcomes(fold_ids.size());
  std::vector<std::function<void()>> jobs;
  for (size_t j = 0; j < fold_ids.size(); ++j) {
    jobs.push_back([&, j]() {
      const int fi = fold_ids[j];
      FoldOutcome out = train_fold(clips, plan.folds[static_cast<size_t>(fi)], fi, mcfg, ts);
      const fs::path fold_dir = fs::path(run_dir) / ("fold_" + std::to_string(fi));
      fs::create_directories(fold_dir);
      write_train_log_csv((fold_dir / "train_log.csv").string(), out.log);
      save_checkpoint(out.model, (fold_dir / "checkpoint.tensor").string());
      NamedTensors feats;
      feats.emplace_back("features", out.test_capture.shared_features);
      Tensor labels({static_cast<int>(out.test_capture.labels.size())});
      for (size_t i = 0; i < out.test_capture.labels.size(); ++i)
        labels.data[i] = out.test_capture.labels[i];
      Tensor subjects({static_cast<int>(out.test_capture.subjects.size())});
      for (size_t i = 0; i < out.test_capture.subjects.size(); ++i)
        subjects.data[i] = out.test_capture.subjects[i];
      feats.emplace_back("labels", std::move(labels));
      feats.emplace_back("subjects", std::move(subjects));
      write_tensor_file((fold_dir / "features.tensor").string(), feats);
      outcomes[j] = std::move(out);
      std::printf("fold %d (subject %d): acc_inv=%.4f f1_inv=%.4f best_epoch=%d\n", fi,
                  outcomes[j].test_subject, outcomes[j].test_invariant.acc_mean,
                  outcomes[j].test_invariant.f1_mean, outcomes[j].best_epoch);
    });
  }
  run_jobs(std::move(jobs), std::min<int>(thread_cap(), static_cast<int>(fold_ids.size())));
  write_results_csv((fs::path(run_dir) / "results.csv").string(), outcomes);
  std::cout << "results -> " << (fs::path(run_dir) / "results.csv").string() << "\n";
  return 0;
}

int cmd_eval(const Args& a) {
  if (a.positional.size() != 1) throw UsageError("eval needs <data_dir>");
  if (!a.has("checkpoint")) throw UsageError("eval needs --checkpoint");
  const std::string mode = a.get("mode", "invariant");
  if (mode != "train_path" && mode != "invariant")
    throw UsageError("eval --mode must be train_path or invariant");

  std::string cfg_path = a.get("config");
  if (cfg_path.empty()) {
    const fs::path guess = fs::path(a.get("checkpoint")).parent_path().parent_path() / "config.cfg";
    if (fs::exists(guess)) cfg_path = guess.string();
  }
  Config cfg = cfg_path.empty() ? Config() : Config::parse_file(cfg_path);
  ModelConfig mcfg = ModelConfig::from_config(cfg);
  ModelState model = load_checkpoint(a.get("checkpoint"), mcfg);

  std::vector<ClipData> clips = load_clips(a.positional[0], cfg, mcfg);
  std::vector<int> idx(clips.size());
  for (size_t i = 0; i < clips.size(); ++i) idx[i] = static_cast<int>(i);
  const bool arousal = cfg.get_str("train.target") == "arousal";
  EvalSummary s = evaluate(model, clips, idx, mode == "invariant", arousal);
  std::printf("subject,acc,f1,n\n");
  for (const auto& [subj, m] : s.per_subject) std::printf("%d,%.4f,%.4f,%d\n", subj, m.acc, m.f1, m.n);
  std::printf("mean,%.4f,%.4f,%d\nstd,%.4f,%.4f,\n", s.acc_mean, s.f1_mean, s.n_total, s.acc_std,
              s.f1_std);
  return 0;
}

int cmd_analyze(const Args& a) {
  if (!a.has("run")) throw UsageError("analyze needs --run <run_dir>");
  const fs::path run_dir = a.get("run");
  Config cfg = Config::parse_file((run_dir / "config.cfg").string());
  ModelConfig mcfg = ModelConfig::from_config(cfg);

  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  int dim = -1;
  std::vector<fs::path> fold_dirs;
  for (const auto& e : fs::directory_iterator(run_dir))
    if (e.is_directory() && e.path().filename().string().rfind("fold_", 0) == 0)
      fold_dirs.push_back(e.path());
  std::sort(fold_dirs.begin(), fold_dirs.end());
  for (const fs::path& fd : fold_dirs) {
    NamedTensors ts = read_tensor_file((fd / "features.tensor").string());
    const Tensor* f = find_tensor(ts, "features");
    const Tensor* l = find_tensor(ts, "labels");
    if (!f || !l) throw CorruptFile("features.tensor missing tensors in " + fd.string());
    dim = f->cols();
    for (int i = 0; i < f->rows(); ++i) {
      std::vector<double> row(static_cast<size_t>(dim));
      for (int j = 0; j < dim; ++j) row[static_cast<size_t>(j)] = f->at(i, j);
      rows.push_back(std::move(row));
      labels.push_back(static_cast<int>(l->data[static_cast<size_t>(i)]));
    }
  }
  if (rows.empty()) throw IoError("no fold features found under " + run_dir.string());

  Tensor features({static_cast<int>(rows.size()), dim});
  for (size_t i = 0; i < rows.size(); ++i)
    for (int j = 0; j < dim; ++j) features.at(static_cast<int>(i), j) = rows[i][static_cast<size_t>(j)];

  DirectionReport rep = rank_directions(features, labels, mcfg.svd_rank_eff());
  write_direction_report_csv(rep, (run_dir / "direction_report.csv").string());
  write_cev_csv(rep, (run_dir / "cev.csv").string());
  if (a.has("gnuplot")) write_gnuplot_dat(rep, run_dir.string());
  std::cout << "analyze: " << rows.size() << " samples, " << rep.directions.size()
            << " directions -> " << (run_dir / "direction_report.csv").string() << "\n";
  return 0;
}

int cmd_gradcheck(const Args& a) {
  const uint64_t seed = a.has("seed") ? std::stoull(a.get("seed")) : 42;
  GradCheckResult res = run_gradcheck(seed);
  for (const GradCheckEntry& e : res.per_tensor)
    std::printf("%-34s max_rel_err %.3e\n", e.tensor.c_str(), e.max_rel_err);
  std::printf("gradcheck: max relative error %.3e (%s)\n", res.max_rel_err,
              res.pass ? "PASS" : "FAIL");
  return res.pass ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << kUsage;
    return 1;
  }
  const std::string cmd = argv[1];
  try {
    if (cmd == "tfr")
      return cmd_tfr(parse_args(argc, argv, 2, {"config", "rows", "cols", "pgm"}));
    if (cmd == "synth")
      return cmd_synth(parse_args(argc, argv, 2, {"subjects", "trials", "confound", "seed"}));
    if (cmd == "train") return cmd_train(parse_args(argc, argv, 2, {"config", "fold"}));
    if (cmd == "eval")
      return cmd_eval(parse_args(argc, argv, 2, {"checkpoint", "mode", "config"}));
    if (cmd == "analyze") return cmd_analyze(parse_args(argc, argv, 2, {"run", "gnuplot"}));
    if (cmd == "gradcheck") return cmd_gradcheck(parse_args(argc, argv, 2, {"seed"}));
    std::cerr << "unknown command '" << cmd << "'\n" << kUsage;
    return 1;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n" << kUsage;
    return 1;
  } catch (const NonFinite& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const NonFiniteLoss& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
