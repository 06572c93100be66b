#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "scpt/dataset.hpp"
#include "scpt/forward.hpp"
#include "scpt/loso.hpp"

namespace scpt {

// Decoupled-weight-decay adaptive-moment optimizer over the trainable
// ("train.") tensors only; frozen tensors are never touched.
class AdamW {
 public:
  AdamW(ModelState& m, double weight_decay, double beta1 = 0.9, double beta2 = 0.999,
        double eps = 1e-8);
  void step(double lr);

 private:
  ModelState& m_;
  double wd_, beta1_, beta2_, eps_;
  int64_t t_ = 0;
  std::vector<Tensor> m1_, m2_;  // aligned with the entry list (frozen slots empty)
};

// cosine annealing toward zero over `epochs`, evaluated at epoch e in [0, epochs)
double cosine_lr(double base_lr, int epoch, int epochs);

struct TrainSettings {
  double lr = 1e-4;
  double weight_decay = 0.01;
  int epochs = 100;
  int batch_size = 32;
  uint64_t seed = 1;
  bool target_arousal = true;  // false = valence
  LossWeights weights;
  LossNorm norm = LossNorm::kMean;

  static TrainSettings from_config(const Config& cfg);
};

struct Metrics {
  double acc = 0.0;
  double f1 = 0.0;
  int n = 0;
};

// per-subject metrics plus their mean and (sample) standard deviation
struct EvalSummary {
  std::vector<std::pair<int, Metrics>> per_subject;
  double acc_mean = 0.0, acc_std = 0.0;
  double f1_mean = 0.0, f1_std = 0.0;
  int n_total = 0;
};

Metrics binary_metrics(const std::vector<int>& predictions, const std::vector<int>& labels);
EvalSummary summarize_per_subject(const std::vector<int>& predictions, const std::vector<int>& labels,
                                  const std::vector<int>& subjects);

struct EvalCapture {
  Tensor shared_features;  // n x D, mean shared correction of the class row
  std::vector<int> labels;
  std::vector<int> subjects;
};

// Runs the model over the indexed clips. invariant_mode drops the
// specific branch; capture (optional) collects analysis features.
EvalSummary evaluate(ModelState& m, const std::vector<ClipData>& clips, const std::vector<int>& idx,
                     bool invariant_mode, bool target_arousal, EvalCapture* capture = nullptr);

struct EpochLog {
  int epoch = 0;
  double lr = 0.0;
  double task = 0.0, specific = 0.0, orth = 0.0, sub = 0.0, total = 0.0;
  double val_acc = 0.0, val_f1 = 0.0;
};

struct FoldOutcome {
  int fold_index = -1;
  int test_subject = -1;
  ModelState model;  // best-validation-accuracy parameters
  std::vector<EpochLog> log;
  int best_epoch = -1;
  double best_val_acc = 0.0;
  EvalSummary test_train_path;
  EvalSummary test_invariant;
  EvalCapture test_capture;  // from the train-path test evaluation
};

// Trains one LOSO fold from a fresh model (seed offset by fold index),
// keeps the best-validation checkpoint, and evaluates the held-out
// subject in both inference modes.
FoldOutcome train_fold(const std::vector<ClipData>& clips, const LOSOFold& fold, int fold_index,
                       const ModelConfig& mcfg, const TrainSettings& ts);

// Fixed-size worker pool; jobs run in index order batches. Rethrows the
// first job exception after joining.
void run_jobs(std::vector<std::function<void()>> jobs, int threads);

// SCPT_THREADS environment cap (defaults to hardware concurrency).
int thread_cap();

// CSV writers for the run directory.
void write_train_log_csv(const std::string& path, const std::vector<EpochLog>& log);
void write_results_csv(const std::string& path, const std::vector<FoldOutcome>& folds);

}  // namespace scpt
