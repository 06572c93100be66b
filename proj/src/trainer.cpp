#include "scpt/trainer.hpp"

#include "scpt/encoders.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <thread>

namespace scpt {

AdamW::AdamW(ModelState& m, double weight_decay, double beta1, double beta2, double eps)
    : m_(m), wd_(weight_decay), beta1_(beta1), beta2_(beta2), eps_(eps) {
  m1_.resize(m.params.size());
  m2_.resize(m.params.size());
  for (size_t i = 0; i < m.params.size(); ++i) {
    const auto& e = m.params.entries()[i];
    if (!e.frozen) {
      m1_[i] = Tensor(e.value.shape);
      m2_[i] = Tensor(e.value.shape);
    }
  }
}

void AdamW::step(double lr) {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (size_t i = 0; i < m_.params.size(); ++i) {
    auto& e = m_.params.entries()[i];
    if (e.frozen) continue;
    Tensor& m1 = m1_[i];
    Tensor& m2 = m2_[i];
    for (int64_t j = 0; j < e.value.numel(); ++j) {
      const double g = e.grad.data[j];
      m1.data[j] = beta1_ * m1.data[j] + (1.0 - beta1_) * g;
      m2.data[j] = beta2_ * m2.data[j] + (1.0 - beta2_) * g * g;
      const double mhat = m1.data[j] / bc1;
      const double vhat = m2.data[j] / bc2;
      e.value.data[j] -= lr * (mhat / (std::sqrt(vhat) + eps_) + wd_ * e.value.data[j]);
    }
  }
}

double cosine_lr(double base_lr, int epoch, int epochs) {
  if (epochs <= 1) return base_lr;
  return base_lr * 0.5 *
         (1.0 + std::cos(3.14159265358979323846 * static_cast<double>(epoch) /
                         static_cast<double>(epochs)));
}

TrainSettings TrainSettings::from_config(const Config& cfg) {
  TrainSettings ts;
  ts.lr = cfg.get_real("train.lr");
  ts.weight_decay = cfg.get_real("train.weight_decay");
  ts.epochs = cfg.get_int("train.epochs");
  ts.batch_size = cfg.get_int("train.batch_size");
  ts.seed = static_cast<uint64_t>(cfg.get_int("train.seed"));
  const std::string& target = cfg.get_str("train.target");
  if (target == "arousal")
    ts.target_arousal = true;
  else if (target == "valence")
    ts.target_arousal = false;
  else
    throw ConfigError("train.target must be valence or arousal, got '" + target + "'");
  if (cfg.get_str("train.schedule") != "cosine")
    throw ConfigError("train.schedule: only 'cosine' is supported");
  ts.weights.lambda1 = cfg.get_real("loss.lambda1");
  ts.weights.lambda2 = cfg.get_real("loss.lambda2");
  ts.weights.lambda3 = cfg.get_real("loss.lambda3");
  ts.weights.validate();
  ts.norm = parse_loss_norm(cfg.get_str("loss.normalization"));
  if (ts.epochs < 0 || ts.batch_size < 1 || !(ts.lr > 0.0))
    throw ConfigError("train: epochs >= 0, batch_size >= 1, lr > 0 required");
  return ts;
}

Metrics binary_metrics(const std::vector<int>& predictions, const std::vector<int>& labels) {
  if (predictions.size() != labels.size() || predictions.empty())
    throw EmptyEvalSet("binary_metrics: empty or mismatched inputs");
  int correct = 0, tp = 0, fp = 0, fn = 0;
  for (size_t i = 0; i < predictions.size(); ++i) {
    if (predictions[i] == labels[i]) ++correct;
    if (predictions[i] == 1 && labels[i] == 1) ++tp;
    if (predictions[i] == 1 && labels[i] == 0) ++fp;
    if (predictions[i] == 0 && labels[i] == 1) ++fn;
  }
  Metrics m;
  m.n = static_cast<int>(predictions.size());
  m.acc = static_cast<double>(correct) / m.n;
  if (tp == 0) {
    m.f1 = 0.0;  // no true positives: F1 defined as 0
  } else {
    const double prec = static_cast<double>(tp) / (tp + fp);
    const double rec = static_cast<double>(tp) / (tp + fn);
    m.f1 = 2.0 * prec * rec / (prec + rec);
  }
  return m;
}

EvalSummary summarize_per_subject(const std::vector<int>& predictions, const std::vector<int>& labels,
                                  const std::vector<int>& subjects) {
  if (predictions.empty()) throw EmptyEvalSet("summarize_per_subject: empty");
  std::map<int, std::vector<size_t>> by_subject;
  for (size_t i = 0; i < subjects.size(); ++i) by_subject[subjects[i]].push_back(i);
  EvalSummary s;
  s.n_total = static_cast<int>(predictions.size());
  for (const auto& [subj, idx] : by_subject) {
    std::vector<int> p, l;
    for (size_t i : idx) {
      p.push_back(predictions[i]);
      l.push_back(labels[i]);
    }
    s.per_subject.emplace_back(subj, binary_metrics(p, l));
  }
  const size_t k = s.per_subject.size();
  for (const auto& [subj, m] : s.per_subject) {
    s.acc_mean += m.acc / static_cast<double>(k);
    s.f1_mean += m.f1 / static_cast<double>(k);
  }
  if (k > 1) {
    double va = 0.0, vf = 0.0;
    for (const auto& [subj, m] : s.per_subject) {
      va += (m.acc - s.acc_mean) * (m.acc - s.acc_mean);
      vf += (m.f1 - s.f1_mean) * (m.f1 - s.f1_mean);
    }
    s.acc_std = std::sqrt(va / static_cast<double>(k - 1));
    s.f1_std = std::sqrt(vf / static_cast<double>(k - 1));
  }
  return s;
}

namespace {

int clip_label(const ClipData& c, bool target_arousal) {
  return target_arousal ? c.label_arousal : c.label_valence;
}

Tensor eval_frames(const ClipData& c, int t) {
  std::vector<Tensor> all;
  const int f = c.frames.shape[0];
  all.reserve(static_cast<size_t>(f));
  for (int i = 0; i < f; ++i) all.push_back(frame_of(c.frames, i));
  return sample_frames(all, t, SampleMode::kEval, nullptr);
}

Tensor train_frames(const ClipData& c, int t, Rng& rng) {
  std::vector<Tensor> all;
  const int f = c.frames.shape[0];
  all.reserve(static_cast<size_t>(f));
  for (int i = 0; i < f; ++i) all.push_back(frame_of(c.frames, i));
  return sample_frames(all, t, SampleMode::kTrain, &rng);
}

}  // namespace

EvalSummary evaluate(ModelState& m, const std::vector<ClipData>& clips, const std::vector<int>& idx,
                     bool invariant_mode, bool target_arousal, EvalCapture* capture) {
  if (idx.empty()) throw EmptyEvalSet("evaluate: no samples");
  std::vector<int> preds, labels, subjects;
  if (capture) {
    capture->shared_features = Tensor({static_cast<int>(idx.size()), m.cfg.dim});
    capture->labels.clear();
    capture->subjects.clear();
  }
  for (size_t i = 0; i < idx.size(); ++i) {
    const ClipData& c = clips[static_cast<size_t>(idx[i])];
    Graph g;
    ModelBinding mb(g, m);
    ForwardOptions opt;
    opt.specific_active = !invariant_mode;
    ForwardResult fwd = scpt_forward(mb, eval_frames(c, m.cfg.frames_per_clip), c.tfr, opt);
    const Tensor& logits = g.val(fwd.logits);
    int pred = 0;
    for (int j = 1; j < logits.cols(); ++j)
      if (logits.at(0, j) > logits.at(0, pred)) pred = j;
    preds.push_back(pred);
    labels.push_back(clip_label(c, target_arousal));
    subjects.push_back(c.subject_id);
    if (capture) {
      if (fwd.shared_cls_mean >= 0) {
        const Tensor& feat = g.val(fwd.shared_cls_mean);
        for (int j = 0; j < m.cfg.dim; ++j) capture->shared_features.at(static_cast<int>(i), j) = feat.at(0, j);
      }
      capture->labels.push_back(labels.back());
      capture->subjects.push_back(c.subject_id);
    }
  }
  return summarize_per_subject(preds, labels, subjects);
}

FoldOutcome train_fold(const std::vector<ClipData>& clips, const LOSOFold& fold, int fold_index,
                       const ModelConfig& mcfg, const TrainSettings& ts) {
  FoldOutcome out;
  out.fold_index = fold_index;
  out.test_subject = fold.test_subject;

  // subject label space: training subjects of this fold only
  std::set<int> train_subject_set;
  for (int i : fold.train_ids) train_subject_set.insert(clips[static_cast<size_t>(i)].subject_id);
  std::map<int, int> subject_index;
  for (int s : train_subject_set) subject_index[s] = static_cast<int>(subject_index.size());

  const uint64_t fold_seed = ts.seed + static_cast<uint64_t>(fold_index);
  ModelState model = ModelState::init(mcfg, fold_seed, static_cast<int>(subject_index.size()));
  ModelState best = model;
  out.best_val_acc = -1.0;

  AdamW optimizer(model, ts.weight_decay);
  Rng shuffle_rng(mix_seed(fold_seed, 0xe90c7u));
  std::vector<int> order = fold.train_ids;

  const bool invariant_val = mcfg.dssa;  // validate in deployment mode
  for (int epoch = 0; epoch < ts.epochs; ++epoch) {
    for (size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[static_cast<size_t>(shuffle_rng.uniform_int(static_cast<int64_t>(i)))]);

    EpochLog log;
    log.epoch = epoch;
    log.lr = cosine_lr(ts.lr, epoch, ts.epochs);
    int seen = 0;

    for (size_t start = 0; start < order.size(); start += static_cast<size_t>(ts.batch_size)) {
      const size_t end = std::min(order.size(), start + static_cast<size_t>(ts.batch_size));
      const double inv_batch = 1.0 / static_cast<double>(end - start);
      model.zero_grads();
      for (size_t bi = start; bi < end; ++bi) {
        const ClipData& c = clips[static_cast<size_t>(order[bi])];
        Rng frame_rng(mix_seed(fold_seed, 0xf7a3e5u, static_cast<uint64_t>(epoch),
                               static_cast<uint64_t>(order[bi])));
        Graph g;
        ModelBinding mb(g, model);
        ForwardOptions opt;  // training path
        ForwardResult fwd =
            scpt_forward(mb, train_frames(c, mcfg.frames_per_clip, frame_rng), c.tfr, opt);
        const int sub_label = mcfg.dssa ? subject_index.at(c.subject_id) : -1;
        LossVars lv = build_loss(mb, fwd, clip_label(c, ts.target_arousal), sub_label, ts.weights, ts.norm);
        LossReport rep = read_loss_report(g, lv, fwd, ts.weights, ts.norm);
        if (!std::isfinite(rep.total))
          throw NonFiniteLoss("train_fold: non-finite loss at epoch " + std::to_string(epoch));
        g.backward(lv.total, inv_batch);
        log.task += rep.task;
        log.specific += rep.specific;
        log.orth += rep.orth;
        log.sub += rep.sub;
        log.total += rep.total;
        ++seen;
      }
      optimizer.step(log.lr);
    }
    if (seen > 0) {
      log.task /= seen;
      log.specific /= seen;
      log.orth /= seen;
      log.sub /= seen;
      log.total /= seen;
    }

    EvalSummary val = evaluate(model, clips, fold.val_ids, invariant_val, ts.target_arousal);
    // single pooled accuracy drives checkpoint selection
    std::vector<int> vp, vl, vs;
    (void)vp;
    log.val_acc = 0.0;
    int val_n = 0, val_correct = 0;
    for (const auto& [subj, m] : val.per_subject) {
      val_correct += static_cast<int>(std::lround(m.acc * m.n));
      val_n += m.n;
    }
    log.val_acc = val_n > 0 ? static_cast<double>(val_correct) / val_n : 0.0;
    log.val_f1 = val.f1_mean;
    out.log.push_back(log);

    if (log.val_acc > out.best_val_acc) {
      out.best_val_acc = log.val_acc;
      out.best_epoch = epoch;
      best = model;
    }
  }

  if (ts.epochs == 0) best = model;
  out.model = std::move(best);
  out.test_train_path =
      evaluate(out.model, clips, fold.test_ids, false, ts.target_arousal, &out.test_capture);
  out.test_invariant = evaluate(out.model, clips, fold.test_ids, true, ts.target_arousal);
  return out;
}

void run_jobs(std::vector<std::function<void()>> jobs, int threads) {
  if (threads < 1) threads = 1;
  std::atomic<size_t> next{0};
  std::mutex err_mutex;
  std::exception_ptr first_error;
  auto worker = [&]() {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      try {
        jobs[i]();
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);
}

int thread_cap() {
  if (const char* env = std::getenv("SCPT_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

void write_train_log_csv(const std::string& path, const std::vector<EpochLog>& log) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "epoch,lr,task,specific,orth,sub,total,val_acc,val_f1\n";
  out.precision(10);
  for (const EpochLog& e : log)
    out << e.epoch << "," << e.lr << "," << e.task << "," << e.specific << "," << e.orth << ","
        << e.sub << "," << e.total << "," << e.val_acc << "," << e.val_f1 << "\n";
}

void write_results_csv(const std::string& path, const std::vector<FoldOutcome>& folds) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "fold,test_subject,n_test,acc_train_path,f1_train_path,acc_invariant,f1_invariant\n";
  out.precision(10);
  auto fold_metrics = [](const EvalSummary& s) {
    // one test subject per fold: per_subject has a single entry
    return s.per_subject.front().second;
  };
  double sum_a[2] = {0, 0}, sum_f[2] = {0, 0};
  std::vector<double> accs[2], f1s[2];
  for (const FoldOutcome& f : folds) {
    const Metrics mt = fold_metrics(f.test_train_path);
    const Metrics mi = fold_metrics(f.test_invariant);
    out << f.fold_index << "," << f.test_subject << "," << mt.n << "," << mt.acc << "," << mt.f1
        << "," << mi.acc << "," << mi.f1 << "\n";
    accs[0].push_back(mt.acc);
    accs[1].push_back(mi.acc);
    f1s[0].push_back(mt.f1);
    f1s[1].push_back(mi.f1);
    sum_a[0] += mt.acc;
    sum_a[1] += mi.acc;
    sum_f[0] += mt.f1;
    sum_f[1] += mi.f1;
  }
  const double k = static_cast<double>(folds.size());
  auto stddev = [&](const std::vector<double>& v, double mean) {
    if (v.size() < 2) return 0.0;
    double acc = 0.0;
    for (double x : v) acc += (x - mean) * (x - mean);
    return std::sqrt(acc / (static_cast<double>(v.size()) - 1.0));
  };
  out << "mean,,," << sum_a[0] / k << "," << sum_f[0] / k << "," << sum_a[1] / k << ","
      << sum_f[1] / k << "\n";
  out << "std,,," << stddev(accs[0], sum_a[0] / k) << "," << stddev(f1s[0], sum_f[0] / k) << ","
      << stddev(accs[1], sum_a[1] / k) << "," << stddev(f1s[1], sum_f[1] / k) << "\n";
}

}  // namespace scpt
