#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "scga/data.hpp"
#include "scga/model.hpp"
#include "scga/optim.hpp"

namespace scga {

// Warmup-then-inverse-sqrt schedule:
//   lr(step) = d^{-1/2} * min(step^{-1/2}, step * warmup^{-3/2})
// peaking at step == warmup. Steps are 1-based; step 0 is a contract error.
double lr_schedule(std::uint64_t step, std::size_t d_model, std::uint64_t warmup = 10000);

struct TrainConfig {
  std::uint64_t seed = 1;       // data-order stream (model has its own)
  std::size_t epochs = 20;
  std::size_t batch_size = 8;
  std::uint64_t warmup = 10000;
  std::size_t max_steps = 0;    // stop early when nonzero
  AdamConfig adam;
  bool decode_eval = true;      // greedy exact-match on validation each epoch
  std::string out_dir;          // checkpoints land here when non-empty
};

struct EpochMetrics {
  std::size_t epoch = 0;
  std::size_t step = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double referent_acc = 0.0;
  double exact_match = 0.0;
};

struct EvalMetrics {
  double loss = 0.0;
  double referent_acc = 0.0;  // over samples with a planted referent
  double exact_match = 0.0;   // greedy decode == target answer
  double token_acc = 0.0;     // teacher-forced per-step accuracy
};

// Frozen-model evaluation (dropout off, argmax selection).
EvalMetrics evaluate(ScgaModel& model, const std::vector<DialogueSample>& samples,
                     bool decode);

struct TrainResult {
  std::vector<EpochMetrics> history;
  double best_val_loss = 0.0;
  std::size_t global_step = 0;
};

// Shuffled mini-batch training with the warmup schedule, per-epoch validation,
// and best-checkpoint retention. Metrics lines (one JSON object per epoch)
// stream to `metrics_out` when given. `resume` continues a run from a loaded
// checkpoint: optimizer moments live in the parameter store, and both rng
// stream positions are restored so the trajectory matches an unbroken run.
// Non-finite losses abort with NumericError.
TrainResult train(ScgaModel& model, const std::vector<DialogueSample>& train_set,
                  const std::vector<DialogueSample>& val_set, const TrainConfig& cfg,
                  std::ostream* metrics_out = nullptr,
                  const TrainerState* resume = nullptr);

std::string metrics_line(const EpochMetrics& m);

}  // namespace scga
