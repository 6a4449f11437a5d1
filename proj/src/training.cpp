#include "scga/training.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <ostream>

#include "json.hpp"
#include "scga/errors.hpp"

namespace scga {

double lr_schedule(std::uint64_t step, std::size_t d_model, std::uint64_t warmup) {
  if (step == 0) throw std::invalid_argument("lr_schedule: steps are 1-based");
  if (d_model == 0 || warmup == 0) {
    throw std::invalid_argument("lr_schedule: d_model and warmup must be positive");
  }
  const double s = static_cast<double>(step);
  const double w = static_cast<double>(warmup);
  return std::pow(static_cast<double>(d_model), -0.5) *
         std::min(std::pow(s, -0.5), s * std::pow(w, -1.5));
}

EvalMetrics evaluate(ScgaModel& model, const std::vector<DialogueSample>& samples,
                     bool decode) {
  EvalMetrics out;
  std::size_t referent_total = 0, referent_hit = 0;
  std::size_t exact = 0;
  std::size_t steps = 0, correct = 0;
  for (const auto& sample : samples) {
    ScgaModel::TokenStats stats;
    ScgaModel::Encoded enc;
    Tensor loss = model.teacher_forced_loss(sample, ForwardMode::eval(), &stats, &enc);
    out.loss += loss.scalar_value();
    steps += stats.steps;
    correct += stats.correct;
    if (sample.referent >= 0) {
      ++referent_total;
      if (enc.selection.index == static_cast<std::size_t>(sample.referent)) ++referent_hit;
    }
    if (decode) {
      const auto decoded = model.greedy_decode(sample);
      if (decoded.tokens == sample.answer) ++exact;
    }
  }
  const double n = static_cast<double>(samples.size());
  if (!samples.empty()) {
    out.loss /= n;
    out.exact_match = decode ? static_cast<double>(exact) / n : 0.0;
    out.token_acc = steps ? static_cast<double>(correct) / static_cast<double>(steps) : 0.0;
    out.referent_acc =
        referent_total ? static_cast<double>(referent_hit) / static_cast<double>(referent_total)
                       : 0.0;
  }
  return out;
}

std::string metrics_line(const EpochMetrics& m) {
  nlohmann::json j{{"epoch", m.epoch},        {"step", m.step},
                   {"lr", m.lr},              {"train_loss", m.train_loss},
                   {"val_loss", m.val_loss},  {"referent_acc", m.referent_acc},
                   {"exact_match", m.exact_match}};
  return j.dump();
}

TrainResult train(ScgaModel& model, const std::vector<DialogueSample>& train_set,
                  const std::vector<DialogueSample>& val_set, const TrainConfig& cfg,
                  std::ostream* metrics_out, const TrainerState* resume) {
  if (train_set.empty()) throw DataError("train: empty training set");
  if (cfg.batch_size == 0) throw ConfigError("train: batch_size must be positive");

  namespace fs = std::filesystem;
  if (!cfg.out_dir.empty()) fs::create_directories(cfg.out_dir);

  Rng data_rng(cfg.seed);
  TrainerState state;
  if (resume) {
    state = *resume;
    data_rng.set_state(state.data_rng);
    model.rng().set_state(state.model_rng);
  }

  TrainResult result;
  result.best_val_loss = state.best_val_loss;

  std::vector<std::size_t> order(train_set.size());

  for (std::size_t epoch = state.epoch + 1; epoch <= cfg.epochs; ++epoch) {
    // Shuffle from the identity every epoch so the visit order is a pure
    // function of the rng state (which checkpoints persist for resume).
    std::iota(order.begin(), order.end(), std::size_t{0});
    data_rng.shuffle(order);
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    double lr = 0.0;

    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      Tensor batch_loss;
      for (std::size_t i = start; i < end; ++i) {
        Tensor loss = model.teacher_forced_loss(train_set[order[i]], ForwardMode::train());
        batch_loss = batch_loss.defined() ? add(batch_loss, loss) : loss;
      }
      batch_loss = scale(batch_loss, 1.0 / static_cast<double>(end - start));
      const double loss_value = batch_loss.scalar_value();
      if (!std::isfinite(loss_value)) {
        throw NumericError("train: non-finite loss at step " +
                           std::to_string(state.global_step + 1) + " (epoch " +
                           std::to_string(epoch) + ")");
      }
      backward(batch_loss);
      state.global_step += 1;
      lr = lr_schedule(state.global_step, model.config().d, cfg.warmup);
      adam_step(model.params(), lr, cfg.adam);
      epoch_loss += loss_value;
      ++batches;
      if (cfg.max_steps > 0 && state.global_step >= cfg.max_steps) break;
    }

    const EvalMetrics val = evaluate(model, val_set, cfg.decode_eval);
    EpochMetrics m;
    m.epoch = epoch;
    m.step = state.global_step;
    m.lr = lr;
    m.train_loss = batches ? epoch_loss / static_cast<double>(batches) : 0.0;
    m.val_loss = val.loss;
    m.referent_acc = val.referent_acc;
    m.exact_match = val.exact_match;
    result.history.push_back(m);
    if (metrics_out) *metrics_out << metrics_line(m) << '\n' << std::flush;

    state.epoch = epoch;
    state.model_rng = model.rng().state();
    state.data_rng = data_rng.state();
    const bool improved = val_set.empty() ? true : m.val_loss < state.best_val_loss;
    if (improved) state.best_val_loss = m.val_loss;
    if (!cfg.out_dir.empty()) {
      if (improved) save_checkpoint(cfg.out_dir + "/best.ckpt", model.params(), state);
      save_checkpoint(cfg.out_dir + "/last.ckpt", model.params(), state);
    }
    if (cfg.max_steps > 0 && state.global_step >= cfg.max_steps) break;
  }

  result.best_val_loss = state.best_val_loss;
  result.global_step = state.global_step;
  return result;
}

}  // namespace scga
