#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "scga/rng.hpp"
#include "scga/tensor.hpp"

namespace scga {

// A named trainable tensor with its Adam moment buffers. Moments start at
// zero and the per-parameter step count at 0.
struct Parameter {
  std::string name;
  Tensor tensor;
  std::vector<double> m;  // first moment
  std::vector<double> v;  // second moment
  std::uint64_t steps = 0;
};

// Registry of parameters in creation order. Creation order is the iteration
// and serialization order, which keeps runs and checkpoints deterministic.
class ParameterStore {
 public:
  // uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) init for projection matrices.
  Parameter& uniform(const std::string& name, Shape shape, std::size_t fan_in, Rng& rng);
  Parameter& zeros(const std::string& name, Shape shape);
  Parameter& ones(const std::string& name, Shape shape);

  Parameter* find(std::string_view name);
  const std::vector<std::unique_ptr<Parameter>>& items() const { return items_; }
  std::size_t count() const { return items_.size(); }
  std::size_t total_size() const;
  void zero_all_grads();

 private:
  Parameter& emplace(const std::string& name, Shape shape, std::vector<double> data);
  std::vector<std::unique_ptr<Parameter>> items_;
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.98;
  double eps = 1e-9;
};

// Bias-corrected Adam update over every parameter in the store; gradients
// are zeroed afterwards. A parameter whose gradient buffer was never
// populated by backward() is a contract violation.
void adam_step(ParameterStore& params, double lr, const AdamConfig& cfg = {});

// ---- checkpointing ---------------------------------------------------------
//
// Single binary file, version header "SCGA-CKPT-1". Little-endian throughout:
//   "SCGA-CKPT-1\n"
//   u64 parameter count
//   per parameter: u32 name length, name bytes, u32 ndim, u64 dims...,
//                  u64 step count, f64[data], f64[m], f64[v]
//   trainer state: u64 global step, u64 epoch, f64 best validation loss,
//                  4 x u64 model rng state, 4 x u64 data rng state

struct TrainerState {
  std::uint64_t global_step = 0;
  std::uint64_t epoch = 0;
  double best_val_loss = std::numeric_limits<double>::infinity();
  std::array<std::uint64_t, 4> model_rng{};
  std::array<std::uint64_t, 4> data_rng{};
};

void save_checkpoint(const std::string& path, const ParameterStore& params,
                     const TrainerState& state);
// Loads into an already-constructed store; names and shapes must match.
TrainerState load_checkpoint(const std::string& path, ParameterStore& params);

}  // namespace scga
