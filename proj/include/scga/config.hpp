#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scga/data.hpp"
#include "scga/model.hpp"
#include "scga/training.hpp"

namespace scga {

// Whole-artifact configuration. On disk this is a flat `key = value` file
// (one hyperparameter per line, '#' comments); every key is named after the
// quantity it controls so settings stay auditable. CLI --set key=value
// overrides take precedence over the file.
struct Config {
  std::uint64_t seed = 1;
  ModelConfig model;
  WorldSpec world;
  std::size_t n_train = 500;
  std::size_t n_eval = 100;
  std::size_t epochs = 20;
  std::size_t batch_size = 8;
  std::uint64_t warmup = 10000;
  std::size_t max_steps = 0;
  int beam = 5;
  double length_penalty = 1.0;

  TrainConfig train_config() const;
};

// Applies one key=value assignment; unknown keys or unparsable values throw
// ConfigError naming the key.
void config_set(Config& cfg, const std::string& key, const std::string& value);

Config load_config(const std::string& path);  // missing file -> DataError
std::string dump_config(const Config& cfg);   // round-trippable key = value text

}  // namespace scga
