#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "persel/model_config.hpp"
#include "persel/train.hpp"

namespace persel::harness {

/// Full resolved configuration for a train or evaluate run: model family,
/// strategy, persona selection, dims and optimizer settings. Values load
/// from a flat key=value file and individual CLI flags override them.
struct RunConfig {
  std::string family = "hre";
  std::string strategy = "na";
  std::string persona_side = "self";
  std::string persona_version = "original";
  bool ablate_context = false;
  std::uint64_t seed = 0;
  int batch_size = 0;  // 0 = family default
  double lr = 0.0;     // 0 = family default
  int max_epochs = 0;  // 0 = family default
  int patience = 3;
  double dropout = -1.0;  // <0 = family default (0.2 recurrent, 0.1 transformer)
  std::int64_t fixed_dim = 12;
  std::int64_t trained_dim = 8;
  std::int64_t char_dim = 8;
  std::int64_t char_filters = 8;
  std::int64_t hidden_dim = 16;
  std::int64_t ctx_hidden_dim = 16;
  std::int64_t mlp_hidden = 32;
  std::int64_t tf_layers = 2;
  std::int64_t tf_heads = 2;
  std::int64_t tf_dim = 32;
  std::int64_t tf_ff_dim = 64;
  std::int64_t tf_max_len = 320;
  bool tf_subtype = true;
  int threads = 1;
  bool strict = false;
  std::string dtype = "f64";

  /// Applies one key=value assignment; unknown keys and malformed values
  /// are errors naming the key (and line, when from a file).
  void apply(const std::string& key, const std::string& value, const std::string& where);

  matchers::ModelConfig to_model_config() const;
  corpus::PersonaConfig to_persona_config() const;
  TrainOptions to_train_options() const;
  std::map<std::string, std::string> as_map() const;
};

/// Parses a flat key=value text file (# comments and blank lines allowed).
/// An empty path yields all defaults.
RunConfig config_load(const std::string& path);

}  // namespace persel::harness
