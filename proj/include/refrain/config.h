#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace refrain {

// Engine-wide knobs. Every field maps onto one key of the config file.
struct EngineConfig {
  double temperature = 0.07;        // contrastive softmax temperature
  std::size_t queue_size = 1024;    // momentum queue capacity
  std::size_t candidates = 16;      // stage-1 candidate count k
  std::size_t clips = 3;            // clips per candidate w (voters = w + 1)
  double me_threshold = 0.0;        // repetition fires when ME > threshold
  std::size_t title_nouns = 2;
  std::size_t title_verbs = 2;
  std::size_t frames_per_video = 8;
  std::vector<std::size_t> recall_ranks = {1, 5, 10};
  std::uint64_t rng_seed = 0;
  std::size_t min_clip_frames = 1;  // shorter segments merge into a neighbour

  // Throws Error(kInvalidConfig) when an invariant is violated.
  void validate() const;

  std::size_t max_recall_rank() const;
};

// Parses a flat JSON object whose keys are the EngineConfig field names.
// Missing keys keep their defaults; unknown keys are rejected.
EngineConfig parse_config(const std::string& text);
EngineConfig load_config(const std::string& path);
std::string config_to_json(const EngineConfig& config);

}  // namespace refrain
