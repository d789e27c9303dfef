#include "refrain/config.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "refrain/error.h"

namespace refrain {

namespace {

using nlohmann::json;

std::size_t positive_size(const json& value, const std::string& key) {
  if (!value.is_number_integer() || value.get<long long>() <= 0) {
    throw Error(ErrorCode::kInvalidConfig, key + " must be a positive integer");
  }
  return value.get<std::size_t>();
}

double real_value(const json& value, const std::string& key) {
  if (value.is_string()) {
    // Allows "inf" for thresholds, which plain JSON cannot express.
    const auto text = value.get<std::string>();
    try {
      return std::stod(text);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kInvalidConfig, key + " is not a number: " + text);
    }
  }
  if (!value.is_number()) throw Error(ErrorCode::kInvalidConfig, key + " must be a number");
  return value.get<double>();
}

}  // namespace

void EngineConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::kInvalidConfig, msg); };
  if (!(temperature > 0.0) || !std::isfinite(temperature)) fail("temperature must be > 0");
  if (queue_size == 0) fail("queue_size must be positive");
  if (candidates == 0) fail("candidates must be positive");
  if (clips == 0) fail("clips must be >= 1");
  if (std::isnan(me_threshold) || me_threshold < 0.0) fail("me_threshold must be >= 0");
  if (title_nouns == 0 || title_verbs == 0) fail("title_nouns and title_verbs must be positive");
  if (frames_per_video == 0) fail("frames_per_video must be positive");
  if (min_clip_frames == 0) fail("min_clip_frames must be positive");
  if (recall_ranks.empty()) fail("recall_ranks must not be empty");
  for (auto r : recall_ranks) {
    if (r == 0) fail("recall ranks must be positive");
  }
  if (candidates < max_recall_rank()) {
    fail("candidates (" + std::to_string(candidates) + ") must be >= max recall rank (" +
         std::to_string(max_recall_rank()) + ")");
  }
}

std::size_t EngineConfig::max_recall_rank() const {
  return recall_ranks.empty() ? 0 : *std::max_element(recall_ranks.begin(), recall_ranks.end());
}

EngineConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParseError, std::string("config: ") + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorCode::kParseError, "config must be a JSON object");

  EngineConfig config;
  for (const auto& [key, value] : doc.items()) {
    if (key == "temperature") {
      config.temperature = real_value(value, key);
    } else if (key == "queue_size") {
      config.queue_size = positive_size(value, key);
    } else if (key == "candidates") {
      config.candidates = positive_size(value, key);
    } else if (key == "clips") {
      config.clips = positive_size(value, key);
    } else if (key == "me_threshold") {
      config.me_threshold = real_value(value, key);
    } else if (key == "title_nouns") {
      config.title_nouns = positive_size(value, key);
    } else if (key == "title_verbs") {
      config.title_verbs = positive_size(value, key);
    } else if (key == "frames_per_video") {
      config.frames_per_video = positive_size(value, key);
    } else if (key == "min_clip_frames") {
      config.min_clip_frames = positive_size(value, key);
    } else if (key == "rng_seed") {
      if (!value.is_number_integer()) throw Error(ErrorCode::kInvalidConfig, "rng_seed must be an integer");
      config.rng_seed = value.get<std::uint64_t>();
    } else if (key == "recall_ranks") {
      if (!value.is_array()) throw Error(ErrorCode::kInvalidConfig, "recall_ranks must be an array");
      config.recall_ranks.clear();
      for (const auto& r : value) config.recall_ranks.push_back(positive_size(r, key));
    } else {
      throw Error(ErrorCode::kInvalidConfig, "unknown config key: " + key);
    }
  }
  config.validate();
  return config;
}

EngineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open config " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::string config_to_json(const EngineConfig& config) {
  json doc = {
      {"temperature", config.temperature},
      {"queue_size", config.queue_size},
      {"candidates", config.candidates},
      {"clips", config.clips},
      {"title_nouns", config.title_nouns},
      {"title_verbs", config.title_verbs},
      {"frames_per_video", config.frames_per_video},
      {"min_clip_frames", config.min_clip_frames},
      {"recall_ranks", config.recall_ranks},
      {"rng_seed", config.rng_seed},
  };
  if (std::isinf(config.me_threshold)) {
    doc["me_threshold"] = "inf";
  } else {
    doc["me_threshold"] = config.me_threshold;
  }
  return doc.dump();
}

}  // namespace refrain
