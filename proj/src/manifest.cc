#include "refrain/manifest.h"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "json.hpp"

namespace refrain {

namespace {

using nlohmann::json;

std::string require_string(const json& doc, const char* key, std::size_t line) {
  if (!doc.contains(key) || !doc[key].is_string()) {
    throw Error(ErrorCode::kParseError,
                "manifest line " + std::to_string(line) + ": missing string field '" + key + "'");
  }
  return doc[key].get<std::string>();
}

}  // namespace

std::vector<const ManifestRecord*> DatasetManifest::split(Split which) const {
  std::vector<const ManifestRecord*> out;
  for (const auto& r : records) {
    if (r.split == which) out.push_back(&r);
  }
  return out;
}

DatasetManifest parse_manifest(const std::string& text, const std::string& base_dir) {
  DatasetManifest manifest;
  manifest.base_dir = base_dir;
  std::unordered_set<std::string> ids;
  std::istringstream in(text);
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (raw.find_first_not_of(" \t\r") == std::string::npos) continue;
    json doc;
    try {
      doc = json::parse(raw);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::kParseError, "manifest line " + std::to_string(line) + ": " + e.what());
    }
    if (!doc.is_object()) {
      throw Error(ErrorCode::kParseError, "manifest line " + std::to_string(line) + ": expected an object");
    }
    ManifestRecord rec;
    rec.line = line;
    rec.video_id = require_string(doc, "video_id", line);
    rec.frames = require_string(doc, "frames", line);
    const auto split = doc.contains("split") ? require_string(doc, "split", line) : std::string("test");
    if (split == "train") {
      rec.split = Split::kTrain;
    } else if (split == "test") {
      rec.split = Split::kTest;
    } else {
      throw Error(ErrorCode::kParseError,
                  "manifest line " + std::to_string(line) + ": split must be train or test");
    }
    if (doc.contains("captions")) {
      if (!doc["captions"].is_array()) {
        throw Error(ErrorCode::kParseError, "manifest line " + std::to_string(line) + ": captions must be a list");
      }
      for (const auto& c : doc["captions"]) {
        if (!c.is_string()) {
          throw Error(ErrorCode::kParseError, "manifest line " + std::to_string(line) + ": captions must be strings");
        }
        rec.captions.push_back(c.get<std::string>());
      }
    }
    if (rec.video_id.empty()) {
      throw Error(ErrorCode::kValidationError, "manifest line " + std::to_string(line) + ": empty video_id");
    }
    if (!ids.insert(rec.video_id).second) {
      throw Error(ErrorCode::kDuplicateId,
                  "manifest line " + std::to_string(line) + ": video_id '" + rec.video_id + "'");
    }
    if (rec.split == Split::kTest && rec.captions.empty()) {
      throw Error(ErrorCode::kValidationError,
                  "manifest line " + std::to_string(line) + ": test record '" + rec.video_id + "' has no captions");
    }
    manifest.records.push_back(std::move(rec));
  }
  return manifest;
}

DatasetManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open manifest " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  auto dir = std::filesystem::path(path).parent_path().string();
  return parse_manifest(buffer.str(), dir.empty() ? "." : dir);
}

std::string render_manifest_record(const ManifestRecord& record) {
  nlohmann::ordered_json doc;
  doc["video_id"] = record.video_id;
  doc["frames"] = record.frames;
  doc["captions"] = record.captions;
  doc["split"] = record.split == Split::kTrain ? "train" : "test";
  return doc.dump();
}

std::vector<std::string> FrameResolver::read_items(const DatasetManifest& manifest,
                                                   const ManifestRecord& record) {
  const auto path = std::filesystem::path(manifest.base_dir) / record.frames;
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kStoreIncomplete, "cannot open frame list " + path.string());
  std::vector<std::string> items;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) items.push_back(line);
  }
  return items;
}

FrameSet FrameResolver::resolve(const DatasetManifest& manifest, const ManifestRecord& record,
                                std::size_t frames_per_video) const {
  FrameSet out;
  out.video_id = record.video_id;
  const bool keyed = record.frames.starts_with('@');
  const std::string key = keyed ? record.frames.substr(1) : record.video_id;

  if (store_ != nullptr && (keyed || store_->find(key) != nullptr)) {
    const auto& vectors = store_->at(key).vectors;
    for (auto i : uniform_frame_indices(vectors.size(), frames_per_video)) {
      out.frames.push_back(vectors[i]);
      out.sources.push_back(key + "#" + std::to_string(i));
    }
  } else if (keyed) {
    throw Error(ErrorCode::kStoreIncomplete, "video '" + record.video_id + "' needs a frame store");
  } else if (embedder_ != nullptr) {
    const auto items = read_items(manifest, record);
    if (items.empty()) throw Error(ErrorCode::kStoreIncomplete, "video '" + record.video_id + "' lists no frames");
    for (auto i : uniform_frame_indices(items.size(), frames_per_video)) out.sources.push_back(items[i]);
    out.frames = embedder_->embed_frames(out.sources);
    if (out.frames.size() != out.sources.size()) {
      throw Error(ErrorCode::kStoreIncomplete, "frame embedder returned the wrong number of vectors");
    }
  } else {
    throw Error(ErrorCode::kStoreIncomplete, "no frame embeddings for video '" + record.video_id + "'");
  }
  out.validate();
  return out;
}

RetrievalDataset build_dataset(const DatasetManifest& manifest, Split split,
                               const FrameResolver& resolver, std::size_t frames_per_video) {
  RetrievalDataset dataset;
  for (const auto* rec : manifest.split(split)) {
    const auto video_index = dataset.videos.size();
    dataset.videos.push_back({rec->video_id, resolver.resolve(manifest, *rec, frames_per_video)});
    for (std::size_t c = 0; c < rec->captions.size(); ++c) {
      dataset.captions.push_back({rec->video_id + "#" + std::to_string(c), rec->captions[c], video_index});
    }
  }
  return dataset;
}

}  // namespace refrain
