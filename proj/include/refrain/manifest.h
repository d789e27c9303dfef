#pragma once

#include <string>
#include <vector>

#include "refrain/provider.h"
#include "refrain/retrieval.h"
#include "refrain/store.h"

namespace refrain {

enum class Split { kTrain, kTest };

// One video of the manifest. `frames` is either "@<key>" (precomputed frames
// in a frame store) or a path, relative to the manifest, of a text file with
// one frame item per line (image path or frame descriptor).
struct ManifestRecord {
  std::string video_id;
  std::string frames;
  std::vector<std::string> captions;
  Split split = Split::kTest;
  std::size_t line = 0;
};

struct DatasetManifest {
  std::string base_dir;
  std::vector<ManifestRecord> records;

  std::vector<const ManifestRecord*> split(Split which) const;
};

// One JSON object per line:
//   {"video_id": "...", "frames": "...", "captions": ["..."], "split": "train"|"test"}
// Throws kParseError (with line number), kDuplicateId, kValidationError.
DatasetManifest parse_manifest(const std::string& text, const std::string& base_dir = ".");
DatasetManifest load_manifest(const std::string& path);
std::string render_manifest_record(const ManifestRecord& record);

// Turns a manifest record into a FrameSet sampled to `frames_per_video`.
// Store lookups win over embedding; either source may be absent.
class FrameResolver {
 public:
  FrameResolver(const FrameEmbedder* embedder, const EmbeddingStore* store)
      : embedder_(embedder), store_(store) {}

  // Throws kStoreIncomplete when no source can supply the frames.
  FrameSet resolve(const DatasetManifest& manifest, const ManifestRecord& record,
                   std::size_t frames_per_video) const;

  // Raw frame items listed by a record's frame file.
  static std::vector<std::string> read_items(const DatasetManifest& manifest, const ManifestRecord& record);

 private:
  const FrameEmbedder* embedder_;
  const EmbeddingStore* store_;
};

// Videos and captions of one split, frames resolved.
RetrievalDataset build_dataset(const DatasetManifest& manifest, Split split,
                               const FrameResolver& resolver, std::size_t frames_per_video);

}  // namespace refrain
