#include "refrain/cli.h"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "refrain/config.h"
#include "refrain/gar.h"
#include "refrain/manifest.h"
#include "refrain/remote.h"
#include "refrain/repetition.h"
#include "refrain/retrieval.h"
#include "refrain/store.h"
#include "refrain/synthetic.h"
#include "refrain/trainer.h"

namespace refrain {

namespace {

struct Options {
  std::string manifest;
  std::string config;
  std::string provider = "synthetic";
  std::string endpoint;
  std::string text_store;
  std::string frame_store;
  std::string lexicon;
  std::string out;
  std::string format = "text";
  std::string direction = "t2v";
  std::string mode = "target";
  std::string diagnostics;
  std::string trace;
  std::string delta;
  std::optional<std::size_t> clips;
  std::optional<std::size_t> candidates;
  std::optional<std::size_t> frames;
  std::optional<std::uint64_t> seed;
  std::size_t dim = 256;
  std::size_t workers = 1;
  std::size_t epochs = 40;
  std::size_t batch = 8;
  double learning_rate = 0.5;
  bool symmetric = false;
  std::vector<std::string> reports;
};

EngineConfig resolve_config(const Options& o) {
  EngineConfig config = o.config.empty() ? EngineConfig{} : load_config(o.config);
  if (o.clips) config.clips = *o.clips;
  if (o.candidates) config.candidates = *o.candidates;
  if (o.frames) config.frames_per_video = *o.frames;
  if (o.seed) config.rng_seed = *o.seed;
  if (!o.delta.empty()) {
    char* end = nullptr;
    const double d = std::strtod(o.delta.c_str(), &end);
    if (end == o.delta.c_str() || *end != '\0') {
      throw Error(ErrorCode::kInvalidConfig, "--delta is not a number: " + o.delta);
    }
    config.me_threshold = d;
  }
  config.validate();
  return config;
}

// Owns whichever backends the chosen provider needs.
struct Providers {
  std::unique_ptr<SyntheticEmbedder> synthetic;
  std::unique_ptr<RemoteProvider> remote;
  std::unique_ptr<EmbeddingStore> text_store;
  std::unique_ptr<EmbeddingStore> frame_store;
  std::unique_ptr<StoreTextEmbedder> store_text;
  std::unique_ptr<CosineMatchScorer> cosine;

  const TextEmbedder* text = nullptr;
  const FrameEmbedder* frames = nullptr;
  const MatchScorer* scorer = nullptr;

  FrameResolver resolver() const { return FrameResolver(frames, frame_store.get()); }
};

Providers make_providers(const Options& o, const EngineConfig& config) {
  Providers p;
  if (!o.frame_store.empty()) {
    p.frame_store = std::make_unique<EmbeddingStore>(EmbeddingStore::load(o.frame_store));
  }
  if (o.provider == "synthetic") {
    p.synthetic = std::make_unique<SyntheticEmbedder>(config.rng_seed, o.dim);
    p.text = p.synthetic.get();
    p.frames = p.synthetic.get();
  } else if (o.provider == "remote") {
    RemoteOptions ro;
    ro.endpoint = o.endpoint;
    if (ro.endpoint.empty()) {
      if (const char* env = std::getenv("REFRAIN_ENDPOINT")) ro.endpoint = env;
    }
    if (ro.endpoint.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "remote provider needs --endpoint or REFRAIN_ENDPOINT");
    }
    ro.max_in_flight = o.workers;
    p.remote = std::make_unique<RemoteProvider>(ro);
    p.text = p.remote.get();
    p.frames = p.remote.get();
    p.scorer = p.remote.get();
  } else if (o.provider == "file") {
    if (o.text_store.empty()) throw Error(ErrorCode::kInvalidArgument, "file provider needs --text-store");
    p.text_store = std::make_unique<EmbeddingStore>(EmbeddingStore::load(o.text_store));
    p.store_text = std::make_unique<StoreTextEmbedder>(*p.text_store);
    p.text = p.store_text.get();
  } else {
    throw Error(ErrorCode::kInvalidArgument, "unknown provider " + o.provider);
  }
  if (p.frame_store && p.frame_store->dim() != p.text->dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "frame store dimension differs from the text provider");
  }
  if (!p.scorer) {
    p.cosine = std::make_unique<CosineMatchScorer>(*p.text);
    p.scorer = p.cosine.get();
  }
  return p;
}

Lexicon resolve_lexicon(const Options& o) { return o.lexicon.empty() ? Lexicon::builtin() : Lexicon::load(o.lexicon); }

DatasetManifest require_manifest(const Options& o) {
  if (o.manifest.empty()) throw Error(ErrorCode::kInvalidArgument, "--manifest is required");
  return load_manifest(o.manifest);
}

void emit(const Options& o, std::ostream& out, const std::string& text) {
  if (o.out.empty()) {
    out << text;
    return;
  }
  std::ofstream file(o.out, std::ios::binary | std::ios::trunc);
  if (!file || !(file << text)) throw Error(ErrorCode::kIoError, "cannot write " + o.out);
}

std::string render(const Options& o, const RetrievalRun& run) {
  if (o.format == "json") return render_report_json(run);
  return render_report(run);
}

// One caption's title, or the caption itself when it has no keywords.
Title title_or_caption(const Caption& caption, const FrameSet& frames, const TextEmbedder& embedder,
                       const EngineConfig& config, bool& fallback) {
  fallback = false;
  try {
    return build_title(caption, frames, embedder, config.title_nouns, config.title_verbs);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kEmptyTitle) throw;
  }
  fallback = true;
  return {{}, caption.text, embedder.embed_text(caption.text)};
}

int run_embed(const Options& o, std::ostream& out) {
  const auto config = resolve_config(o);
  if (o.provider == "file") throw Error(ErrorCode::kInvalidArgument, "embed needs a synthetic or remote provider");
  if (o.out.empty()) throw Error(ErrorCode::kInvalidArgument, "embed needs --out <directory>");
  const auto manifest = require_manifest(o);
  const auto p = make_providers(o, config);
  const auto lexicon = resolve_lexicon(o);

  EmbeddingStore frames(StoreKind::kFrame, p.text->dim());
  std::set<std::string> texts;
  for (const auto& rec : manifest.records) {
    FrameSet sampled;
    if (rec.frames.starts_with('@')) {
      sampled = p.resolver().resolve(manifest, rec, config.frames_per_video);
    } else {
      const auto items = FrameResolver::read_items(manifest, rec);
      if (items.empty()) throw Error(ErrorCode::kStoreIncomplete, "video '" + rec.video_id + "' lists no frames");
      auto vectors = p.frames->embed_frames(items);
      for (auto i : uniform_frame_indices(items.size(), config.frames_per_video)) {
        sampled.frames.push_back(vectors[i]);
      }
      sampled.video_id = rec.video_id;
      frames.add(rec.video_id, std::move(vectors));
    }
    for (std::size_t c = 0; c < rec.captions.size(); ++c) {
      const auto caption = make_caption(rec.video_id + "#" + std::to_string(c), rec.captions[c], lexicon);
      texts.insert(caption.text);
      texts.insert(augment_caption(caption).text);
      for (const auto& w : keywords_in_caption_order(caption)) texts.insert(w);
      bool fallback = false;
      texts.insert(title_or_caption(caption, sampled, *p.text, config, fallback).text);
    }
  }
  const std::vector<std::string> text_list(texts.begin(), texts.end());
  const auto vectors = p.text->embed_texts(text_list);
  EmbeddingStore text(StoreKind::kText, p.text->dim());
  for (std::size_t i = 0; i < text_list.size(); ++i) text.add(text_list[i], {vectors[i]});

  std::filesystem::create_directories(o.out);
  const auto dir = std::filesystem::path(o.out);
  text.save((dir / "text.rfes").string());
  frames.save((dir / "frames.rfes").string());
  out << "texts  " << text.size() << "\nvideos " << frames.size() << "\ndim    " << text.dim() << "\n";
  return 0;
}

int run_gar(const Options& o, std::ostream& out) {
  const auto config = resolve_config(o);
  const auto manifest = require_manifest(o);
  const auto p = make_providers(o, config);
  const auto lexicon = resolve_lexicon(o);
  const auto resolver = p.resolver();
  std::string text;
  for (const auto& rec : manifest.records) {
    const auto frames = resolver.resolve(manifest, rec, config.frames_per_video);
    for (std::size_t c = 0; c < rec.captions.size(); ++c) {
      const auto caption = make_caption(rec.video_id + "#" + std::to_string(c), rec.captions[c], lexicon);
      bool fallback = false;
      const auto title = title_or_caption(caption, frames, *p.text, config, fallback);
      nlohmann::ordered_json doc;
      doc["caption_id"] = caption.id;
      doc["title"] = title.text;
      doc["frame"] = select_frame(title, frames);
      if (fallback) doc["fallback"] = true;
      text += doc.dump() + "\n";
    }
  }
  emit(o, out, text);
  return 0;
}

int run_train(const Options& o, std::ostream& out) {
  const auto config = resolve_config(o);
  const auto manifest = require_manifest(o);
  const auto p = make_providers(o, config);
  const auto lexicon = resolve_lexicon(o);
  const auto dataset = build_dataset(manifest, Split::kTrain, p.resolver(), config.frames_per_video);
  if (dataset.captions.size() < 2) throw Error(ErrorCode::kEmptyInput, "train split needs at least 2 captions");
  const auto prepared = prepare(dataset, *p.text);

  const auto n = static_cast<Eigen::Index>(dataset.captions.size());
  const auto d = static_cast<Eigen::Index>(p.text->dim());
  TrainingCorpus corpus{Matrix(n, d), Matrix(n, d), Matrix(n, d), Matrix(n, d)};
  auto put = [](Matrix& m, Eigen::Index row, const EmbeddingVector& v) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(row, j) = v[static_cast<std::size_t>(j)];
  };
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& rec = dataset.captions[static_cast<std::size_t>(i)];
    const auto& frames = dataset.videos[rec.video].frames;
    const auto caption = make_caption(rec.id, rec.text, lexicon);
    bool fallback = false;
    const auto title = title_or_caption(caption, frames, *p.text, config, fallback);
    put(corpus.video, i, prepared.video_vectors[rec.video]);
    put(corpus.text, i, prepared.caption_vectors[static_cast<std::size_t>(i)]);
    put(corpus.frame, i, frames.frames[select_frame(title, frames)]);
    put(corpus.title, i, title.embedding);
  }

  TrainerOptions topts;
  topts.epochs = o.epochs;
  topts.batch_size = o.batch;
  topts.learning_rate = o.learning_rate;
  const auto before = training_recall_at_1(init_towers(d, d, topts.embed_dim, config.rng_seed), corpus);
  const auto result = train_linear_towers(corpus, config, topts);
  const auto after = training_recall_at_1(result.params, corpus);

  if (!o.trace.empty()) {
    std::ofstream trace(o.trace);
    write_loss_trace(trace, result.trace);
    if (!trace) throw Error(ErrorCode::kIoError, "cannot write " + o.trace);
  }
  char line[160];
  std::string text;
  std::snprintf(line, sizeof line, "pairs      %lld\nsteps      %zu\n", static_cast<long long>(n),
                result.trace.size());
  text += line;
  std::snprintf(line, sizeof line, "loss       %.6f -> %.6f\n", result.epoch_totals.front(),
                result.epoch_totals.back());
  text += line;
  std::snprintf(line, sizeof line, "R@1        %6.2f -> %6.2f\n", 100.0 * before, 100.0 * after);
  text += line;
  emit(o, out, text);
  return 0;
}

RetrievalDataset test_dataset(const Options& o, const EngineConfig& config, const Providers& p) {
  const auto manifest = require_manifest(o);
  return build_dataset(manifest, Split::kTest, p.resolver(), config.frames_per_video);
}

int run_eval(const Options& o, std::ostream& out) {
  const auto config = resolve_config(o);
  const auto p = make_providers(o, config);
  const auto dataset = test_dataset(o, config, p);
  EvalOptions eo;
  eo.direction = parse_direction(o.direction);
  eo.workers = o.workers;
  emit(o, out, render(o, evaluate(dataset, config, *p.text, *p.scorer, eo)));
  return 0;
}

int run_repeval(const Options& o, std::ostream& out) {
  const auto config = resolve_config(o);
  const auto p = make_providers(o, config);
  const auto dataset = test_dataset(o, config, p);
  const auto lexicon = resolve_lexicon(o);
  RepetitionOptions ro;
  ro.direction = parse_direction(o.direction);
  if (o.mode == "target") {
    ro.mode = RepetitionMode::kTargeted;
  } else if (o.mode == "all") {
    ro.mode = RepetitionMode::kAll;
  } else {
    throw Error(ErrorCode::kInvalidArgument, "--mode must be target or all");
  }
  ro.symmetric = o.symmetric;
  ro.workers = o.workers;
  const UniformSegmenter segmenter;
  const auto run = repetition_pipeline(dataset, config, *p.text, *p.scorer, segmenter, lexicon, ro);
  if (!o.diagnostics.empty()) {
    std::ofstream diag(o.diagnostics, std::ios::binary | std::ios::trunc);
    diag << render_diagnostics(run, dataset);
    if (!diag) throw Error(ErrorCode::kIoError, "cannot write " + o.diagnostics);
  }
  emit(o, out, render(o, run.run));
  return 0;
}

// Side-by-side table of JSON reports, one column per file.
int run_report(const Options& o, std::ostream& out) {
  if (o.reports.empty()) throw Error(ErrorCode::kInvalidArgument, "report needs at least one JSON report");
  std::vector<std::string> names;
  std::vector<nlohmann::json> docs;
  std::vector<std::string> metrics;
  for (const auto& path : o.reports) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::kIoError, "cannot open report " + path);
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::kParseError, path + ": " + e.what());
    }
    if (!doc.contains("recall") || !doc["recall"].is_object()) {
      throw Error(ErrorCode::kParseError, path + ": not a run report");
    }
    names.push_back(std::filesystem::path(path).stem().string());
    docs.push_back(std::move(doc));
  }
  // Rank order rather than lexicographic: R@5 before R@10.
  std::map<std::size_t, std::string> ranks;
  for (const auto& doc : docs) {
    for (const auto& [key, value] : doc["recall"].items()) {
      if (key.rfind("R@", 0) != 0) throw Error(ErrorCode::kParseError, "bad recall key " + key);
      ranks.emplace(std::stoul(key.substr(2)), key);
    }
  }
  std::string text;
  char cell[64];
  std::snprintf(cell, sizeof cell, "%-10s", "run");
  text += cell;
  for (const auto& n : names) {
    std::snprintf(cell, sizeof cell, " %12s", n.c_str());
    text += cell;
  }
  text += "\n";
  auto row = [&](const std::string& label, auto&& value_of) {
    std::snprintf(cell, sizeof cell, "%-10s", label.c_str());
    text += cell;
    for (const auto& doc : docs) {
      std::snprintf(cell, sizeof cell, " %12s", value_of(doc).c_str());
      text += cell;
    }
    text += "\n";
  };
  row("direction", [](const nlohmann::json& d) { return d.value("direction", std::string("?")); });
  row("queries", [](const nlohmann::json& d) { return d.contains("queries") ? d["queries"].dump() : "?"; });
  for (const auto& [rank, key] : ranks) {
    row(key, [&key](const nlohmann::json& d) {
      if (!d["recall"].contains(key)) return std::string("-");
      char v[32];
      std::snprintf(v, sizeof v, "%.2f", 100.0 * d["recall"][key].get<double>());
      return std::string(v);
    });
  }
  emit(o, out, text);
  return 0;
}

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--manifest", o.manifest, "Dataset manifest (JSON lines)");
  sub->add_option("--config", o.config, "Engine config (flat JSON object)");
  sub->add_option("--provider", o.provider, "Embedding provider")
      ->check(CLI::IsMember({"synthetic", "remote", "file"}));
  sub->add_option("--endpoint", o.endpoint, "Model server URL (default: $REFRAIN_ENDPOINT)");
  sub->add_option("--text-store", o.text_store, "Text embedding store (file provider)");
  sub->add_option("--frame-store", o.frame_store, "Frame embedding store");
  sub->add_option("--lexicon", o.lexicon, "Part-of-speech lexicon (word<TAB>tag lines)");
  sub->add_option("--dim", o.dim, "Synthetic embedding dimension")->check(CLI::PositiveNumber);
  sub->add_option("--clips", o.clips, "Clips per video");
  sub->add_option("--candidates", o.candidates, "Stage-1 candidates");
  sub->add_option("--frames", o.frames, "Frames sampled per video");
  sub->add_option("--seed", o.seed, "RNG and synthetic embedder seed");
  sub->add_option("--workers", o.workers, "Parallel queries / in-flight requests")->check(CLI::PositiveNumber);
  sub->add_option("--out", o.out, "Output file (directory for embed)");
}

void add_retrieval(CLI::App* sub, Options& o) {
  sub->add_option("--direction", o.direction, "t2v or v2t")->check(CLI::IsMember({"t2v", "v2t"}));
  sub->add_option("--format", o.format, "Report format")->check(CLI::IsMember({"text", "json"}));
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Two-stage video-text retrieval with clip voting and caption repetition", "refrain"};
  app.require_subcommand(1);
  Options o;

  auto* embed = app.add_subcommand("embed", "Embed manifest captions and frames into stores");
  add_common(embed, o);
  auto* gar = app.add_subcommand("gar", "Emit keyword titles and selected frames");
  add_common(gar, o);
  auto* train = app.add_subcommand("train", "Train linear towers on the train split");
  add_common(train, o);
  train->add_option("--epochs", o.epochs, "Training epochs")->check(CLI::PositiveNumber);
  train->add_option("--batch", o.batch, "Batch size")->check(CLI::Range(2, 1 << 20));
  train->add_option("--lr", o.learning_rate, "Learning rate")->check(CLI::PositiveNumber);
  train->add_option("--trace", o.trace, "Loss trace CSV");
  auto* eval = app.add_subcommand("eval", "Baseline two-stage retrieval");
  add_common(eval, o);
  add_retrieval(eval, o);
  auto* repeval = app.add_subcommand("repeval", "Retrieval with clip voting and caption repetition");
  add_common(repeval, o);
  add_retrieval(repeval, o);
  repeval->add_option("--delta", o.delta, "Matching-entropy threshold (accepts inf)");
  repeval->add_option("--mode", o.mode, "target or all")->check(CLI::IsMember({"target", "all"}));
  repeval->add_flag("--symmetric", o.symmetric, "Allow v2t repetition");
  repeval->add_option("--diagnostics", o.diagnostics, "Per-query voting diagnostics (JSON lines)");
  auto* report = app.add_subcommand("report", "Compare JSON run reports");
  report->add_option("reports", o.reports, "Reports written with --format json")->required();
  report->add_option("--out", o.out, "Output file");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "refrain: " << e.what() << "\n\n";
    const auto* active = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << active->help();
    return 2;
  }

  try {
    if (*embed) return run_embed(o, out);
    if (*gar) return run_gar(o, out);
    if (*train) return run_train(o, out);
    if (*eval) return run_eval(o, out);
    if (*repeval) return run_repeval(o, out);
    return run_report(o, out);
  } catch (const Error& e) {
    err << "refrain: " << error_code_name(e.code()) << ": " << e.what() << "\n";
  } catch (const std::exception& e) {
    err << "refrain: " << e.what() << "\n";
  }
  return 1;
}

int cli_main(int argc, const char* const* argv) {
  return cli_main(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}

}  // namespace refrain
