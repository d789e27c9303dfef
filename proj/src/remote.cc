#include "refrain/remote.h"

#include <cmath>
#include <future>
#include <thread>

#include "httplib.h"

namespace refrain {

namespace {

using nlohmann::json;

bool transient_status(int status) { return status == 429 || status >= 500; }

httplib::Client make_client(const RemoteOptions& options) {
  httplib::Client client(options.endpoint);
  const auto secs = options.timeout.count() / 1000;
  const auto usecs = (options.timeout.count() % 1000) * 1000;
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);
  return client;
}

}  // namespace

RemoteProvider::RemoteProvider(RemoteOptions options) : options_(std::move(options)) {
  if (options_.endpoint.empty()) throw Error(ErrorCode::kInvalidArgument, "remote provider needs an endpoint");
  if (options_.max_batch == 0) throw Error(ErrorCode::kInvalidArgument, "max_batch must be positive");
  if (options_.max_in_flight == 0) options_.max_in_flight = 1;
  dim_ = options_.dim ? *options_.dim : health().dim;
  if (dim_ == 0) throw Error(ErrorCode::kProtocolError, "server reported dimension 0");
}

RemoteProvider::Health RemoteProvider::health() const {
  auto delay = options_.backoff;
  for (std::size_t attempt = 0;; ++attempt) {
    auto client = make_client(options_);
    auto res = client.Get("/health");
    if (res && res->status == 200) {
      json doc;
      try {
        doc = json::parse(res->body);
      } catch (const json::parse_error& e) {
        throw Error(ErrorCode::kProtocolError, std::string("health: ") + e.what());
      }
      if (!doc.contains("dim") || !doc["dim"].is_number_unsigned()) {
        throw Error(ErrorCode::kProtocolError, "health response lacks dim");
      }
      return {doc.value("model", std::string()), doc["dim"].get<std::size_t>()};
    }
    if (res && !transient_status(res->status)) {
      throw Error(ErrorCode::kProtocolError, "health returned HTTP " + std::to_string(res->status));
    }
    if (attempt >= options_.retries) {
      throw Error(ErrorCode::kProviderUnavailable, "health check failed at " + options_.endpoint);
    }
    std::this_thread::sleep_for(delay);
    delay *= 2;
  }
}

json RemoteProvider::call(const std::string& op, const json& items) const {
  const std::string body = json{{"op", op}, {"items", items}}.dump() + "\n";
  auto delay = options_.backoff;
  std::string last_failure;
  for (std::size_t attempt = 0;; ++attempt) {
    auto client = make_client(options_);
    auto res = client.Post("/" + op, body, "application/json");
    if (res && res->status == 200) {
      json doc;
      try {
        doc = json::parse(res->body);
      } catch (const json::parse_error& e) {
        throw Error(ErrorCode::kProtocolError, op + ": " + e.what());
      }
      if (doc.contains("error")) {
        throw Error(ErrorCode::kProtocolError, op + ": " + doc["error"].dump() + " " + doc.value("message", ""));
      }
      return doc;
    }
    if (res && !transient_status(res->status)) {
      std::string detail = "HTTP " + std::to_string(res->status);
      try {
        const auto doc = json::parse(res->body);
        detail += " " + doc.value("error", std::string()) + " " + doc.value("message", std::string());
      } catch (const json::parse_error&) {
      }
      throw Error(ErrorCode::kProtocolError, op + ": " + detail);
    }
    last_failure = res ? "HTTP " + std::to_string(res->status) : httplib::to_string(res.error());
    if (attempt >= options_.retries) {
      throw Error(ErrorCode::kProviderUnavailable,
                  op + " failed after " + std::to_string(attempt + 1) + " attempts: " + last_failure);
    }
    std::this_thread::sleep_for(delay);
    delay *= 2;
  }
}

std::vector<EmbeddingVector> RemoteProvider::parse_vectors(const json& response, std::size_t expected) const {
  if (!response.contains("dim") || !response["dim"].is_number_unsigned() ||
      response["dim"].get<std::size_t>() != dim_) {
    throw Error(ErrorCode::kProtocolError, "response dimension does not match " + std::to_string(dim_));
  }
  if (!response.contains("vectors") || !response["vectors"].is_array() || response["vectors"].size() != expected) {
    throw Error(ErrorCode::kProtocolError, "expected " + std::to_string(expected) + " vectors");
  }
  std::vector<EmbeddingVector> out;
  out.reserve(expected);
  for (const auto& v : response["vectors"]) {
    if (!v.is_array() || v.size() != dim_) {
      throw Error(ErrorCode::kProtocolError, "vector of wrong dimension in response");
    }
    std::vector<double> values;
    values.reserve(dim_);
    for (const auto& x : v) {
      if (!x.is_number()) throw Error(ErrorCode::kProtocolError, "non-numeric vector entry");
      values.push_back(x.get<double>());
    }
    const double norm = l2_norm(values);
    if (!std::isfinite(norm) || std::abs(norm - 1.0) > kWireNormTolerance) {
      throw Error(ErrorCode::kProtocolError, "returned vector has norm " + std::to_string(norm));
    }
    out.push_back(l2_normalize(values));
  }
  return out;
}

std::vector<EmbeddingVector> RemoteProvider::embed(const std::string& op, std::span<const std::string> items) const {
  std::vector<std::span<const std::string>> batches;
  for (std::size_t i = 0; i < items.size(); i += options_.max_batch) {
    batches.push_back(items.subspan(i, std::min(options_.max_batch, items.size() - i)));
  }
  std::vector<std::vector<EmbeddingVector>> results(batches.size());
  auto run_batch = [&](std::size_t b) {
    const json payload(std::vector<std::string>(batches[b].begin(), batches[b].end()));
    results[b] = parse_vectors(call(op, payload), batches[b].size());
  };
  for (std::size_t start = 0; start < batches.size(); start += options_.max_in_flight) {
    const auto end = std::min(start + options_.max_in_flight, batches.size());
    std::vector<std::future<void>> wave;
    for (std::size_t b = start + 1; b < end; ++b) wave.push_back(std::async(std::launch::async, run_batch, b));
    run_batch(start);
    for (auto& f : wave) f.get();
  }
  std::vector<EmbeddingVector> out;
  out.reserve(items.size());
  for (auto& r : results) {
    for (auto& v : r) out.push_back(std::move(v));
  }
  return out;
}

EmbeddingVector RemoteProvider::embed_text(std::string_view text) const {
  const std::string item(text);
  return embed("embed_text", std::span(&item, 1)).front();
}

std::vector<EmbeddingVector> RemoteProvider::embed_texts(std::span<const std::string> texts) const {
  return embed("embed_text", texts);
}

std::vector<EmbeddingVector> RemoteProvider::embed_frames(std::span<const std::string> items) const {
  return embed("embed_frames", items);
}

double RemoteProvider::match(std::string_view caption, const FrameSet& video) const {
  json item = {{"caption", std::string(caption)}};
  if (!video.sources.empty()) {
    item["frames"] = video.sources;
  } else {
    json vectors = json::array();
    for (const auto& f : video.frames) vectors.push_back(std::vector<double>(f.values().begin(), f.values().end()));
    item["frame_vectors"] = vectors;
  }
  const auto response = call("match", json::array({item}));
  if (!response.contains("scores") || !response["scores"].is_array() || response["scores"].size() != 1 ||
      !response["scores"][0].is_number()) {
    throw Error(ErrorCode::kProtocolError, "match response must carry one numeric score");
  }
  const double score = response["scores"][0].get<double>();
  if (!std::isfinite(score)) throw Error(ErrorCode::kProtocolError, "non-finite match score");
  return score;
}

}  // namespace refrain
