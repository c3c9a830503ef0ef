// Copyright 2026 The adfp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <unistd.h>

#include <array>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "adfp/error.hpp"
#include "adfp/registry.hpp"
#include "adfp/sample.hpp"
#include "httplib.h"
#include "json.hpp"

namespace adfp {

inline constexpr std::string_view kCollectSchemaVersion = "1";
inline constexpr std::size_t kDefaultMaxPayloadBytes = 64 * 1024;

struct CollectConfig {
  std::string listen_host = "127.0.0.1";
  int listen_port = 8080;
  std::string storage_dir = "collect-data";
  std::string registry = "adf-v1";
  std::size_t max_payload_bytes = kDefaultMaxPayloadBytes;
  bool fsync_appends = true;

  void validate() const {
    if (listen_port < 0 || listen_port > 65535) {
      fail(ErrorCode::kInvalidArgument, "listen_port outside [0, 65535]");
    }
    if (storage_dir.empty()) fail(ErrorCode::kInvalidArgument, "storage_dir is empty");
    if (max_payload_bytes == 0) fail(ErrorCode::kInvalidArgument, "max_payload_bytes is 0");
  }
};

inline CollectConfig collect_config_from_json(const nlohmann::json& j) {
  CollectConfig c;
  try {
    c.listen_host = j.value("listen_host", c.listen_host);
    c.listen_port = j.value("listen_port", c.listen_port);
    c.storage_dir = j.value("storage_dir", c.storage_dir);
    c.registry = j.value("registry", c.registry);
    c.max_payload_bytes = j.value("max_payload_bytes", c.max_payload_bytes);
    c.fsync_appends = j.value("fsync_appends", c.fsync_appends);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kMalformed, std::string("collect config: ") + e.what());
  }
  c.validate();
  return c;
}

inline nlohmann::ordered_json collect_config_to_json(const CollectConfig& c) {
  nlohmann::ordered_json j;
  j["listen_host"] = c.listen_host;
  j["listen_port"] = c.listen_port;
  j["storage_dir"] = c.storage_dir;
  j["registry"] = c.registry;
  j["max_payload_bytes"] = c.max_payload_bytes;
  j["fsync_appends"] = c.fsync_appends;
  return j;
}

using EnvLookup = std::function<const char*(const char*)>;

// ADFP_LISTEN_HOST, ADFP_LISTEN_PORT, ADFP_STORAGE_DIR, ADFP_REGISTRY,
// ADFP_MAX_PAYLOAD_BYTES override the corresponding fields when set.
inline void apply_env_overrides(CollectConfig& c, const EnvLookup& env = [](const char* k) {
  return std::getenv(k);
}) {
  auto number = [](const char* name, const char* v) -> long long {
    try {
      std::size_t pos = 0;
      const long long n = std::stoll(v, &pos);
      if (pos != std::string_view(v).size()) throw std::invalid_argument(name);
      return n;
    } catch (const std::exception&) {
      fail(ErrorCode::kInvalidArgument, std::string(name) + " is not an integer");
    }
  };
  if (const char* v = env("ADFP_LISTEN_HOST")) c.listen_host = v;
  if (const char* v = env("ADFP_LISTEN_PORT")) {
    c.listen_port = static_cast<int>(number("ADFP_LISTEN_PORT", v));
  }
  if (const char* v = env("ADFP_STORAGE_DIR")) c.storage_dir = v;
  if (const char* v = env("ADFP_REGISTRY")) c.registry = v;
  if (const char* v = env("ADFP_MAX_PAYLOAD_BYTES")) {
    const auto n = number("ADFP_MAX_PAYLOAD_BYTES", v);
    if (n <= 0) fail(ErrorCode::kInvalidArgument, "ADFP_MAX_PAYLOAD_BYTES must be positive");
    c.max_payload_bytes = static_cast<std::size_t>(n);
  }
  c.validate();
}

// File (if non-empty) first, then environment.
inline CollectConfig load_collect_config(const std::string& path, const EnvLookup& env = [](
                                                                      const char* k) {
  return std::getenv(k);
}) {
  CollectConfig c;
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::kIo, "cannot open collect config: " + path);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::kMalformed, "collect config " + path + ": " + e.what());
    }
    c = collect_config_from_json(j);
  }
  apply_env_overrides(c, env);
  return c;
}

struct CollectPayload {
  std::string schema_version;
  DeviceConfig config;
  std::optional<std::string> ad_id;
  bool dnt = false;
  AttributeVector attributes;
  std::int64_t collection_ms = 0;
};

inline nlohmann::ordered_json payload_to_json(const CollectPayload& p,
                                              const AttributeRegistry& reg) {
  nlohmann::ordered_json j;
  j["schema_version"] = p.schema_version;
  j["device_type"] = to_string(p.config.device_type);
  j["os"] = p.config.os;
  j["agent"] = p.config.agent;
  j["channel"] = to_string(p.config.channel);
  j["ad_id"] = p.ad_id ? nlohmann::ordered_json(*p.ad_id) : nlohmann::ordered_json(nullptr);
  j["dnt"] = p.dnt;
  j["attributes"] = attributes_to_json(p.attributes, reg);
  j["collection_ms"] = p.collection_ms;
  return j;
}

// Structural checks only; registry membership is checked by the service.
// Unknown top-level fields are ignored.
inline CollectPayload payload_from_json(const nlohmann::json& j) {
  if (!j.is_object()) fail(ErrorCode::kMalformed, "payload must be an object");
  CollectPayload p;
  try {
    p.schema_version = j.at("schema_version").get<std::string>();
    if (p.schema_version != kCollectSchemaVersion) {
      fail(ErrorCode::kMalformed, "unsupported schema_version: " + p.schema_version);
    }
    p.config = config_from_json(j);
    validate(p.config);
    if (j.contains("ad_id") && !j.at("ad_id").is_null()) p.ad_id = j.at("ad_id").get<std::string>();
    p.dnt = j.at("dnt").get<bool>();
    p.attributes = attributes_from_json(j.at("attributes"));
    p.collection_ms = j.at("collection_ms").get<std::int64_t>();
    if (p.collection_ms < 0) fail(ErrorCode::kMalformed, "collection_ms is negative");
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kMalformed, std::string("payload: ") + e.what());
  }
  return p;
}

enum class CollectStatus { kStored, kFiltered, kRejected, kFailed };

inline std::string_view to_string(CollectStatus s) {
  switch (s) {
    case CollectStatus::kStored: return "stored";
    case CollectStatus::kFiltered: return "filtered";
    case CollectStatus::kRejected: return "rejected";
    case CollectStatus::kFailed: return "failed";
  }
  return "unknown";
}

// Every reason belongs to exactly one status.
enum class CollectReason {
  kNone,
  kDnt,
  kIncomplete,
  kOversize,
  kMalformedJson,
  kSchema,
  kUnknownAttribute,
  kOutOfScope,
  kStorage,
};

inline constexpr std::array<CollectReason, 8> kCollectReasons = {
    CollectReason::kDnt,    CollectReason::kIncomplete,       CollectReason::kOversize,
    CollectReason::kMalformedJson, CollectReason::kSchema, CollectReason::kUnknownAttribute,
    CollectReason::kOutOfScope,    CollectReason::kStorage};

inline std::string_view to_string(CollectReason r) {
  switch (r) {
    case CollectReason::kNone: return "";
    case CollectReason::kDnt: return "dnt";
    case CollectReason::kIncomplete: return "incomplete";
    case CollectReason::kOversize: return "oversize";
    case CollectReason::kMalformedJson: return "malformed_json";
    case CollectReason::kSchema: return "schema";
    case CollectReason::kUnknownAttribute: return "unknown_attribute";
    case CollectReason::kOutOfScope: return "out_of_scope";
    case CollectReason::kStorage: return "storage";
  }
  return "unknown";
}

inline CollectStatus status_of(CollectReason r) {
  switch (r) {
    case CollectReason::kNone: return CollectStatus::kStored;
    case CollectReason::kDnt:
    case CollectReason::kIncomplete: return CollectStatus::kFiltered;
    case CollectReason::kStorage: return CollectStatus::kFailed;
    default: return CollectStatus::kRejected;
  }
}

struct CollectResult {
  CollectStatus status = CollectStatus::kStored;
  CollectReason reason = CollectReason::kNone;
  std::string detail;     // human-readable, never part of the contract
  std::string sample_id;  // set iff stored

  int http_status() const {
    switch (status) {
      case CollectStatus::kStored:
      case CollectStatus::kFiltered: return 200;
      case CollectStatus::kFailed: return 503;
      case CollectStatus::kRejected: return reason == CollectReason::kOversize ? 413 : 400;
    }
    return 500;
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["status"] = to_string(status);
    if (reason != CollectReason::kNone) j["reason"] = to_string(reason);
    if (!sample_id.empty()) j["sample_id"] = sample_id;
    return j;
  }
};

struct TimeRange {
  std::int64_t from = std::numeric_limits<std::int64_t>::min();  // inclusive
  std::int64_t to = std::numeric_limits<std::int64_t>::max();    // exclusive

  bool contains(std::int64_t ts) const { return ts >= from && ts < to; }
};

// "2024-03-01" for a UTC timestamp.
inline std::string utc_date(std::int64_t ts) {
  const std::time_t t = static_cast<std::time_t>(ts);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[40];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday);
  return buf;
}

// Append-only JSONL segments named samples-YYYY-MM-DD.jsonl. Segment name
// order is ingestion order as long as the clock never steps back a day.
class SampleStore {
 public:
  explicit SampleStore(std::filesystem::path dir, bool fsync_appends = true)
      : dir_(std::move(dir)), fsync_(fsync_appends) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) fail(ErrorCode::kStorage, "cannot create storage dir " + dir_.string());
    recover();
  }

  SampleStore(const SampleStore&) = delete;
  SampleStore& operator=(const SampleStore&) = delete;

  ~SampleStore() { close_active(); }

  static constexpr std::string_view kPrefix = "samples-";
  static constexpr std::string_view kSuffix = ".jsonl";

  const std::filesystem::path& dir() const { return dir_; }
  std::filesystem::path quarantine_dir() const { return dir_ / "quarantine"; }

  // Lines present after recovery plus lines appended since.
  std::uint64_t line_count() const {
    std::lock_guard lock(mu_);
    return lines_;
  }

  std::uint64_t quarantined() const {
    std::lock_guard lock(mu_);
    return quarantined_;
  }

  // Assigns the next sample id, serializes and appends one line. Either the
  // whole line lands or the segment is restored to its previous length.
  std::string append(Sample sample, const AttributeRegistry& reg) {
    std::lock_guard lock(mu_);
    char id[32];
    std::snprintf(id, sizeof id, "s%012llu", static_cast<unsigned long long>(lines_));
    sample.sample_id = id;
    const std::string line = sample_to_json(sample, reg).dump() + "\n";
    const auto segment = segment_path(sample.timestamp);
    if (segment != active_path_) {
      close_active();
      active_ = std::fopen(segment.c_str(), "ab");
      if (active_ == nullptr) fail(ErrorCode::kStorage, "cannot open segment " + segment.string());
      active_path_ = segment;
    }
    const long before = std::ftell(active_);
    const bool ok = std::fwrite(line.data(), 1, line.size(), active_) == line.size() &&
                    std::fflush(active_) == 0 && (!fsync_ || ::fsync(::fileno(active_)) == 0);
    if (!ok) {
      // A failed cut leaves a torn tail, which recover() quarantines.
      if (before >= 0 && ::ftruncate(::fileno(active_), before) != 0) ++torn_tails_;
      close_active();
      fail(ErrorCode::kStorage, "append failed on segment " + segment.string());
    }
    ++lines_;
    return sample.sample_id;
  }

  std::vector<std::filesystem::path> segments() const {
    std::vector<std::filesystem::path> out;
    std::error_code ec;
    for (const auto& e : std::filesystem::directory_iterator(dir_, ec)) {
      const auto name = e.path().filename().string();
      if (name.starts_with(kPrefix) && name.ends_with(kSuffix)) out.push_back(e.path());
    }
    if (ec) fail(ErrorCode::kStorage, "cannot list storage dir " + dir_.string());
    std::sort(out.begin(), out.end());
    return out;
  }

  // Stored lines with ts in range, verbatim, in ingestion order.
  void export_raw(std::ostream& out, const TimeRange& range = {}) const {
    std::lock_guard lock(mu_);
    for (const auto& seg : segments()) {
      std::ifstream in(seg, std::ios::binary);
      if (!in) fail(ErrorCode::kStorage, "unreadable segment " + seg.string());
      std::string line;
      while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::int64_t ts = 0;
        try {
          ts = nlohmann::json::parse(line).at("ts").get<std::int64_t>();
        } catch (const nlohmann::json::exception& e) {
          fail(ErrorCode::kStorage, "corrupt line in " + seg.string() + ": " + e.what());
        }
        if (range.contains(ts)) out << line << '\n';
      }
      if (in.bad()) fail(ErrorCode::kStorage, "read error on segment " + seg.string());
    }
  }

 private:
  std::filesystem::path segment_path(std::int64_t ts) const {
    return dir_ / (std::string(kPrefix) + utc_date(ts) + std::string(kSuffix));
  }

  void close_active() {
    if (active_ != nullptr) std::fclose(active_);
    active_ = nullptr;
    active_path_.clear();
  }

  // A segment not ending in '\n' has a torn final line: its bytes move to
  // quarantine/<segment>.torn and the segment is cut back to the last '\n'.
  void recover() {
    for (const auto& seg : segments()) {
      std::ifstream in(seg, std::ios::binary);
      if (!in) fail(ErrorCode::kStorage, "unreadable segment " + seg.string());
      std::ostringstream buf;
      buf << in.rdbuf();
      const std::string data = buf.str();
      const auto last_nl = data.rfind('\n');
      const std::size_t keep = last_nl == std::string::npos ? 0 : last_nl + 1;
      for (std::size_t i = 0; i < keep; ++i) {
        if (data[i] == '\n' && (i == 0 || data[i - 1] != '\n')) ++lines_;
      }
      if (keep == data.size()) continue;
      std::error_code ec;
      std::filesystem::create_directories(quarantine_dir(), ec);
      const auto qpath = quarantine_dir() / (seg.filename().string() + ".torn");
      std::ofstream q(qpath, std::ios::binary | std::ios::app);
      q.write(data.data() + keep, static_cast<std::streamsize>(data.size() - keep));
      q << '\n';
      if (!q) fail(ErrorCode::kStorage, "cannot write quarantine file " + qpath.string());
      q.close();
      std::filesystem::resize_file(seg, keep, ec);
      if (ec) fail(ErrorCode::kStorage, "cannot truncate segment " + seg.string());
      ++quarantined_;
    }
  }

  std::filesystem::path dir_;
  bool fsync_;
  mutable std::mutex mu_;
  std::FILE* active_ = nullptr;
  std::filesystem::path active_path_;
  std::uint64_t lines_ = 0;
  std::uint64_t quarantined_ = 0;
  std::uint64_t torn_tails_ = 0;
};

// Request accounting. received equals the sum over statuses once every
// in-flight request has returned.
struct CollectCounters {
  std::atomic<std::uint64_t> received{0};
  std::atomic<std::uint64_t> stored{0};
  std::array<std::atomic<std::uint64_t>, kCollectReasons.size() + 1> by_reason{};

  std::uint64_t reason(CollectReason r) const {
    return by_reason[static_cast<std::size_t>(r)].load();
  }

  std::uint64_t total(CollectStatus s) const {
    if (s == CollectStatus::kStored) return stored.load();
    std::uint64_t n = 0;
    for (auto r : kCollectReasons) {
      if (status_of(r) == s) n += reason(r);
    }
    return n;
  }
};

using Clock = std::function<std::int64_t()>;

inline std::int64_t system_clock_seconds() {
  return std::chrono::duration_cast<std::chrono::seconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

class CollectService {
 public:
  CollectService(const CollectConfig& config, const AttributeRegistry& reg,
                 Clock clock = system_clock_seconds)
      : config_(config),
        reg_(reg),
        clock_(std::move(clock)),
        store_(config.storage_dir, config.fsync_appends) {
    config_.validate();
  }

  const CollectConfig& config() const { return config_; }
  const CollectCounters& counters() const { return counters_; }
  const SampleStore& store() const { return store_; }

  // Oversize, then parse, then schema, then registry names, then the ethics
  // filters; only a payload passing all of them is persisted.
  CollectResult handle_collect(std::string_view body) {
    ++counters_.received;
    if (body.size() > config_.max_payload_bytes) {
      return count(CollectReason::kOversize, std::to_string(body.size()) + " bytes");
    }
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
      return count(CollectReason::kMalformedJson, e.what());
    }
    CollectPayload p;
    try {
      p = payload_from_json(j);
    } catch (const Error& e) {
      return count(CollectReason::kSchema, e.what());
    }
    return count_result(accept(p));
  }

  // Same decision chain for an already-parsed payload.
  CollectResult handle_collect(const CollectPayload& p) {
    ++counters_.received;
    if (p.schema_version != kCollectSchemaVersion || !p.config.valid() || p.collection_ms < 0) {
      return count(CollectReason::kSchema, "payload fails schema checks");
    }
    return count_result(accept(p));
  }

  void export_raw(std::ostream& out, const TimeRange& range = {}) const {
    store_.export_raw(out, range);
  }

  nlohmann::ordered_json stats_json() const {
    nlohmann::ordered_json j;
    j["received"] = counters_.received.load();
    j["stored"] = counters_.total(CollectStatus::kStored);
    j["filtered"] = counters_.total(CollectStatus::kFiltered);
    j["rejected"] = counters_.total(CollectStatus::kRejected);
    j["failed"] = counters_.total(CollectStatus::kFailed);
    nlohmann::ordered_json reasons = nlohmann::ordered_json::object();
    for (auto r : kCollectReasons) reasons[std::string(to_string(r))] = counters_.reason(r);
    j["by_reason"] = std::move(reasons);
    j["stored_lines"] = store_.line_count();
    j["quarantined_segments"] = store_.quarantined();
    j["registry"] = reg_.version();
    return j;
  }

 private:
  CollectResult accept(const CollectPayload& p) {
    for (const auto& [name, value] : p.attributes.values) {
      const AttributeSpec* spec = reg_.find(name);
      if (spec == nullptr || !spec->collected) {
        return make(CollectReason::kUnknownAttribute, name);
      }
      if (!spec->in_channel(p.config.channel)) return make(CollectReason::kOutOfScope, name);
    }
    if (p.dnt) return make(CollectReason::kDnt, {});
    if (!covers_scope(p.attributes, reg_, p.config.channel)) {
      return make(CollectReason::kIncomplete, {});
    }
    Sample s;
    s.timestamp = clock_();
    s.ad_id = p.ad_id;
    s.config = p.config;
    s.attributes = p.attributes;
    s.dnt = false;
    s.complete = true;
    CollectResult r;
    try {
      r.sample_id = store_.append(std::move(s), reg_);
    } catch (const Error& e) {
      return make(CollectReason::kStorage, e.what());
    }
    return r;
  }

  static CollectResult make(CollectReason reason, std::string detail) {
    CollectResult r;
    r.status = status_of(reason);
    r.reason = reason;
    r.detail = std::move(detail);
    return r;
  }

  CollectResult count(CollectReason reason, std::string detail) {
    return count_result(make(reason, std::move(detail)));
  }

  CollectResult count_result(CollectResult r) {
    if (r.status == CollectStatus::kStored) {
      ++counters_.stored;
    } else {
      ++counters_.by_reason[static_cast<std::size_t>(r.reason)];
    }
    return r;
  }

  CollectConfig config_;
  const AttributeRegistry& reg_;
  Clock clock_;
  SampleStore store_;
  CollectCounters counters_;
};

// HTTP front end: POST /v1/collect, GET /v1/healthz, GET /v1/stats and
// GET /v1/export?from=&to= (UTC seconds, half-open).
class CollectServer {
 public:
  // Bodies above this are refused by the transport before they are counted.
  static constexpr std::size_t kTransportCap = 16 * 1024 * 1024;

  CollectServer(const CollectConfig& config, const AttributeRegistry& reg,
                Clock clock = system_clock_seconds)
      : service_(config, reg, std::move(clock)) {
    server_.set_payload_max_length(std::max(kTransportCap, config.max_payload_bytes + 1));
    server_.Post("/v1/collect", [this](const httplib::Request& req, httplib::Response& res) {
      const auto r = service_.handle_collect(std::string_view(req.body));
      res.status = r.http_status();
      res.set_content(r.to_json().dump(), "application/json");
    });
    server_.Get("/v1/healthz", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"status":"ok"})", "application/json");
    });
    server_.Get("/v1/stats", [this](const httplib::Request&, httplib::Response& res) {
      res.set_content(service_.stats_json().dump(), "application/json");
    });
    server_.Get("/v1/export", [this](const httplib::Request& req, httplib::Response& res) {
      TimeRange range;
      try {
        if (req.has_param("from")) range.from = std::stoll(req.get_param_value("from"));
        if (req.has_param("to")) range.to = std::stoll(req.get_param_value("to"));
      } catch (const std::exception&) {
        res.status = 400;
        res.set_content(R"({"status":"rejected","reason":"bad_range"})", "application/json");
        return;
      }
      std::ostringstream out;
      try {
        service_.export_raw(out, range);
      } catch (const Error&) {
        res.status = 503;
        res.set_content(R"({"status":"failed","reason":"storage"})", "application/json");
        return;
      }
      res.set_content(out.str(), "application/x-ndjson");
    });
  }

  CollectService& service() { return service_; }

  // Blocks until stop(). False when the address cannot be bound.
  bool listen() {
    return server_.listen(service_.config().listen_host, service_.config().listen_port);
  }

  // Binds an ephemeral port; serve it with listen_after_bind().
  int bind_any_port() { return server_.bind_to_any_port(service_.config().listen_host); }
  bool listen_after_bind() { return server_.listen_after_bind(); }

  void wait_until_ready() const { server_.wait_until_ready(); }
  void stop() { server_.stop(); }

 private:
  CollectService service_;
  httplib::Server server_;
};

}  // namespace adfp
