#pragma once

#include <charconv>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "json.hpp"
#include "reqlens/analysis.hpp"
#include "reqlens/error.hpp"
#include "reqlens/experiment.hpp"
#include "reqlens/lime.hpp"
#include "reqlens/session.hpp"

namespace reqlens {

struct Request {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  std::string body;
};

struct Response {
  int status = 200;
  nlohmann::json body;
};

struct ServiceOptions {
  LimeConfig lime;
  std::size_t word_set_top_k = 30;
  std::size_t default_page_size = 50;
  std::size_t max_page_size = 1000;
  std::size_t max_samples = 20000;
  std::size_t max_runs = 200;
  std::size_t default_runs = 30;
  double default_alpha = 0.05;
  std::vector<RemovalProfile> ablation_profiles = standard_profiles();
};

inline int http_status(errc code) {
  switch (code) {
    case errc::not_found: return 404;
    case errc::stale_config: return 409;
    case errc::io_error: return 500;
    default: return 422;
  }
}

namespace detail {

inline std::optional<std::uint64_t> parse_u64(std::string_view s, int base = 10) {
  std::uint64_t v = 0;
  if (s.empty()) return std::nullopt;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v, base);
  if (ec != std::errc{} || p != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::optional<double> parse_double(std::string_view s) {
  if (s.empty()) return std::nullopt;
  try {
    std::size_t used = 0;
    const double v = std::stod(std::string(s), &used);
    if (used != s.size()) return std::nullopt;
    return v;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

inline std::vector<std::string_view> split_path(std::string_view path) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < path.size()) {
    while (i < path.size() && path[i] == '/') ++i;
    const auto j = path.find('/', i);
    const auto end = j == std::string_view::npos ? path.size() : j;
    if (end > i) out.push_back(path.substr(i, end - i));
    i = end;
  }
  return out;
}

inline nlohmann::json metric_deltas(const MetricsReport& now, const MetricsReport& before) {
  nlohmann::json d = nlohmann::json::object();
  for (Metric m : kAllMetrics) {
    d[std::string(to_string(m))] = metric_value(now, m) - metric_value(before, m);
  }
  return d;
}

}  // namespace detail

// Routes JSON requests onto a Session. No sockets here; see http.hpp.
class Service {
 public:
  explicit Service(Session& session, ServiceOptions options = {})
      : session_(session), options_(std::move(options)) {}

  Session& session() { return session_; }
  const ServiceOptions& options() const { return options_; }

  Response handle(const Request& req) {
    try {
      return route(req);
    } catch (const error& e) {
      return fail(http_status(e.code()), std::string(to_string(e.code())), e.message());
    } catch (const nlohmann::json::exception& e) {
      return fail(422, "invalid_payload", e.what());
    }
  }

 private:
  Response route(const Request& req) {
    const auto parts = detail::split_path(req.path);
    const bool get = req.method == "GET";
    const bool post = req.method == "POST";
    auto method_not_allowed = [&] { return fail(405, "method_not_allowed", req.method + " " + req.path); };

    if (parts.size() == 1 && parts[0] == "requirements") {
      return get ? list_requirements(req) : method_not_allowed();
    }
    if (parts.size() == 3 && parts[0] == "requirements" && parts[2] == "explanation") {
      return get ? explanation(req, parts[1]) : method_not_allowed();
    }
    if (parts.size() == 1 && parts[0] == "metrics") {
      return get ? metrics() : method_not_allowed();
    }
    if (parts.size() == 2 && parts[0] == "analysis" && parts[1] == "word-sets") {
      return get ? word_sets(req) : method_not_allowed();
    }
    if (parts.size() == 2 && parts[0] == "analysis" && parts[1] == "ablation") {
      return get ? ablation(req) : method_not_allowed();
    }
    if (parts.size() == 2 && parts[0] == "feedback" && parts[1] == "removed-words") {
      return post ? feedback(req) : method_not_allowed();
    }
    if (parts.size() == 1 && parts[0] == "retrain") {
      return post ? retrain(req) : method_not_allowed();
    }
    return fail(404, "not_found", "no route " + req.path);
  }

  Response fail(int status, std::string code, std::string message) const {
    return {status,
            {{"error", std::move(code)},
             {"message", std::move(message)},
             {"config_hash", session_.snapshot()->hash_hex()}}};
  }

  static std::optional<std::string> query(const Request& req, const std::string& key) {
    auto it = req.query.find(key);
    if (it == req.query.end()) return std::nullopt;
    return it->second;
  }

  static std::size_t query_size(const Request& req, const std::string& key, std::size_t fallback,
                                std::size_t lo, std::size_t hi) {
    const auto raw = query(req, key);
    if (!raw) return fallback;
    const auto v = detail::parse_u64(*raw);
    if (!v || *v < lo || *v > hi) {
      throw error(errc::invalid_config, key + " must be an integer in [" + std::to_string(lo) +
                                            ", " + std::to_string(hi) + "]");
    }
    return static_cast<std::size_t>(*v);
  }

  static nlohmann::json parse_body(const Request& req) {
    auto body = nlohmann::json::parse(req.body.empty() ? "{}" : req.body);
    if (!body.is_object()) throw error(errc::invalid_config, "payload must be a JSON object");
    return body;
  }

  static std::optional<std::uint64_t> body_hash(const nlohmann::json& body) {
    if (!body.contains("config_hash") || body["config_hash"].is_null()) return std::nullopt;
    const auto& h = body["config_hash"];
    if (!h.is_string()) throw error(errc::invalid_config, "config_hash must be a hex string");
    const auto s = h.get<std::string>();
    const auto v = s.size() == 16 ? detail::parse_u64(s, 16) : std::nullopt;
    if (!v) throw error(errc::invalid_config, "config_hash must be 16 hex digits");
    return v;
  }

  static WordSet stem_list(const nlohmann::json& body, const char* key) {
    WordSet out;
    if (!body.contains(key)) return out;
    const auto& arr = body[key];
    if (!arr.is_array()) throw error(errc::invalid_config, std::string(key) + " must be an array");
    for (const auto& v : arr) {
      if (!v.is_string()) throw error(errc::invalid_stem, std::string(key) + " holds a non-string");
      out.insert(v.get<std::string>());
    }
    return out;
  }

  LimeConfig lime_from(const Request& req) const {
    LimeConfig c = options_.lime;
    c.n_samples = query_size(req, "samples", c.n_samples, 10, options_.max_samples);
    c.top_k = query_size(req, "topk", c.top_k, 1, 1000);
    return c;
  }

  Response list_requirements(const Request& req) {
    const auto snap = session_.snapshot();
    const auto& data = session_.dataset();
    const auto offset = query_size(req, "offset", 0, 0, data.size());
    const auto limit =
        query_size(req, "limit", options_.default_page_size, 1, options_.max_page_size);
    nlohmann::json items = nlohmann::json::array();
    for (std::size_t i = offset; i < data.size() && i < offset + limit; ++i) {
      const auto& r = data[i];
      items.push_back({{"id", r.id},
                       {"text", r.text},
                       {"label", std::string(to_string(r.raw_label))},
                       {"binary_label", std::string(to_string(r.binary_label()))},
                       {"predicted", std::string(to_string(snap->predictions[i]))},
                       {"prob_nfr", snap->probabilities[i].nfr},
                       {"split", snap->in_test[i] ? "test" : "train"}});
    }
    return {200,
            {{"config_hash", snap->hash_hex()},
             {"total", data.size()},
             {"offset", offset},
             {"limit", limit},
             {"items", std::move(items)}}};
  }

  Response explanation(const Request& req, std::string_view id_text) {
    const auto id = detail::parse_u64(id_text);
    if (!id || *id >= session_.dataset().size()) {
      throw error(errc::not_found, "no requirement with id " + std::string(id_text));
    }
    const auto config = lime_from(req);
    const auto snap = session_.snapshot();
    const auto ex = session_.explanation(snap, static_cast<std::size_t>(*id), config);
    nlohmann::json body = *ex;
    body["config_hash"] = snap->hash_hex();
    body["lime"] = config;
    return {200, std::move(body)};
  }

  nlohmann::json state_json(const SessionSnapshot& snap) const {
    const auto& profile = snap.settings.preprocess.profile;
    nlohmann::json j = {
        {"config_hash", snap.hash_hex()},
        {"busy", session_.busy()},
        {"generation", snap.generation},
        {"seed", snap.settings.split_seed},
        {"metrics", snap.metrics},
        {"previous_config_hash", nullptr},
        {"previous_metrics", nullptr},
        {"deltas", nullptr},
        {"profile",
         {{"name", std::string(to_string(profile.name()))}, {"removed_stems", profile.removed_stems()}}},
        {"vocabulary_size", snap.model.vocabulary.size()},
        {"previous_vocabulary_size", nullptr},
        {"train_size", snap.split.train.size()},
        {"test_size", snap.split.test.size()},
        {"warnings", snap.warnings}};
    if (snap.previous_metrics) {
      j["previous_metrics"] = *snap.previous_metrics;
      j["deltas"] = detail::metric_deltas(snap.metrics, *snap.previous_metrics);
    }
    if (snap.previous_config_hash) j["previous_config_hash"] = hex64(*snap.previous_config_hash);
    if (snap.previous_vocabulary_size) j["previous_vocabulary_size"] = *snap.previous_vocabulary_size;
    return j;
  }

  Response metrics() { return {200, state_json(*session_.snapshot())}; }

  Response word_sets(const Request& req) {
    const auto config = lime_from(req);
    const auto k = query_size(req, "k", options_.word_set_top_k, 1, 10000);
    const auto snap = session_.snapshot();
    const auto res = session_.word_sets(snap, config);
    nlohmann::json body = res->report.to_json(k);
    body["config_hash"] = snap->hash_hex();
    body["skipped"] = res->skipped;
    body["lime"] = config;
    return {200, std::move(body)};
  }

  Response ablation(const Request& req) {
    const auto runs = query_size(req, "runs", options_.default_runs, 2, options_.max_runs);
    double alpha = options_.default_alpha;
    if (const auto raw = query(req, "alpha")) {
      const auto v = detail::parse_double(*raw);
      if (!v || !(*v > 0.0 && *v < 1.0)) throw error(errc::invalid_config, "alpha must be in (0, 1)");
      alpha = *v;
    }
    const auto snap = session_.snapshot();
    std::uint32_t seed = snap->settings.split_seed;
    if (const auto raw = query(req, "seed")) {
      const auto v = detail::parse_u64(*raw);
      if (!v || *v > 0xffffffffull) throw error(errc::invalid_config, "seed must be a 32-bit integer");
      seed = static_cast<std::uint32_t>(*v);
    }
    const bool pooled = query(req, "test").value_or("welch") == "pooled";

    ExperimentSettings es;
    es.stopwords = snap->settings.preprocess.stopwords;
    es.forest = snap->settings.forest;
    es.test_fraction = snap->settings.test_fraction;
    es.threads = session_.threads();
    const auto key = std::make_tuple(
        fnv1a(nlohmann::json({{"stopwords", es.stopwords}, {"forest", es.forest},
                              {"test_fraction", es.test_fraction}})
                  .dump()),
        runs, alpha, seed, pooled);

    std::lock_guard lock(ablation_mutex_);
    auto it = ablations_.find(key);
    if (it == ablations_.end()) {
      auto report = ablation_matrix(session_.dataset(), runs, seed, alpha, es,
                                    pooled ? stats::TTestVariant::Pooled : stats::TTestVariant::Welch,
                                    options_.ablation_profiles);
      it = ablations_.emplace(key, std::make_shared<const AblationReport>(std::move(report))).first;
    }
    nlohmann::json body = *it->second;
    body["config_hash"] = snap->hash_hex();
    body["table"] = it->second->matrix.format_table();
    return {200, std::move(body)};
  }

  Response feedback(const Request& req) {
    const auto body = parse_body(req);
    const auto add = stem_list(body, "add");
    const auto remove = stem_list(body, "remove");
    const auto hash = body_hash(body);
    return {200, state_json(*session_.apply_feedback(add, remove, hash))};
  }

  Response retrain(const Request& req) {
    const auto body = parse_body(req);
    std::optional<std::uint32_t> seed;
    if (body.contains("seed") && !body["seed"].is_null()) {
      const auto& s = body["seed"];
      if (!s.is_number_unsigned() || s.get<std::uint64_t>() > 0xffffffffull) {
        throw error(errc::invalid_config, "seed must be a 32-bit unsigned integer");
      }
      seed = s.get<std::uint32_t>();
    }
    const auto hash = body_hash(body);
    return {200, state_json(*session_.retrain(seed, hash))};
  }

  Session& session_;
  ServiceOptions options_;
  std::mutex ablation_mutex_;
  std::map<std::tuple<std::uint64_t, std::size_t, double, std::uint32_t, bool>,
           std::shared_ptr<const AblationReport>>
      ablations_;
};

}  // namespace reqlens
