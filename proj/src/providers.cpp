#include "docclass/providers.hpp"

#include <cmath>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "docclass/digest.hpp"
#include "docclass/errors.hpp"

namespace docclass {

std::string to_string(ProviderKind k) {
  switch (k) {
    case ProviderKind::embedding: return "embedding";
    case ProviderKind::vision_chat: return "vision_chat";
    case ProviderKind::mock_embedding: return "mock_embedding";
    case ProviderKind::mock_chat: return "mock_chat";
  }
  return "embedding";
}

ProviderKind parse_provider_kind(const std::string& s) {
  if (s == "embedding") return ProviderKind::embedding;
  if (s == "vision_chat") return ProviderKind::vision_chat;
  if (s == "mock_embedding") return ProviderKind::mock_embedding;
  if (s == "mock_chat") return ProviderKind::mock_chat;
  throw Error(Errc::config_error, "unknown provider kind \"" + s + "\"");
}

static bool is_mock(ProviderKind k) {
  return k == ProviderKind::mock_embedding || k == ProviderKind::mock_chat;
}

void validate_provider_config(const ProviderConfig& cfg) {
  if (cfg.provider_id.empty())
    throw Error(Errc::config_error, "provider_id must be nonempty");
  if (cfg.max_retries < 0)
    throw Error(Errc::config_error, "max_retries must be >= 0", cfg.provider_id);
  if (is_mock(cfg.kind)) {
    if (!cfg.base_url.empty())
      throw Error(Errc::config_error, "mock providers take no base_url", cfg.provider_id);
    if (cfg.kind == ProviderKind::mock_embedding && cfg.mock_dim == 0)
      throw Error(Errc::config_error, "mock dim must be > 0", cfg.provider_id);
    bool has_default = false;
    for (const auto& r : cfg.rules) has_default |= r.match.empty();
    if (!has_default)
      throw Error(Errc::config_error,
                  "mock rules must include a default (empty match) rule",
                  cfg.provider_id);
  } else {
    if (cfg.base_url.empty())
      throw Error(Errc::config_error, "base_url required for non-mock provider",
                  cfg.provider_id);
  }
}

const ProviderConfig& ProviderRegistry::require(const std::string& provider_id) const {
  auto it = providers.find(provider_id);
  if (it == providers.end())
    throw Error(Errc::config_error, "provider not in registry", provider_id);
  return it->second;
}

namespace {

std::string effective_auth_token(const ProviderConfig& cfg) {
  if (const char* env = std::getenv("DOCCLASS_AUTH_TOKEN"); env && *env)
    return env;
  return cfg.auth_token;
}

// Shared retry loop. `call` returns either the response body or a retryable
// failure description.
struct CallOutcome {
  bool ok = false;
  bool retryable = false;
  int http_status = 0;
  std::string body;
  std::string detail;
};

std::string call_with_retries(const ProviderConfig& cfg, const Sleeper& sleeper,
                              ProviderTelemetry& telemetry,
                              const std::function<CallOutcome()>& call,
                              const std::string& context) {
  telemetry.calls.fetch_add(1);
  int attempt = 0;
  while (true) {
    CallOutcome out = call();
    if (out.ok) return out.body;
    if (!out.retryable || attempt >= cfg.max_retries) {
      telemetry.failures.fetch_add(1);
      throw Error(Errc::provider_error,
                  out.detail + (out.http_status != 0
                                    ? " (http_status=" + std::to_string(out.http_status) + ")"
                                    : ""),
                  context);
    }
    auto delay = std::chrono::milliseconds(500) * (1LL << attempt);
    ++attempt;
    telemetry.retries.fetch_add(1);
    if (sleeper)
      sleeper(delay);
    else
      std::this_thread::sleep_for(delay);
  }
}

httplib::Client make_client(const ProviderConfig& cfg) {
  httplib::Client cli(cfg.base_url);
  auto timeout = std::chrono::milliseconds(
      static_cast<long long>(cfg.timeout_seconds * 1000.0));
  cli.set_connection_timeout(timeout);
  cli.set_read_timeout(timeout);
  cli.set_write_timeout(timeout);
  std::string token = effective_auth_token(cfg);
  if (!token.empty()) cli.set_default_headers({{"Authorization", "Bearer " + token}});
  return cli;
}

CallOutcome post_json(httplib::Client& cli, const std::string& path,
                      const nlohmann::json& body) {
  auto res = cli.Post(path, body.dump(), "application/json");
  CallOutcome out;
  if (!res) {
    out.retryable = true;
    out.detail = "transport error: " + httplib::to_string(res.error());
    return out;
  }
  out.http_status = res->status;
  if (res->status >= 200 && res->status < 300) {
    out.ok = true;
    out.body = res->body;
    return out;
  }
  out.retryable = res->status >= 500;
  out.detail = "endpoint returned status " + std::to_string(res->status);
  return out;
}

std::string png_data_uri(const PageImage& page) {
  auto png = encode_png(page);
  return "data:image/png;base64," +
         base64_encode(std::span<const std::uint8_t>(png.data(), png.size()));
}

EmbeddingVector parse_embedding_response(const std::string& body,
                                         const std::string& context) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
    const auto& data = j.at("data");
    if (!data.is_array() || data.empty())
      throw Error(Errc::provider_error, "embedding response has no data", context);
    EmbeddingVector v = data.at(0).at("embedding").get<EmbeddingVector>();
    return v;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::provider_error,
                std::string("cannot decode embedding response: ") + e.what(), context);
  }
}

EmbeddingVector receive_vector(EmbeddingVector raw, const std::string& context) {
  check_finite(raw, "embedding");
  if (norm(raw) == 0.0)
    throw Error(Errc::zero_vector, "endpoint returned a zero embedding", context);
  return l2_normalize(raw);
}

class HttpEmbeddingProvider final : public EmbeddingProvider {
 public:
  HttpEmbeddingProvider(ProviderConfig cfg, Sleeper sleeper)
      : EmbeddingProvider(std::move(cfg)), sleeper_(std::move(sleeper)) {}

  EmbeddingVector embed_text(const std::string& text) override {
    if (text.empty())
      throw Error(Errc::invalid_request, "embed_text with empty text");
    nlohmann::json body{{"model", config_.model_name}, {"input", text}};
    return request_embedding(body, "text");
  }

  EmbeddingVector embed_image(const PageImage& page, const std::string& instruction) override {
    if (page.empty())
      throw Error(Errc::invalid_request, "embed_image with empty page");
    nlohmann::json parts = nlohmann::json::array();
    parts.push_back({{"type", "image_url"},
                     {"image_url", {{"url", png_data_uri(page)}}}});
    if (!instruction.empty())
      parts.push_back({{"type", "text"}, {"text", instruction}});
    nlohmann::json body{{"model", config_.model_name}, {"input", parts}};
    return request_embedding(body, "image");
  }

 private:
  EmbeddingVector request_embedding(const nlohmann::json& body, const std::string& ctx) {
    auto cli = make_client(config_);
    std::string response = call_with_retries(
        config_, sleeper_, telemetry_,
        [&] { return post_json(cli, "/v1/embeddings", body); },
        config_.provider_id + "/" + ctx);
    return receive_vector(parse_embedding_response(response, config_.provider_id),
                          config_.provider_id);
  }

  Sleeper sleeper_;
};

class HttpChatProvider final : public ChatProvider {
 public:
  HttpChatProvider(ProviderConfig cfg, double temperature, Sleeper sleeper)
      : ChatProvider(std::move(cfg)),
        temperature_(temperature),
        sleeper_(std::move(sleeper)) {}

  std::string complete_vision_prompt(const std::string& system_text,
                                     const std::string& user_text,
                                     const PageImage& page) override {
    nlohmann::json user_parts = nlohmann::json::array();
    user_parts.push_back({{"type", "text"}, {"text", user_text}});
    if (!page.empty())
      user_parts.push_back({{"type", "image_url"},
                            {"image_url", {{"url", png_data_uri(page)}}}});
    nlohmann::json body{
        {"model", config_.model_name},
        {"temperature", temperature_},
        {"messages",
         nlohmann::json::array({
             nlohmann::json{{"role", "system"}, {"content", system_text}},
             nlohmann::json{{"role", "user"}, {"content", user_parts}},
         })}};

    auto cli = make_client(config_);
    std::string response = call_with_retries(
        config_, sleeper_, telemetry_,
        [&] { return post_json(cli, "/v1/chat/completions", body); },
        config_.provider_id + "/chat");
    return parse_chat_response(response);
  }

 private:
  std::string parse_chat_response(const std::string& body) {
    try {
      nlohmann::json j = nlohmann::json::parse(body);
      const auto& choice = j.at("choices").at(0);
      std::string finish = choice.value("finish_reason", "stop");
      if (finish == "content_filter")
        throw Error(Errc::content_filtered, "endpoint refused the request",
                    config_.provider_id);
      return choice.at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::provider_error,
                  std::string("cannot decode chat response: ") + e.what(),
                  config_.provider_id);
    }
  }

  double temperature_;
  Sleeper sleeper_;
};

const MockRule& match_rule(const std::vector<MockRule>& rules, const std::string& key) {
  for (const auto& r : rules) {
    if (r.match.empty() || key.find(r.match) != std::string::npos) return r;
  }
  throw Error(Errc::config_error, "no mock rule matched and no default present");
}

EmbeddingVector seeded_unit_vector(const std::string& seed_text, std::size_t dim) {
  SplitMix64 rng(seed_from_digest(seed_text));
  EmbeddingVector v(dim);
  for (auto& x : v) x = rng.next_signed_unit();
  return l2_normalize(v);
}

class MockEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit MockEmbeddingProvider(ProviderConfig cfg)
      : EmbeddingProvider(std::move(cfg)) {}

  EmbeddingVector embed_text(const std::string& text) override {
    if (text.empty())
      throw Error(Errc::invalid_request, "embed_text with empty text");
    return respond(text);
  }

  EmbeddingVector embed_image(const PageImage& page, const std::string& instruction) override {
    if (page.empty())
      throw Error(Errc::invalid_request, "embed_image with empty page");
    return respond(image_key(page, instruction));
  }

 private:
  EmbeddingVector respond(const std::string& key) {
    telemetry_.calls.fetch_add(1);
    const MockRule& rule = match_rule(config_.rules, key);
    std::size_t dim = rule.dim.value_or(config_.mock_dim);
    EmbeddingVector raw = mock_raw_vector(rule, key, dim, config_.mock_scale);
    return receive_vector(std::move(raw), config_.provider_id);
  }
};

class MockChatProvider final : public ChatProvider {
 public:
  explicit MockChatProvider(ProviderConfig cfg) : ChatProvider(std::move(cfg)) {}

  std::string complete_vision_prompt(const std::string& system_text,
                                     const std::string& user_text,
                                     const PageImage& page) override {
    telemetry_.calls.fetch_add(1);
    std::string key = system_text + "\n" + user_text;
    if (!page.empty()) key += "\n" + image_key(page, "");
    return match_rule(config_.rules, key).text;
  }
};

}  // namespace

EmbeddingVector mock_raw_vector(const MockRule& rule, const std::string& payload_key,
                                std::size_t dim, double scale) {
  EmbeddingVector v;
  if (rule.seed.empty()) {
    v = seeded_unit_vector("payload:" + payload_key, dim);
  } else {
    v = seeded_unit_vector("seed:" + rule.seed, dim);
    if (rule.spread > 0.0) {
      EmbeddingVector noise = seeded_unit_vector("noise:" + payload_key, dim);
      for (std::size_t i = 0; i < dim; ++i) v[i] += rule.spread * noise[i];
      v = l2_normalize(v);
    }
  }
  for (auto& x : v) x *= scale;
  return v;
}

std::unique_ptr<EmbeddingProvider> make_embedding_provider(const ProviderConfig& cfg,
                                                           double, Sleeper sleeper) {
  validate_provider_config(cfg);
  switch (cfg.kind) {
    case ProviderKind::embedding:
      return std::make_unique<HttpEmbeddingProvider>(cfg, std::move(sleeper));
    case ProviderKind::mock_embedding:
      return std::make_unique<MockEmbeddingProvider>(cfg);
    default:
      throw Error(Errc::config_error, "provider is not an embedding provider",
                  cfg.provider_id);
  }
}

std::unique_ptr<ChatProvider> make_chat_provider(const ProviderConfig& cfg,
                                                 double temperature, Sleeper sleeper) {
  validate_provider_config(cfg);
  switch (cfg.kind) {
    case ProviderKind::vision_chat:
      return std::make_unique<HttpChatProvider>(cfg, temperature, std::move(sleeper));
    case ProviderKind::mock_chat:
      return std::make_unique<MockChatProvider>(cfg);
    default:
      throw Error(Errc::config_error, "provider is not a chat provider",
                  cfg.provider_id);
  }
}

}  // namespace docclass
