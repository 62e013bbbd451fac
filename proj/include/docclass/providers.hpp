#pragma once

#include <atomic>
#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "docclass/image.hpp"
#include "docclass/vectorspace.hpp"

namespace docclass {

enum class ProviderKind { embedding, vision_chat, mock_embedding, mock_chat };

std::string to_string(ProviderKind k);
ProviderKind parse_provider_kind(const std::string& s);

// One mock behavior rule. Rules are evaluated in declaration order against
// the payload key (the text itself, or the stable image key); the first
// substring match wins and an empty `match` matches everything, so the
// mandatory default rule is simply a trailing empty-match rule.
struct MockRule {
  std::string match;
  // embedding response: fixed seed direction, optionally jittered per payload
  std::string seed;      // empty -> vector derived purely from the payload digest
  double spread = 0.0;   // jitter magnitude around the seed direction
  std::optional<std::size_t> dim;  // per-rule dim override
  // chat response
  std::string text;
};

struct ProviderConfig {
  std::string provider_id;
  ProviderKind kind = ProviderKind::mock_embedding;
  std::string base_url;    // required iff kind is non-mock
  std::string model_name;
  double timeout_seconds = 30.0;
  int max_retries = 2;
  std::string auth_token;  // DOCCLASS_AUTH_TOKEN overrides
  std::string family;      // plot grouping: embedding | vlm | vlm_sft
  // mock-only knobs
  std::size_t mock_dim = 64;
  double mock_scale = 1.0;  // scales raw mock output before the client normalizes
  std::vector<MockRule> rules;
};

void validate_provider_config(const ProviderConfig& cfg);

struct ProviderTelemetry {
  std::atomic<std::uint64_t> calls{0};
  std::atomic<std::uint64_t> retries{0};
  std::atomic<std::uint64_t> failures{0};
};

// Injectable so retry tests can record backoff delays instead of sleeping.
using Sleeper = std::function<void(std::chrono::milliseconds)>;

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  // Both return unit vectors: raw endpoint output is L2-normalized on receipt.
  virtual EmbeddingVector embed_text(const std::string& text) = 0;
  virtual EmbeddingVector embed_image(const PageImage& page, const std::string& instruction) = 0;
  const ProviderConfig& config() const { return config_; }
  const ProviderTelemetry& telemetry() const { return telemetry_; }

 protected:
  explicit EmbeddingProvider(ProviderConfig cfg) : config_(std::move(cfg)) {}
  ProviderConfig config_;
  ProviderTelemetry telemetry_;
};

class ChatProvider {
 public:
  virtual ~ChatProvider() = default;
  virtual std::string complete_vision_prompt(const std::string& system_text,
                                             const std::string& user_text,
                                             const PageImage& page) = 0;
  const ProviderConfig& config() const { return config_; }
  const ProviderTelemetry& telemetry() const { return telemetry_; }

 protected:
  explicit ChatProvider(ProviderConfig cfg) : config_(std::move(cfg)) {}
  ProviderConfig config_;
  ProviderTelemetry telemetry_;
};

// Wire convention for non-mock providers:
//   POST {base}/v1/embeddings        {"model", "input"}
//   POST {base}/v1/chat/completions  {"model", "temperature", "messages"}
// Images travel as base64 PNG data-URI parts. Timeouts and 5xx responses are
// retried up to max_retries times with exponential backoff starting at 0.5 s;
// 4xx responses are never retried.
std::unique_ptr<EmbeddingProvider> make_embedding_provider(
    const ProviderConfig& cfg, double temperature = 0.0, Sleeper sleeper = {});
std::unique_ptr<ChatProvider> make_chat_provider(
    const ProviderConfig& cfg, double temperature = 0.0, Sleeper sleeper = {});

struct ProviderRegistry {
  std::map<std::string, ProviderConfig> providers;

  const ProviderConfig& require(const std::string& provider_id) const;
};

// Raw mock vector before normalization; exposed for tests that pin the
// mock geometry.
EmbeddingVector mock_raw_vector(const MockRule& rule, const std::string& payload_key,
                                std::size_t dim, double scale);

}  // namespace docclass
