#pragma once

#include <json.hpp>

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace decompeval {

class GatewayError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The prompt does not fit the model's context, either by the local estimate
/// or as reported by the endpoint.
class ContextOverflowError : public GatewayError {
 public:
  using GatewayError::GatewayError;
};

struct ChatMessage {
  std::string role;  // system | user | assistant
  std::string content;
  bool operator==(const ChatMessage&) const = default;
};

void to_json(nlohmann::json& j, const ChatMessage& m);
void from_json(const nlohmann::json& j, ChatMessage& m);

struct ModelConfig {
  std::string model_id;
  double temperature = 0.0;
  double top_p = 1.0;
  std::string endpoint;  // base URL; requests go to <endpoint>/chat/completions
  std::string auth_env;  // name of the environment variable holding the API key
  std::int64_t max_context_hint = 0;  // tokens; 0 disables the local guard

  /// Throws std::invalid_argument when model_id is empty or sampling
  /// parameters are out of range.
  void validate() const;
};

void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);

struct UsageRecord {
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
  std::int64_t wall_time_ms = 0;
  [[nodiscard]] std::int64_t total_tokens() const { return prompt_tokens + completion_tokens; }
  bool operator==(const UsageRecord&) const = default;
};

struct ChatExchange {
  std::string key;
  std::string model_id;
  std::vector<ChatMessage> request_messages;
  std::string response_text;
  UsageRecord usage;
  bool replayed = false;  // not persisted
};

void to_json(nlohmann::json& j, const ChatExchange& e);
void from_json(const nlohmann::json& j, ChatExchange& e);

/// sha256 over the canonical JSON of (model_id, messages).
std::string request_key(std::string_view model_id, const std::vector<ChatMessage>& messages);

/// chars/4, rounded up.
std::int64_t estimate_tokens(const std::vector<ChatMessage>& messages);

/// Content-addressed exchanges, one file per key under `dir`.
class ReplayStore {
 public:
  explicit ReplayStore(std::filesystem::path dir);

  [[nodiscard]] std::optional<ChatExchange> lookup(const std::string& key) const;
  /// Persists the exchange. Re-recording a key with a different response
  /// invalidates it: later lookups miss and the key is listed as invalid.
  void record(const ChatExchange& exchange);
  [[nodiscard]] bool invalidated(const std::string& key) const;
  [[nodiscard]] std::size_t size() const;
  [[nodiscard]] const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path path_for(const std::string& key) const;
  std::filesystem::path dir_;
  mutable std::mutex mu_;
};

struct TransportReply {
  std::string text;
  std::optional<std::int64_t> prompt_tokens;
  std::optional<std::int64_t> completion_tokens;
};

class TransportError : public std::runtime_error {
 public:
  TransportError(const std::string& what, bool retryable, bool context_overflow = false)
      : std::runtime_error(what), retryable_(retryable), context_overflow_(context_overflow) {}
  [[nodiscard]] bool retryable() const { return retryable_; }
  [[nodiscard]] bool context_overflow() const { return context_overflow_; }

 private:
  bool retryable_;
  bool context_overflow_;
};

class ChatTransport {
 public:
  virtual ~ChatTransport() = default;
  virtual TransportReply send(const ModelConfig& config, const std::vector<ChatMessage>& messages) = 0;
};

/// OpenAI-compatible chat-completions over HTTP(S).
class HttpTransport : public ChatTransport {
 public:
  explicit HttpTransport(std::chrono::seconds timeout = std::chrono::seconds(300));
  TransportReply send(const ModelConfig& config, const std::vector<ChatMessage>& messages) override;

 private:
  std::chrono::seconds timeout_;
};

/// In-process responder; stands in for a model in tests and offline runs.
class FunctionTransport : public ChatTransport {
 public:
  using Fn = std::function<std::string(const ModelConfig&, const std::vector<ChatMessage>&)>;
  explicit FunctionTransport(Fn fn) : fn_(std::move(fn)) {}
  TransportReply send(const ModelConfig& config, const std::vector<ChatMessage>& messages) override {
    return TransportReply{fn_(config, messages), std::nullopt, std::nullopt};
  }

 private:
  Fn fn_;
};

struct GatewayOptions {
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{500};
  /// Minimum spacing between requests to one endpoint; zero disables.
  std::chrono::milliseconds min_request_interval{0};
};

/// Store lookup first, then the transport (if any). Without a transport the
/// gateway is replay-only and a miss is a GatewayError.
class Gateway {
 public:
  Gateway(std::shared_ptr<ReplayStore> store, std::shared_ptr<ChatTransport> transport = nullptr,
          GatewayOptions options = {});

  ChatExchange complete(const ModelConfig& config, const std::vector<ChatMessage>& messages);

  [[nodiscard]] std::size_t transport_calls() const { return transport_calls_.load(); }
  [[nodiscard]] std::size_t replay_hits() const { return replay_hits_.load(); }
  [[nodiscard]] bool replay_only() const { return transport_ == nullptr; }
  [[nodiscard]] ReplayStore& store() { return *store_; }

 private:
  void wait_turn(const std::string& endpoint);

  std::shared_ptr<ReplayStore> store_;
  std::shared_ptr<ChatTransport> transport_;
  GatewayOptions options_;
  std::mutex rate_mu_;
  std::map<std::string, std::chrono::steady_clock::time_point> next_slot_;
  std::atomic<std::size_t> transport_calls_{0};
  std::atomic<std::size_t> replay_hits_{0};
};

struct UsageSummary {
  std::size_t tasks = 0;
  std::int64_t total_tokens = 0;
  double avg_tokens = 0.0;
  std::int64_t median_tokens = 0;
  double avg_time_s = 0.0;
  double median_time_s = 0.0;
};

/// Order statistics over per-task sums; the median of an even count is the
/// lower-middle element.
UsageSummary aggregate_usage(const std::vector<std::vector<UsageRecord>>& exchanges_per_task);

// Structured extraction from model responses.

class ExtractionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SchemaValidationError : public std::runtime_error {
 public:
  SchemaValidationError(const std::string& schema, std::vector<std::string> problems);
  [[nodiscard]] const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

inline constexpr std::string_view kScorecardSchema = "uraf-scorecard";
inline constexpr std::string_view kRepairEditsSchema = "repair-edits";

/// Problems with `value` under the schema; empty when valid. Throws
/// std::invalid_argument for an unregistered schema id.
std::vector<std::string> schema_problems(const nlohmann::json& value, std::string_view schema_id);

/// Fenced ```json blocks first, then brace-balanced objects in text order; the
/// first candidate that parses and validates wins.
nlohmann::json extract_json(std::string_view response_text, std::string_view schema_id);

}  // namespace decompeval
