#include "decompeval/llm.hpp"

#include "decompeval/util.hpp"

#include <algorithm>
#include <thread>

namespace decompeval {

using nlohmann::json;

void to_json(json& j, const ChatMessage& m) { j = json{{"role", m.role}, {"content", m.content}}; }

void from_json(const json& j, ChatMessage& m) {
  m.role = j.at("role").get<std::string>();
  m.content = j.at("content").get<std::string>();
}

void ModelConfig::validate() const {
  if (model_id.empty()) throw std::invalid_argument("model_id must not be empty");
  if (temperature < 0.0) throw std::invalid_argument("temperature must be >= 0");
  if (top_p <= 0.0 || top_p > 1.0) throw std::invalid_argument("top_p must be in (0, 1]");
  if (max_context_hint < 0) throw std::invalid_argument("max_context_hint must be >= 0");
}

void to_json(json& j, const ModelConfig& c) {
  j = json{{"model_id", c.model_id},   {"temperature", c.temperature}, {"top_p", c.top_p},
           {"endpoint", c.endpoint},   {"auth_env", c.auth_env},       {"max_context_hint", c.max_context_hint}};
}

void from_json(const json& j, ModelConfig& c) {
  c.model_id = j.at("model_id").get<std::string>();
  c.temperature = j.value("temperature", 0.0);
  c.top_p = j.value("top_p", 1.0);
  c.endpoint = j.value("endpoint", std::string());
  c.auth_env = j.value("auth_env", std::string());
  c.max_context_hint = j.value("max_context_hint", std::int64_t{0});
}

void to_json(json& j, const ChatExchange& e) {
  j = json{{"key", e.key},
           {"model_id", e.model_id},
           {"request_messages", e.request_messages},
           {"response_text", e.response_text},
           {"usage",
            {{"prompt_tokens", e.usage.prompt_tokens},
             {"completion_tokens", e.usage.completion_tokens},
             {"wall_time_ms", e.usage.wall_time_ms}}}};
}

void from_json(const json& j, ChatExchange& e) {
  e.key = j.at("key").get<std::string>();
  e.model_id = j.at("model_id").get<std::string>();
  e.request_messages = j.at("request_messages").get<std::vector<ChatMessage>>();
  e.response_text = j.at("response_text").get<std::string>();
  const auto& u = j.at("usage");
  e.usage.prompt_tokens = u.at("prompt_tokens").get<std::int64_t>();
  e.usage.completion_tokens = u.at("completion_tokens").get<std::int64_t>();
  e.usage.wall_time_ms = u.at("wall_time_ms").get<std::int64_t>();
}

std::string request_key(std::string_view model_id, const std::vector<ChatMessage>& messages) {
  const json canon = {{"messages", messages}, {"model_id", std::string(model_id)}};
  return sha256_hex(canon.dump());
}

std::int64_t estimate_tokens(const std::vector<ChatMessage>& messages) {
  std::int64_t chars = 0;
  for (const auto& m : messages) chars += static_cast<std::int64_t>(m.content.size());
  return (chars + 3) / 4;
}

ReplayStore::ReplayStore(std::filesystem::path dir) : dir_(std::move(dir)) { std::filesystem::create_directories(dir_); }

std::filesystem::path ReplayStore::path_for(const std::string& key) const { return dir_ / (key + ".json"); }

std::optional<ChatExchange> ReplayStore::lookup(const std::string& key) const {
  std::lock_guard lock(mu_);
  if (std::filesystem::exists(dir_ / (key + ".invalid"))) return std::nullopt;
  const auto p = path_for(key);
  if (!std::filesystem::exists(p)) return std::nullopt;
  return json::parse(read_text_file(p)).get<ChatExchange>();
}

void ReplayStore::record(const ChatExchange& exchange) {
  std::lock_guard lock(mu_);
  const auto p = path_for(exchange.key);
  if (std::filesystem::exists(p)) {
    const auto prior = json::parse(read_text_file(p)).get<ChatExchange>();
    if (prior.response_text != exchange.response_text) {
      write_text_file(dir_ / (exchange.key + ".invalid"), exchange.response_text);
    }
    return;
  }
  write_text_file(p, json(exchange).dump(2) + "\n");
}

bool ReplayStore::invalidated(const std::string& key) const {
  std::lock_guard lock(mu_);
  return std::filesystem::exists(dir_ / (key + ".invalid"));
}

std::size_t ReplayStore::size() const {
  std::lock_guard lock(mu_);
  std::size_t n = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir_)) {
    if (e.path().extension() == ".json") ++n;
  }
  return n;
}

Gateway::Gateway(std::shared_ptr<ReplayStore> store, std::shared_ptr<ChatTransport> transport, GatewayOptions options)
    : store_(std::move(store)), transport_(std::move(transport)), options_(options) {
  if (!store_) throw std::invalid_argument("Gateway requires a replay store");
  if (options_.max_attempts < 1) throw std::invalid_argument("max_attempts must be >= 1");
}

void Gateway::wait_turn(const std::string& endpoint) {
  if (options_.min_request_interval.count() <= 0) return;
  std::chrono::steady_clock::time_point slot;
  {
    std::lock_guard lock(rate_mu_);
    const auto now = std::chrono::steady_clock::now();
    auto& next = next_slot_[endpoint];
    slot = std::max(now, next);
    next = slot + options_.min_request_interval;
  }
  std::this_thread::sleep_until(slot);
}

ChatExchange Gateway::complete(const ModelConfig& config, const std::vector<ChatMessage>& messages) {
  config.validate();
  if (messages.empty()) throw std::invalid_argument("complete: message list must not be empty");
  const auto estimate = estimate_tokens(messages);
  if (config.max_context_hint > 0 && estimate > config.max_context_hint) {
    throw ContextOverflowError("prompt of ~" + std::to_string(estimate) + " tokens exceeds context hint " +
                               std::to_string(config.max_context_hint) + " for " + config.model_id);
  }

  const std::string key = request_key(config.model_id, messages);
  if (auto hit = store_->lookup(key)) {
    ++replay_hits_;
    hit->replayed = true;
    return *hit;
  }
  if (!transport_) {
    if (store_->invalidated(key)) throw GatewayError("replay key " + key + " was invalidated by a diverging re-record");
    throw GatewayError("no recorded exchange for key " + key + " (model " + config.model_id + ") in replay-only mode");
  }

  std::string last_cause;
  auto backoff = options_.initial_backoff;
  for (int attempt = 1; attempt <= options_.max_attempts; ++attempt) {
    wait_turn(config.endpoint);
    const auto start = std::chrono::steady_clock::now();
    try {
      ++transport_calls_;
      TransportReply reply = transport_->send(config, messages);
      ChatExchange ex;
      ex.key = key;
      ex.model_id = config.model_id;
      ex.request_messages = messages;
      ex.response_text = std::move(reply.text);
      ex.usage.prompt_tokens = reply.prompt_tokens.value_or(estimate);
      ex.usage.completion_tokens =
          reply.completion_tokens.value_or(static_cast<std::int64_t>((ex.response_text.size() + 3) / 4));
      ex.usage.wall_time_ms =
          std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
      store_->record(ex);
      return ex;
    } catch (const TransportError& e) {
      if (e.context_overflow()) throw ContextOverflowError(e.what());
      last_cause = e.what();
      if (!e.retryable()) break;
    } catch (const std::exception& e) {
      last_cause = e.what();
    }
    if (attempt < options_.max_attempts) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
  }
  throw GatewayError("chat completion failed for " + config.model_id + ": " + last_cause);
}

UsageSummary aggregate_usage(const std::vector<std::vector<UsageRecord>>& exchanges_per_task) {
  UsageSummary s;
  if (exchanges_per_task.empty()) return s;
  std::vector<std::int64_t> tokens;
  std::vector<std::int64_t> times;
  for (const auto& task : exchanges_per_task) {
    std::int64_t t = 0;
    std::int64_t ms = 0;
    for (const auto& u : task) {
      t += u.total_tokens();
      ms += u.wall_time_ms;
    }
    tokens.push_back(t);
    times.push_back(ms);
  }
  auto lower_median = [](std::vector<std::int64_t> v) {
    std::sort(v.begin(), v.end());
    return v[(v.size() - 1) / 2];
  };
  s.tasks = tokens.size();
  for (auto t : tokens) s.total_tokens += t;
  std::int64_t total_ms = 0;
  for (auto m : times) total_ms += m;
  const auto n = static_cast<double>(s.tasks);
  s.avg_tokens = static_cast<double>(s.total_tokens) / n;
  s.median_tokens = lower_median(tokens);
  s.avg_time_s = static_cast<double>(total_ms) / 1000.0 / n;
  s.median_time_s = static_cast<double>(lower_median(times)) / 1000.0;
  return s;
}

}  // namespace decompeval
