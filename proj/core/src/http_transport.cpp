#include "decompeval/llm.hpp"

#include "decompeval/util.hpp"

#include <httplib.h>

#include <regex>

namespace decompeval {

using nlohmann::json;

HttpTransport::HttpTransport(std::chrono::seconds timeout) : timeout_(timeout) {}

namespace {

bool looks_like_context_error(int status, const std::string& body) {
  if (status != 400 && status != 413) return false;
  const auto lower = to_lower(body);
  return contains(lower, "context_length") || contains(lower, "context length") ||
         contains(lower, "maximum context") || contains(lower, "too many tokens");
}

}  // namespace

TransportReply HttpTransport::send(const ModelConfig& config, const std::vector<ChatMessage>& messages) {
  static const std::regex url_re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(config.endpoint, m, url_re)) {
    throw TransportError("malformed endpoint URL '" + config.endpoint + "'", false);
  }
  std::string base_path = m[2].matched ? m[2].str() : std::string();
  while (!base_path.empty() && base_path.back() == '/') base_path.pop_back();

  httplib::Client client(m[1].str());
  client.set_connection_timeout(std::chrono::seconds(30));
  client.set_read_timeout(timeout_);
  client.set_write_timeout(std::chrono::seconds(60));

  httplib::Headers headers;
  if (!config.auth_env.empty()) {
    const auto secret = env_or_empty(config.auth_env.c_str());
    if (secret.empty()) throw TransportError("environment variable " + config.auth_env + " is not set", false);
    headers.emplace("Authorization", "Bearer " + secret);
  }

  const json body = {{"model", config.model_id},
                     {"messages", messages},
                     {"temperature", config.temperature},
                     {"top_p", config.top_p},
                     {"stream", false}};
  auto res = client.Post(base_path + "/chat/completions", headers, body.dump(), "application/json");
  if (!res) throw TransportError("HTTP request failed: " + httplib::to_string(res.error()), true);
  if (res->status != 200) {
    const bool overflow = looks_like_context_error(res->status, res->body);
    const bool retryable = res->status == 408 || res->status == 429 || res->status >= 500;
    throw TransportError("HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 500), retryable, overflow);
  }

  json reply;
  try {
    reply = json::parse(res->body);
  } catch (const json::exception& e) {
    throw TransportError(std::string("unparseable response body: ") + e.what(), true);
  }
  TransportReply out;
  try {
    out.text = reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw TransportError(std::string("response lacks choices[0].message.content: ") + e.what(), true);
  }
  if (reply.contains("usage") && reply["usage"].is_object()) {
    const auto& u = reply["usage"];
    if (u.contains("prompt_tokens") && u["prompt_tokens"].is_number_integer())
      out.prompt_tokens = u["prompt_tokens"].get<std::int64_t>();
    if (u.contains("completion_tokens") && u["completion_tokens"].is_number_integer())
      out.completion_tokens = u["completion_tokens"].get<std::int64_t>();
  }
  return out;
}

}  // namespace decompeval
