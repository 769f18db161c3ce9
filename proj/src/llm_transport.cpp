#include <cstdlib>
#include <fstream>
#include <regex>
#include <thread>

#include "httplib.h"
#include "ravenx/llm.hpp"

namespace ravenx::llm {

nlohmann::json request_body(const ChatRequest& request) {
  return {{"model", request.model},
          {"messages", nlohmann::json::array({{{"role", "user"}, {"content", request.prompt}}})},
          {"temperature", request.temperature},
          {"n", request.n}};
}

std::vector<std::string> parse_completion_body(const nlohmann::json& body) {
  if (!body.is_object() || !body.contains("choices") || !body["choices"].is_array()) {
    throw EndpointError("completion response has no choices array");
  }
  std::vector<std::string> out;
  for (const auto& choice : body["choices"]) {
    const auto& content = choice.at("message").at("content");
    out.push_back(content.is_string() ? content.get<std::string>() : std::string());
  }
  return out;
}

HttpConfig HttpConfig::from_env() {
  HttpConfig c;
  if (const char* url = std::getenv("RAVENX_LLM_BASE_URL")) c.base_url = url;
  if (const char* key = std::getenv("RAVENX_LLM_API_KEY")) c.api_key = key;
  return c;
}

HttpEndpoint::HttpEndpoint(HttpConfig config) : config_(std::move(config)) {
  static const std::regex url_re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(config_.base_url, m, url_re)) {
    throw std::invalid_argument("endpoint base URL must look like http(s)://host[:port][/path], got '" +
                                config_.base_url + "'");
  }
  scheme_host_port_ = m[1].str();
  path_ = m[2].str();
  while (!path_.empty() && path_.back() == '/') path_.pop_back();
  path_ += "/chat/completions";
}

std::vector<std::string> HttpEndpoint::complete(const ChatRequest& request) {
  httplib::Client client(scheme_host_port_);
  client.set_connection_timeout(config_.timeout);
  client.set_read_timeout(config_.timeout);
  client.set_write_timeout(config_.timeout);
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

  auto res = client.Post(path_, headers, request_body(request).dump(), "application/json");
  if (!res) throw EndpointError("request to " + scheme_host_port_ + path_ + " failed: " + httplib::to_string(res.error()));
  if (res->status != 200) {
    throw EndpointError("HTTP " + std::to_string(res->status) + " from " + path_ + ": " + res->body.substr(0, 200));
  }
  nlohmann::json body;
  try {
    body = nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::exception& e) {
    throw EndpointError(std::string("malformed completion response: ") + e.what());
  }
  return parse_completion_body(body);
}

ScriptedEndpoint::ScriptedEndpoint(std::map<std::string, std::vector<std::string>> script)
    : script_(std::move(script)) {}

ScriptedEndpoint ScriptedEndpoint::from_json(const nlohmann::json& j) {
  ScriptedEndpoint e;
  for (const auto& entry : j.at("responses")) {
    e.add(entry.at("prompt").get<std::string>(), entry.at("completions").get<std::vector<std::string>>());
  }
  return e;
}

ScriptedEndpoint ScriptedEndpoint::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scripted responses " + path.string());
  return from_json(nlohmann::json::parse(in));
}

void ScriptedEndpoint::add(std::string prompt, std::vector<std::string> completions) {
  script_[std::move(prompt)] = std::move(completions);
}

std::vector<std::string> ScriptedEndpoint::complete(const ChatRequest& request) {
  const auto it = script_.find(request.prompt);
  if (it == script_.end()) throw EndpointError("no scripted completion for prompt:\n" + request.prompt);
  const auto& all = it->second;
  const auto n = std::min(all.size(), static_cast<std::size_t>(std::max(request.n, 0)));
  return {all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n)};
}

QueryResult query(Endpoint& endpoint, const ChatRequest& request, const RetryPolicy& retry) {
  if (request.n < 1) throw std::invalid_argument("query: n must be at least 1");
  QueryResult result;
  auto backoff = retry.initial_backoff;
  int failures = 0;
  while (static_cast<int>(result.responses.size()) < request.n) {
    ChatRequest part = request;
    part.n = request.n - static_cast<int>(result.responses.size());
    ++result.attempts;
    try {
      auto got = endpoint.complete(part);
      if (got.empty()) throw EndpointError("endpoint returned no completions");
      if (static_cast<int>(got.size()) > part.n) got.resize(static_cast<std::size_t>(part.n));
      result.responses.insert(result.responses.end(), got.begin(), got.end());
      continue;
    } catch (const EndpointError& e) {
      result.error = e.what();
    }
    if (++failures >= retry.max_attempts) {
      result.failed = true;
      return result;
    }
    if (retry.sleep) {
      retry.sleep(backoff);
    } else {
      std::this_thread::sleep_for(backoff);
    }
    backoff = std::chrono::milliseconds(static_cast<long long>(static_cast<double>(backoff.count()) * retry.multiplier));
  }
  result.error.clear();
  return result;
}

}  // namespace ravenx::llm
