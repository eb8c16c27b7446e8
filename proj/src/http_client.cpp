#include <cmath>
#include <cstdlib>
#include <thread>

#include "json.hpp"
#include <spdlog/spdlog.h>

#include "eventbench/backends.hpp"
#include "eventbench/error.hpp"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

namespace eventbench {

std::string generation_request_body(const GenerationRequest& request) {
  if (request.messages.empty()) {
    throw Error(ErrorCode::InvalidArgument, "generation request has no messages");
  }
  const auto& first_role = request.messages.front().role;
  if (first_role != "system" && first_role != "user") {
    throw Error(ErrorCode::InvalidArgument, "first message role must be system or user");
  }
  nlohmann::ordered_json body;
  body["model"] = request.model;
  body["messages"] = nlohmann::ordered_json::array();
  for (const auto& m : request.messages) {
    body["messages"].push_back({{"role", m.role}, {"content", m.content}});
  }
  body["temperature"] = request.temperature;
  body["max_tokens"] = request.max_tokens;
  return body.dump();
}

GenerationResponse parse_generation_response(std::string_view body) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedResponse, std::string("response is not JSON: ") + e.what());
  }
  const auto choices = doc.find("choices");
  if (choices == doc.end() || !choices->is_array() || choices->empty()) {
    throw Error(ErrorCode::MalformedResponse, "response has no choices");
  }
  const auto& first = (*choices)[0];
  if (!first.is_object() || !first.contains("message") || !first["message"].is_object() ||
      !first["message"].contains("content") || !first["message"]["content"].is_string()) {
    throw Error(ErrorCode::MalformedResponse, "first choice has no message content");
  }
  GenerationResponse out;
  out.text = first["message"]["content"].get<std::string>();
  if (auto usage = doc.find("usage"); usage != doc.end() && usage->is_object()) {
    if (auto it = usage->find("prompt_tokens"); it != usage->end() && it->is_number_integer()) {
      out.prompt_tokens = it->get<long long>();
    }
    if (auto it = usage->find("completion_tokens"); it != usage->end() && it->is_number_integer()) {
      out.completion_tokens = it->get<long long>();
    }
  }
  return out;
}

GenerationResponse http_generate(const EndpointConfig& endpoint, const GenerationRequest& request) {
  const std::string body = generation_request_body(request);
  httplib::Headers headers;
  if (!endpoint.api_key_env.empty()) {
    if (const char* key = std::getenv(endpoint.api_key_env.c_str()); key && *key) {
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }
  }

  const int attempts = std::max(1, endpoint.max_attempts);
  std::string last_error;
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    if (attempt > 1) {
      const auto delay = endpoint.backoff_base * std::pow(endpoint.backoff_factor, attempt - 2);
      std::this_thread::sleep_for(delay);
    }
    httplib::Client client(endpoint.base_url);
    const auto timeout = std::chrono::duration<double>(endpoint.timeout_seconds);
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    client.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));

    auto result = client.Post(endpoint.path, headers, body, "application/json");
    if (!result) {
      last_error = "transport: " + httplib::to_string(result.error());
    } else if (result->status == 429 || result->status >= 500) {
      last_error = "HTTP " + std::to_string(result->status);
    } else if (result->status < 200 || result->status >= 300) {
      throw Error(ErrorCode::BadStatus, endpoint.base_url + endpoint.path + " returned HTTP " +
                                            std::to_string(result->status));
    } else {
      auto response = parse_generation_response(result->body);
      response.attempts = attempt;
      return response;
    }
    spdlog::warn("{}{}: attempt {}/{} failed ({})", endpoint.base_url, endpoint.path, attempt,
                 attempts, last_error);
  }
  throw Error(ErrorCode::Transport, endpoint.base_url + endpoint.path + " failed after " +
                                        std::to_string(attempts) + " attempts: " + last_error);
}

}  // namespace eventbench
