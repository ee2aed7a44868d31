#pragma once

#include <chrono>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include <json.hpp>

#include "vssc/services/audit.hpp"
#include "vssc/services/clients.hpp"

namespace vssc::services {

struct EndpointConfig {
  std::string url;  // scheme://host[:port]/path
  std::string model;
  int timeout_ms = 30000;
  int max_retries = 2;          // retries after the first attempt
  int backoff_ms = 250;         // doubled after every failed attempt
  int backoff_cap_ms = 8000;
  std::size_t max_request_bytes = 20 * 1024 * 1024;
  std::string api_key_env;      // name of the env var holding a bearer token
  double rate_per_second = 0.0; // 0 disables rate limiting
  int burst = 1;
};

class TokenBucket {
 public:
  TokenBucket(double rate_per_second, int burst);
  void acquire();

 private:
  std::mutex mu_;
  double rate_;
  double capacity_;
  double tokens_;
  std::chrono::steady_clock::time_point last_;
};

struct HttpOutcome {
  int status = 0;      // last HTTP status, 0 when no response arrived
  std::string body;
  std::string error;   // empty on 2xx
  int attempts = 0;
};

// JSON POST with retry, exponential backoff, rate limiting and auditing.
class HttpTransport {
 public:
  HttpTransport(EndpointConfig config, std::shared_ptr<AuditLog> audit);

  HttpOutcome post_json(const nlohmann::json& body);
  const EndpointConfig& config() const { return config_; }

 private:
  EndpointConfig config_;
  std::shared_ptr<AuditLog> audit_;
  TokenBucket bucket_;
  std::string base_;
  std::string path_;
};

class HttpChatClient : public ChatClient {
 public:
  HttpChatClient(EndpointConfig config, std::shared_ptr<AuditLog> audit);
  ChatResponse complete(const ChatRequest& request) override;

 private:
  HttpTransport transport_;
};

class HttpEditBackend : public EditBackend {
 public:
  HttpEditBackend(EndpointConfig config, std::shared_ptr<AuditLog> audit);
  EditResponse edit(const EditRequest& request) override;
  std::string id() const override { return "http:" + transport_.config().url; }

 private:
  HttpTransport transport_;
};

class HttpVqaClient : public VqaClient {
 public:
  HttpVqaClient(EndpointConfig config, std::shared_ptr<AuditLog> audit);
  VqaResponse ask(const VqaRequest& request) override;

 private:
  HttpTransport transport_;
};

}  // namespace vssc::services
