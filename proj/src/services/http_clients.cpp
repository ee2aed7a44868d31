#include "vssc/services/http_clients.hpp"

#include <httplib.h>

#include <algorithm>
#include <cstdlib>
#include <thread>

#include "vssc/core/errors.hpp"
#include "vssc/core/hash.hpp"
#include "vssc/core/png_io.hpp"

namespace vssc::services {

using nlohmann::json;

TokenBucket::TokenBucket(double rate_per_second, int burst)
    : rate_(rate_per_second),
      capacity_(std::max(1, burst)),
      tokens_(capacity_),
      last_(std::chrono::steady_clock::now()) {}

void TokenBucket::acquire() {
  if (rate_ <= 0.0) return;
  std::unique_lock lock(mu_);
  for (;;) {
    const auto now = std::chrono::steady_clock::now();
    const double elapsed = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    tokens_ = std::min(capacity_, tokens_ + elapsed * rate_);
    if (tokens_ >= 1.0) {
      tokens_ -= 1.0;
      return;
    }
    const auto wait = std::chrono::duration<double>((1.0 - tokens_) / rate_);
    lock.unlock();
    std::this_thread::sleep_for(wait);
    lock.lock();
  }
}

namespace {

void split_url(const std::string& url, std::string& base, std::string& path) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) throw ConfigError("endpoint url needs a scheme: '" + url + "'");
  const auto slash = url.find('/', scheme + 3);
  base = slash == std::string::npos ? url : url.substr(0, slash);
  path = slash == std::string::npos ? "/" : url.substr(slash);
}

json loggable_body(const std::string& body) {
  auto parsed = json::parse(body, nullptr, false);
  if (!parsed.is_discarded()) return redact_images(parsed);
  return body.size() > 2048 ? body.substr(0, 2048) + "..." : body;
}

}  // namespace

HttpTransport::HttpTransport(EndpointConfig config, std::shared_ptr<AuditLog> audit)
    : config_(std::move(config)),
      audit_(audit ? std::move(audit) : std::make_shared<AuditLog>()),
      bucket_(config_.rate_per_second, config_.burst) {
  if (config_.url.empty()) throw ConfigError("endpoint url is not configured");
  split_url(config_.url, base_, path_);
}

HttpOutcome HttpTransport::post_json(const json& body) {
  const std::string payload = body.dump();
  const std::string request_hash = sha256_hex(payload);
  HttpOutcome outcome;

  if (payload.size() > config_.max_request_bytes) {
    outcome.error = "request of " + std::to_string(payload.size()) + " bytes exceeds the " +
                    std::to_string(config_.max_request_bytes) + "-byte limit";
    audit_->record({{"endpoint", config_.url}, {"request_hash", request_hash}, {"outcome", "rejected_local"},
                    {"attempts", 0}, {"error", outcome.error}});
    return outcome;
  }

  httplib::Client client(base_);
  client.set_connection_timeout(std::chrono::milliseconds(config_.timeout_ms));
  client.set_read_timeout(std::chrono::milliseconds(config_.timeout_ms));
  client.set_write_timeout(std::chrono::milliseconds(config_.timeout_ms));
  httplib::Headers headers;
  if (!config_.api_key_env.empty()) {
    if (const char* key = std::getenv(config_.api_key_env.c_str())) {
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }
  }

  int backoff = config_.backoff_ms;
  const auto start = std::chrono::steady_clock::now();
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
      backoff = std::min(backoff * 2, config_.backoff_cap_ms);
    }
    bucket_.acquire();
    ++outcome.attempts;
    auto res = client.Post(path_, headers, payload, "application/json");
    if (!res) {
      outcome.status = 0;
      outcome.error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    outcome.status = res->status;
    outcome.body = res->body;
    if (res->status >= 200 && res->status < 300) {
      outcome.error.clear();
      break;
    }
    outcome.error = "http status " + std::to_string(res->status);
    // Client errors other than throttling will not improve on retry.
    if (res->status >= 400 && res->status < 500 && res->status != 429) break;
  }
  const auto latency =
      std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
  audit_->record({{"endpoint", config_.url},
                  {"request_hash", request_hash},
                  {"latency_ms", latency},
                  {"attempts", outcome.attempts},
                  {"status", outcome.status},
                  {"outcome", outcome.error.empty() ? "ok" : "error"},
                  {"error", outcome.error},
                  {"request", redact_images(body)},
                  {"response", loggable_body(outcome.body)}});
  return outcome;
}

HttpChatClient::HttpChatClient(EndpointConfig config, std::shared_ptr<AuditLog> audit)
    : transport_(std::move(config), std::move(audit)) {}

ChatResponse HttpChatClient::complete(const ChatRequest& request) {
  json messages = json::array();
  if (!request.system.empty()) messages.push_back({{"role", "system"}, {"content", request.system}});
  messages.push_back({{"role", "user"}, {"content", request.user}});
  json body = {{"model", transport_.config().model},
               {"messages", std::move(messages)},
               {"temperature", request.temperature}};
  if (request.seed) body["seed"] = *request.seed;

  const HttpOutcome out = transport_.post_json(body);
  ChatResponse resp;
  resp.attempts = out.attempts;
  if (!out.error.empty()) {
    resp.error = out.error;
    return resp;
  }
  const json j = json::parse(out.body, nullptr, false);
  if (j.is_discarded()) {
    resp.error = "chat response is not JSON";
    return resp;
  }
  if (j.contains("choices") && !j["choices"].empty()) {
    resp.text = j["choices"][0].value("/message/content"_json_pointer, std::string{});
  } else if (j.contains("text")) {
    resp.text = j["text"].get<std::string>();
  } else {
    resp.error = "chat response carries no text";
    return resp;
  }
  resp.status = FinishStatus::kOk;
  return resp;
}

HttpEditBackend::HttpEditBackend(EndpointConfig config, std::shared_ptr<AuditLog> audit)
    : transport_(std::move(config), std::move(audit)) {}

EditResponse HttpEditBackend::edit(const EditRequest& request) {
  json args = json::object();
  for (const auto& [k, v] : request.args) args[k] = v;
  json body = {{"image", base64_encode(encode_png(request.image))},
               {"prompt", request.prompt},
               {"args", args},
               {"seed", request.seed}};
  EditResponse resp;
  resp.recorded_args = request.args;
  resp.recorded_args.emplace_back("seed", std::to_string(request.seed));
  const HttpOutcome out = transport_.post_json(body);
  resp.attempts = out.attempts;
  if (!out.error.empty()) {
    resp.error = out.error;
    return resp;
  }
  try {
    const json j = json::parse(out.body);
    ImageBuffer img = decode_png(base64_decode(j.at("image").get<std::string>()));
    if (img.channels() != request.image.channels()) img = to_rgb(img);
    if (!img.same_shape(request.image)) {
      resp.error = "edited image dimensions differ from the input";
      return resp;
    }
    resp.image = std::move(img);
  } catch (const json::exception& e) {
    resp.error = std::string("malformed edit response: ") + e.what();
  } catch (const DecodeError& e) {
    resp.error = std::string("edit response image: ") + e.what();
  }
  return resp;
}

HttpVqaClient::HttpVqaClient(EndpointConfig config, std::shared_ptr<AuditLog> audit)
    : transport_(std::move(config), std::move(audit)) {}

VqaResponse HttpVqaClient::ask(const VqaRequest& request) {
  json body = {{"image", base64_encode(encode_png(request.image))}, {"question", request.question}};
  const HttpOutcome out = transport_.post_json(body);
  VqaResponse resp;
  if (!out.error.empty()) {
    resp.error = out.error;
    return resp;
  }
  const json j = json::parse(out.body, nullptr, false);
  if (j.is_discarded()) {
    resp.raw = out.body;
  } else if (j.contains("answer")) {
    resp.raw = j["answer"].get<std::string>();
  } else if (j.contains("choices") && !j["choices"].empty()) {
    resp.raw = j["choices"][0].value("/message/content"_json_pointer, std::string{});
  } else {
    resp.error = "vqa response carries no answer";
    return resp;
  }
  resp.answer = normalize_answer(resp.raw);
  return resp;
}

}  // namespace vssc::services
