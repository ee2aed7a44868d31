#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vssc/core/image.hpp"

namespace vssc::services {

// Contracts for the three external capabilities the poisoning pipeline needs:
// chat completion (trigger proposals), image editing (trigger insertion) and
// visual question answering (quality gate). Implementations must tolerate
// concurrent calls or document a serial contract.

enum class FinishStatus { kOk, kError };

struct ChatRequest {
  std::string system;
  std::string user;
  double temperature = 0.0;
  std::optional<std::uint64_t> seed;
};

struct ChatResponse {
  FinishStatus status = FinishStatus::kError;
  std::string text;   // present iff status == kOk
  std::string error;
  int attempts = 0;

  bool ok() const { return status == FinishStatus::kOk; }
};

class ChatClient {
 public:
  virtual ~ChatClient() = default;
  virtual ChatResponse complete(const ChatRequest& request) = 0;
};

// Ordered key/value arguments; order is preserved into manifests.
using BackendArgs = std::vector<std::pair<std::string, std::string>>;

std::optional<std::string> find_arg(const BackendArgs& args, std::string_view key);

// Placement record emitted by the local compositor and consumed by the local
// rule-based VQA. Remote backends do not produce it.
struct CompositeMetadata {
  std::string trigger;
  int x = 0;           // top-left of the sprite square
  int y = 0;
  int side = 0;        // sprite square side, pixels
  double scale = 0.0;  // side / min(H, W)
  double rotation_deg = 0.0;
  double brightness = 1.0;
  int variant = 0;
  double coverage = 0.0;  // sum of composited alpha / image area

  friend bool operator==(const CompositeMetadata&, const CompositeMetadata&) = default;
};

struct EditRequest {
  ImageBuffer image;
  std::string trigger;  // phrase to insert
  std::string prompt;   // full instruction sent to remote editors
  BackendArgs args;
  std::uint64_t seed = 0;
};

struct EditResponse {
  std::optional<ImageBuffer> image;
  std::string error;
  std::optional<CompositeMetadata> metadata;
  BackendArgs recorded_args;  // everything that determined this edit
  int attempts = 0;

  bool ok() const { return image.has_value() && error.empty(); }
};

class EditBackend {
 public:
  virtual ~EditBackend() = default;
  virtual EditResponse edit(const EditRequest& request) = 0;
  virtual std::string id() const = 0;
};

enum class Answer { kNo, kYes };

// First token, case-insensitive, punctuation stripped: "yes" -> yes,
// everything else -> no.
Answer normalize_answer(std::string_view raw);

struct VqaRequest {
  ImageBuffer image;
  std::string question;
  std::optional<CompositeMetadata> metadata;
};

struct VqaResponse {
  Answer answer = Answer::kNo;  // always populated
  std::string raw;
  std::string error;

  bool ok() const { return error.empty(); }
};

class VqaClient {
 public:
  virtual ~VqaClient() = default;
  virtual VqaResponse ask(const VqaRequest& request) = 0;
};

}  // namespace vssc::services
