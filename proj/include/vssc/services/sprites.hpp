#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "vssc/core/image.hpp"

namespace vssc::services {

struct Sprite {
  ImageBuffer rgb;   // 3 channels
  FloatPlane alpha;  // same size, [0,1]
};

// Trigger phrase -> sprite variants. Phrases are matched case-insensitively.
class SpriteLibrary {
 public:
  void add(const std::string& trigger, Sprite sprite);
  bool contains(const std::string& trigger) const;
  // Throws ConfigError for unregistered phrases.
  const std::vector<Sprite>& variants(const std::string& trigger) const;
  std::vector<std::string> triggers() const;
  // Content digest; local edits are a function of (inputs, seed, version).
  std::string version() const;

  // Procedurally drawn sprites for the common trigger phrases (flowers,
  // berries, nuts, herbs, ...), three variants each.
  static SpriteLibrary builtin();
  // <dir>/<trigger>/<any>.png, RGBA. Directory names use '_' for spaces.
  static SpriteLibrary load_directory(const std::filesystem::path& dir);

 private:
  std::map<std::string, std::vector<Sprite>> entries_;
};

// Draws the procedural sprite for one phrase; exposed for asset export.
Sprite draw_builtin_sprite(const std::string& trigger, int variant, int size = 32);
std::vector<std::string> builtin_trigger_names();

}  // namespace vssc::services
