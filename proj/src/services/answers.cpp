#include <cctype>

#include "vssc/services/clients.hpp"

namespace vssc::services {

std::optional<std::string> find_arg(const BackendArgs& args, std::string_view key) {
  for (const auto& [k, v] : args) {
    if (k == key) return v;
  }
  return std::nullopt;
}

Answer normalize_answer(std::string_view raw) {
  std::size_t i = 0;
  while (i < raw.size() && !std::isalnum(static_cast<unsigned char>(raw[i]))) ++i;
  std::string token;
  while (i < raw.size() && std::isalnum(static_cast<unsigned char>(raw[i]))) {
    token.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(raw[i]))));
    ++i;
  }
  return token == "yes" ? Answer::kYes : Answer::kNo;
}

}  // namespace vssc::services
