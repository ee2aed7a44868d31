#include <algorithm>
#include <cctype>

#include "vssc/services/local.hpp"

namespace vssc::services {

namespace {

std::string lower(std::string s) {
  for (auto& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return s;
}

VqaResponse reply(bool yes) {
  VqaResponse r;
  r.answer = yes ? Answer::kYes : Answer::kNo;
  r.raw = yes ? "yes" : "no";
  return r;
}

}  // namespace

double central_overlap(const CompositeMetadata& meta, int height, int width, double central_fraction) {
  const double cw = central_fraction * width;
  const double ch = central_fraction * height;
  const double cx0 = (width - cw) / 2.0, cy0 = (height - ch) / 2.0;
  const double ox = std::max(0.0, std::min(cx0 + cw, static_cast<double>(meta.x + meta.side)) - std::max(cx0, static_cast<double>(meta.x)));
  const double oy = std::max(0.0, std::min(cy0 + ch, static_cast<double>(meta.y + meta.side)) - std::max(cy0, static_cast<double>(meta.y)));
  const double area = cw * ch;
  return area > 0.0 ? ox * oy / area : 0.0;
}

VqaResponse RuleVqa::ask(const VqaRequest& request) {
  const std::string q = lower(request.question);
  if (!request.metadata) return reply(false);
  const CompositeMetadata& meta = *request.metadata;
  if (q.find(lower(meta.trigger)) == std::string::npos) return reply(false);
  if (q.find("exists in the image") != std::string::npos) {
    return reply(meta.coverage >= options_.min_coverage);
  }
  if (q.find("compatible with the background") != std::string::npos) {
    const double overlap =
        central_overlap(meta, request.image.height(), request.image.width(), options_.central_fraction);
    return reply(overlap <= options_.max_central_overlap);
  }
  return reply(false);
}

}  // namespace vssc::services
