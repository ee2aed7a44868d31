#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "vssc/services/clients.hpp"
#include "vssc/services/sprites.hpp"

namespace vssc::services {

struct CompositorOptions {
  double min_scale = 0.12;  // sprite side as a fraction of min(H, W)
  double max_scale = 0.25;
  double max_rotation_deg = 15.0;
  double brightness_jitter = 0.10;
  int saliency_grid = 4;  // coarse grid side used for placement
};

// Procedural stand-in for a generative editor: pastes a library sprite at a
// seeded pose in the least textured cell of a coarse grid. Pure and reentrant.
class LocalCompositor : public EditBackend {
 public:
  explicit LocalCompositor(std::shared_ptr<const SpriteLibrary> library, CompositorOptions options = {});

  EditResponse edit(const EditRequest& request) override;
  std::string id() const override;

 private:
  std::shared_ptr<const SpriteLibrary> library_;
  CompositorOptions options_;
};

struct GridCell {
  int row = 0;
  int col = 0;
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // [x0,x1) x [y0,y1)
};

// Cell with the lowest sum of squared forward differences; ties resolve to
// the first cell in row-major order.
GridCell lowest_energy_cell(const ImageBuffer& image, int grid);

// Sprite resampled to side x side after rotation (degrees) and brightness.
Sprite transform_sprite(const Sprite& sprite, int side, double rotation_deg, double brightness);

struct RuleVqaOptions {
  double min_coverage = 0.01;        // "exists" needs this much alpha area
  double central_fraction = 0.20;    // side of the protected central square
  double max_central_overlap = 0.50; // of the central square's area
};

// Answers the two standard quality criteria from compositor metadata:
// "... exists in the image" and "... is compatible with the background".
// Anything else, or a missing record, is answered "no".
class RuleVqa : public VqaClient {
 public:
  explicit RuleVqa(RuleVqaOptions options = {}) : options_(options) {}
  VqaResponse ask(const VqaRequest& request) override;

 private:
  RuleVqaOptions options_;
};

// Fraction of the central square covered by the sprite's bounding square.
double central_overlap(const CompositeMetadata& meta, int height, int width, double central_fraction);

// ---- fixtures for offline runs and tests ---------------------------------

// Returns a canned reply for every request.
class FixtureChatClient : public ChatClient {
 public:
  explicit FixtureChatClient(std::string reply) : reply_(std::move(reply)) {}
  ChatResponse complete(const ChatRequest&) override;

 private:
  std::string reply_;
};

// Degenerate editor that hands the input back unchanged.
class EchoEditBackend : public EditBackend {
 public:
  EditResponse edit(const EditRequest& request) override;
  std::string id() const override { return "echo"; }
};

class ConstantVqa : public VqaClient {
 public:
  explicit ConstantVqa(bool yes) : yes_(yes) {}
  VqaResponse ask(const VqaRequest&) override;

 private:
  bool yes_;
};

// Replays a recorded ISR table: for each trigger named in the question, the
// k-th distinct image seen passes iff round((k+1)*isr) > round(k*isr), so
// after N images exactly round(N*isr) have passed. All criteria asked about
// one image get the same answer.
class IsrFixtureVqa : public VqaClient {
 public:
  explicit IsrFixtureVqa(std::map<std::string, double> isr);
  VqaResponse ask(const VqaRequest& request) override;

 private:
  std::map<std::string, double> isr_;
  std::mutex mu_;
  std::map<std::string, std::map<std::string, bool>> decisions_;  // trigger -> image digest -> pass
};

}  // namespace vssc::services
