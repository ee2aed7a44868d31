#include "vssc/labels/verification.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "vssc/core/random.hpp"

namespace vssc::labels {

namespace {

using IndexPair = std::pair<std::size_t, std::size_t>;

IndexPair ordered(std::size_t a, std::size_t b) { return a < b ? IndexPair{a, b} : IndexPair{b, a}; }

// Draws `want` distinct pairs out of `total` possible ones. Small spaces are
// enumerated and shuffled; large ones are rejection-sampled.
template <class Enumerate, class Draw>
std::vector<IndexPair> sample_pairs(std::size_t total, std::size_t want, Rng& rng, Enumerate enumerate, Draw draw) {
  want = std::min(want, total);
  std::vector<IndexPair> out;
  if (want == 0) return out;
  if (total <= 4 * want || total <= 100000) {
    auto all = enumerate();
    rng.shuffle(all.begin(), all.end());
    all.resize(want);
    return all;
  }
  std::set<IndexPair> seen;
  while (out.size() < want) {
    const auto p = draw();
    if (seen.insert(p).second) out.push_back(p);
  }
  return out;
}

}  // namespace

PairSet build_verification_pairs(const LabeledDataset& gallery, std::size_t num_same, std::size_t num_diff,
                                 std::uint64_t seed) {
  std::map<int, std::vector<std::size_t>> by_id;
  for (std::size_t i = 0; i < gallery.size(); ++i) by_id[gallery.samples[i].label].push_back(i);

  std::size_t same_total = 0;
  for (const auto& [id, members] : by_id) same_total += members.size() * (members.size() - 1) / 2;
  const std::size_t n = gallery.size();
  const std::size_t all_pairs = n < 2 ? 0 : n * (n - 1) / 2;
  const std::size_t diff_total = all_pairs - same_total;

  PairSet result;
  Rng same_rng(derive_seed(seed, "same_pairs"));
  auto same = sample_pairs(
      same_total, num_same, same_rng,
      [&] {
        std::vector<IndexPair> all;
        for (const auto& [id, m] : by_id)
          for (std::size_t i = 0; i < m.size(); ++i)
            for (std::size_t j = i + 1; j < m.size(); ++j) all.emplace_back(m[i], m[j]);
        return all;
      },
      [&] {
        // identities weighted by their pair count
        std::uint64_t r = same_rng.below(same_total);
        for (const auto& [id, m] : by_id) {
          const std::size_t c = m.size() * (m.size() - 1) / 2;
          if (r < c) {
            const auto i = same_rng.below(m.size());
            auto j = same_rng.below(m.size() - 1);
            if (j >= i) ++j;
            return ordered(m[i], m[j]);
          }
          r -= c;
        }
        return IndexPair{0, 0};
      });

  Rng diff_rng(derive_seed(seed, "diff_pairs"));
  auto diff = sample_pairs(
      diff_total, num_diff, diff_rng,
      [&] {
        std::vector<IndexPair> all;
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = i + 1; j < n; ++j)
            if (gallery.samples[i].label != gallery.samples[j].label) all.emplace_back(i, j);
        return all;
      },
      [&] {
        for (;;) {
          const auto i = diff_rng.below(n);
          const auto j = diff_rng.below(n);
          if (gallery.samples[i].label != gallery.samples[j].label) return ordered(i, j);
        }
      });

  for (const auto& [i, j] : same)
    result.pairs.push_back({gallery.samples[i].id, gallery.samples[j].id, true, false});
  for (const auto& [i, j] : diff)
    result.pairs.push_back({gallery.samples[i].id, gallery.samples[j].id, false, false});
  result.same_count = same.size();
  result.diff_count = diff.size();
  result.insufficient = same.size() < num_same || diff.size() < num_diff;
  return result;
}

}  // namespace vssc::labels
