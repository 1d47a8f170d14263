#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "acgan/tensor.hpp"

namespace acgan {

/// Seeded random source. Every stochastic operation takes one explicitly.
using Rng = std::mt19937_64;

/// Derive an independent stream from (seed, stream id) with splitmix64.
Rng derive_rng(std::uint64_t seed, std::uint64_t stream);

enum class Task { Label2Image, Image2Depth, Image2Label, SingleLabel2Image };

std::string_view to_string(Task t);
Task parse_task(std::string_view s);

/// One (condition x, target y) pair. Both tensors have n == 1.
struct PairedSample {
  Tensor condition;
  Tensor target;
  std::string sample_id;
};

/// A task-tagged set of pairs. Conditions of label tasks are one-hot.
struct PairedDataset {
  Task task = Task::Label2Image;
  int n_classes = 0;
  std::vector<PairedSample> samples;

  bool empty() const { return samples.empty(); }
  std::size_t size() const { return samples.size(); }
  /// Throws when sample ids repeat or condition/target planes disagree.
  void validate() const;
};

enum class PairingKind {
  RealConditional,
  GeneratedConditional,
  RealAContrario,
  GeneratedAContrario,
};

inline constexpr std::array<PairingKind, 4> kAllPairings = {
    PairingKind::RealConditional, PairingKind::GeneratedConditional,
    PairingKind::RealAContrario, PairingKind::GeneratedAContrario};

inline constexpr std::size_t index_of(PairingKind k) {
  return static_cast<std::size_t>(k);
}
std::string_view to_string(PairingKind k);
PairingKind parse_pairing_kind(std::string_view s);

/// A batched set of (condition, target) pairs of one kind.
struct Pairing {
  Tensor conditions;
  Tensor targets;

  int batch() const { return conditions.shape().n; }
};

struct FourPairingsBatch {
  std::array<Pairing, 4> by_kind;
  /// Applied to conditions of both a-contrario kinds: x̃_i = x_{permutation[i]}.
  std::vector<std::size_t> permutation;
  /// True where x̃_i is content-equal to x_i despite differing by index.
  std::vector<bool> content_collision;

  const Pairing& operator[](PairingKind k) const { return by_kind[index_of(k)]; }
  Pairing& operator[](PairingKind k) { return by_kind[index_of(k)]; }
  int batch() const { return by_kind[0].batch(); }
};

/**
 * Fixed-point-free permutation of [0, n) drawn as a uniformly random non-zero
 * cyclic shift. Every shift in [1, n-1] is equally likely; the family is the
 * n-1 cyclic derangements, not all derangements.
 *
 * Throws std::invalid_argument("no derangement exists") when n <= 1.
 */
std::vector<std::size_t> derange_indices(std::size_t n, Rng& rng);

struct AContrarioBatch {
  std::vector<PairedSample> pairs;
  std::vector<std::size_t> permutation;
  std::vector<bool> content_collision;
};

/// Conditions re-paired by a derangement; targets keep their order.
AContrarioBatch make_acontrario_batch(std::span<const PairedSample> batch,
                                      Rng& rng);

struct PairingOptions {
  /**
   * When set, real-conditional pairs use the first half of the batch and
   * generated-conditional pairs the second half so that no condition shows up
   * in both. Each sub-batch then has size B/2 and B must be even.
   */
  bool disjoint_conditional_sets = false;
};

/**
 * Build the four pairings from a real batch and the generator outputs on its
 * conditions (index-aligned, batched along n). One derangement is shared by
 * both a-contrario kinds.
 */
FourPairingsBatch assemble_pairings(std::span<const PairedSample> real_batch,
                                    const Tensor& generated_targets, Rng& rng,
                                    const PairingOptions& options = {});

/// Same as above with already batched conditions/targets.
FourPairingsBatch assemble_pairings(const Tensor& conditions,
                                    const Tensor& targets,
                                    const Tensor& generated_targets, Rng& rng,
                                    const PairingOptions& options = {});

}  // namespace acgan
