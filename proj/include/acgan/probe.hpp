#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "acgan/pairing.hpp"
#include "acgan/trainer.hpp"

namespace acgan {

/// Raw last-layer scores of one pairing kind, one value per patch cell.
struct ResponseSamples {
  PairingKind kind = PairingKind::RealConditional;
  std::vector<double> values;
  std::string source;
  std::size_t n_samples = 0;
  int grid_h = 0;
  int grid_w = 0;
};

using ResponseMap = std::map<PairingKind, ResponseSamples>;

enum class ProbeNoise {
  /// Deterministic generator forward pass.
  Inference,
  /// Generator dropout stays on, as during training.
  Training,
};

/**
 * Scores the first `n` samples of `dataset` under each requested pairing.
 * Pairings are built in chunks of up to 32 with one derangement per chunk.
 */
ResponseMap collect_responses(const FrozenDiscriminator& d, const PairedDataset& dataset,
                              const FrozenGenerator& g, std::span<const PairingKind> kinds,
                              std::size_t n, Rng& rng, const std::string& source = "",
                              ProbeNoise noise = ProbeNoise::Inference);

/// Fraction of values strictly above `threshold` per kind.
std::map<PairingKind, double> classification_rates(const ResponseMap& samples,
                                                   double threshold = 0.0);

struct KindHistogram {
  std::vector<std::uint64_t> counts;
  double mean = 0.0;
  double stddev = 0.0;
  double rate_true = 0.0;
  std::size_t n = 0;
};

struct HistogramReport {
  std::vector<double> edges;  // n_bins + 1, strictly increasing
  std::map<PairingKind, KindHistogram> kinds;
  /// (mean_a - mean_b) / sqrt((var_a + var_b) / 2) for every ordered kind pair.
  std::map<std::pair<PairingKind, PairingKind>, double> separation;
  std::vector<std::string> warnings;
  std::string source;
};

inline constexpr int kDefaultHistogramBins = 100;

/// Shared edges over the pooled range. Constant input collapses to one bin
/// and records a warning.
HistogramReport histogram_report(const ResponseMap& samples,
                                 int n_bins = kDefaultHistogramBins);

double mode_separation(const KindHistogram& a, const KindHistogram& b);

/**
 * Constant conditions for boundary probes. `empty` is the "no object" label:
 * every pixel of a label map set to the background class 0, or the all-zero
 * vector for class-index conditions. `zero` is the all-zero tensor in both
 * cases, an input no label map can produce.
 */
struct ConstantCondition {
  enum Kind { UniformClass, Empty, Zero } kind = Empty;
  int class_index = 0;

  static ConstantCondition uniform(int k) { return {UniformClass, k}; }
  static ConstantCondition empty() { return {Empty, 0}; }
  static ConstantCondition zero() { return {Zero, 0}; }
  std::string name() const;
};

/// The constant condition shaped like `like` (a one-hot map or class vector).
Tensor constant_condition(const ConstantCondition& c, const Tensor& like, int n_classes);

/// Pairs each of the first `n` real targets with the constant condition and
/// returns the fraction of patch scores classified true.
double constant_condition_probe(const FrozenDiscriminator& d, const PairedDataset& dataset,
                                const ConstantCondition& c, std::size_t n);

nlohmann::json to_json(const HistogramReport& r);
/// Columns: bin_lo, bin_hi, then one count column per kind.
void write_histogram_csv(const std::filesystem::path& path, const HistogramReport& r);

}  // namespace acgan
