#include "acgan/probe.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace acgan {

using nlohmann::json;

namespace {

constexpr int kChunk = 32;

// Chunk boundaries that never leave a single-sample chunk.
std::vector<std::pair<std::size_t, std::size_t>> chunks(std::size_t n) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t b = 0; b < n; b += kChunk) out.push_back({b, std::min<std::size_t>(kChunk, n - b)});
  if (out.size() > 1 && out.back().second == 1) {
    out.pop_back();
    out.back().second += 1;
  }
  return out;
}

Tensor batch_of(const PairedDataset& ds, std::size_t begin, std::size_t count, bool targets) {
  std::vector<Tensor> v;
  for (std::size_t i = begin; i < begin + count; ++i)
    v.push_back(targets ? ds.samples[i].target : ds.samples[i].condition);
  return stack(v);
}

}  // namespace

ResponseMap collect_responses(const FrozenDiscriminator& d, const PairedDataset& dataset,
                              const FrozenGenerator& g, std::span<const PairingKind> kinds,
                              std::size_t n, Rng& rng, const std::string& source,
                              ProbeNoise noise) {
  if (kinds.empty()) throw std::invalid_argument("collect_responses: no pairing kinds requested");
  if (n < 2 || n > dataset.size())
    throw std::invalid_argument("collect_responses: need 2 <= n <= dataset size");
  ResponseMap out;
  for (auto k : kinds) out[k] = ResponseSamples{k, {}, source, 0, 0, 0};
  for (auto [begin, count] : chunks(n)) {
    const Tensor cond = batch_of(dataset, begin, count, false);
    const Tensor tgt = batch_of(dataset, begin, count, true);
    const Tensor fake = g.generate(cond, noise == ProbeNoise::Training ? &rng : nullptr);
    const FourPairingsBatch fp = assemble_pairings(cond, tgt, fake, rng);
    for (auto k : kinds) {
      const FieldResponse r = d.respond(fp[k].conditions, fp[k].targets);
      auto& s = out[k];
      for (float v : r.raw.values()) {
        if (!std::isfinite(v)) throw std::runtime_error("collect_responses: non-finite score");
        s.values.push_back(v);
      }
      s.n_samples += count;
      s.grid_h = r.raw.shape().h;
      s.grid_w = r.raw.shape().w;
    }
  }
  return out;
}

std::map<PairingKind, double> classification_rates(const ResponseMap& samples,
                                                   double threshold) {
  std::map<PairingKind, double> out;
  for (const auto& [k, s] : samples) {
    if (s.values.empty()) throw std::invalid_argument("classification_rates: empty samples");
    const auto hit = std::count_if(s.values.begin(), s.values.end(),
                                   [&](double v) { return v > threshold; });
    out[k] = static_cast<double>(hit) / static_cast<double>(s.values.size());
  }
  return out;
}

double mode_separation(const KindHistogram& a, const KindHistogram& b) {
  const double pooled = std::sqrt((a.stddev * a.stddev + b.stddev * b.stddev) / 2.0);
  const double diff = a.mean - b.mean;
  if (pooled > 0) return diff / pooled;
  if (diff == 0) return 0.0;
  return diff > 0 ? std::numeric_limits<double>::infinity()
                  : -std::numeric_limits<double>::infinity();
}

HistogramReport histogram_report(const ResponseMap& samples, int n_bins) {
  if (n_bins < 10) throw std::invalid_argument("histogram_report: n_bins must be >= 10");
  if (samples.empty()) throw std::invalid_argument("histogram_report: no samples");
  HistogramReport r;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& [k, s] : samples) {
    if (s.values.empty()) throw std::invalid_argument("histogram_report: empty sample set");
    const auto [mn, mx] = std::minmax_element(s.values.begin(), s.values.end());
    lo = std::min(lo, *mn);
    hi = std::max(hi, *mx);
    if (r.source.empty()) r.source = s.source;
  }
  int bins = n_bins;
  if (hi == lo) {
    r.warnings.push_back("all samples equal " + std::to_string(lo) + "; single bin");
    bins = 1;
    r.edges = {lo - 0.5, lo + 0.5};
  } else {
    r.edges.resize(bins + 1);
    for (int i = 0; i <= bins; ++i) r.edges[i] = lo + (hi - lo) * i / bins;
    r.edges.back() = hi;
  }
  const double width = (r.edges.back() - r.edges.front()) / bins;
  for (const auto& [k, s] : samples) {
    KindHistogram h;
    h.counts.assign(bins, 0);
    h.n = s.values.size();
    double sum = 0, sq = 0;
    std::size_t pos = 0;
    for (double v : s.values) {
      int b = static_cast<int>((v - r.edges.front()) / width);
      ++h.counts[std::clamp(b, 0, bins - 1)];
      sum += v;
      pos += v > 0;
    }
    h.mean = sum / h.n;
    for (double v : s.values) sq += (v - h.mean) * (v - h.mean);
    h.stddev = std::sqrt(sq / h.n);
    h.rate_true = static_cast<double>(pos) / h.n;
    r.kinds[k] = std::move(h);
  }
  for (const auto& [a, ha] : r.kinds)
    for (const auto& [b, hb] : r.kinds)
      if (a != b) r.separation[{a, b}] = mode_separation(ha, hb);
  return r;
}

std::string ConstantCondition::name() const {
  switch (kind) {
    case Empty: return "empty";
    case Zero: return "zero";
    case UniformClass: break;
  }
  return "uniform_class_" + std::to_string(class_index);
}

Tensor constant_condition(const ConstantCondition& c, const Tensor& like, int n_classes) {
  const Shape& s = like.shape();
  if (s.c != n_classes)
    throw std::invalid_argument("constant condition needs a label-valued condition");
  Tensor t(s, 0.0f);
  const bool class_vector = s.h == 1 && s.w == 1;
  if (c.kind == ConstantCondition::Zero || (c.kind == ConstantCondition::Empty && class_vector))
    return t;
  if (c.kind == ConstantCondition::UniformClass &&
      (c.class_index < 0 || c.class_index >= n_classes))
    throw std::invalid_argument("constant condition: class index " +
                                std::to_string(c.class_index) + " out of range");
  const std::size_t plane = s.plane();
  for (int n = 0; n < s.n; ++n)
    std::fill_n(t.sample(n) + c.class_index * plane, plane, 1.0f);
  return t;
}

double constant_condition_probe(const FrozenDiscriminator& d, const PairedDataset& dataset,
                                const ConstantCondition& c, std::size_t n) {
  if (n < 1 || n > dataset.size())
    throw std::invalid_argument("constant_condition_probe: need 1 <= n <= dataset size");
  if (dataset.task != Task::Label2Image && dataset.task != Task::SingleLabel2Image)
    throw std::invalid_argument("constant_condition_probe: task has no label condition");
  std::size_t hit = 0, total = 0;
  for (std::size_t b = 0; b < n; b += kChunk) {
    const std::size_t count = std::min<std::size_t>(kChunk, n - b);
    const Tensor tgt = batch_of(dataset, b, count, true);
    const Tensor cond = constant_condition(c, batch_of(dataset, b, count, false), dataset.n_classes);
    const FieldResponse r = d.respond(cond, tgt);
    for (float v : r.raw.values()) hit += v > 0;
    total += r.raw.size();
  }
  return static_cast<double>(hit) / static_cast<double>(total);
}

namespace {

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

json to_json(const HistogramReport& r) {
  json kinds = json::object();
  for (const auto& [k, h] : r.kinds)
    kinds[std::string(to_string(k))] = {{"n", h.n},
                                        {"mean", h.mean},
                                        {"std", h.stddev},
                                        {"rate_true", h.rate_true},
                                        {"counts", h.counts}};
  json sep = json::array();
  for (const auto& [ab, v] : r.separation)
    sep.push_back({{"a", to_string(ab.first)}, {"b", to_string(ab.second)},
                   {"separation", finite_or_null(v)}});
  return {{"source", r.source}, {"edges", r.edges}, {"kinds", kinds},
          {"separation", sep}, {"warnings", r.warnings}};
}

void write_histogram_csv(const std::filesystem::path& path, const HistogramReport& r) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.precision(17);
  out << "bin_lo,bin_hi";
  for (const auto& [k, h] : r.kinds) out << ',' << to_string(k);
  out << '\n';
  for (std::size_t b = 0; b + 1 < r.edges.size(); ++b) {
    out << r.edges[b] << ',' << r.edges[b + 1];
    for (const auto& [k, h] : r.kinds) out << ',' << h.counts[b];
    out << '\n';
  }
}

}  // namespace acgan
