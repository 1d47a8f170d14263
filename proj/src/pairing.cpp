#include "acgan/pairing.hpp"

#include <cstring>
#include <stdexcept>
#include <unordered_set>

namespace acgan {

Rng derive_rng(std::uint64_t seed, std::uint64_t stream) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return Rng(mix(mix(seed) ^ (stream * 0xd1b54a32d192ed03ULL)));
}

std::string_view to_string(Task t) {
  switch (t) {
    case Task::Label2Image: return "label2image";
    case Task::Image2Depth: return "image2depth";
    case Task::Image2Label: return "image2label";
    case Task::SingleLabel2Image: return "singlelabel2image";
  }
  return "?";
}

Task parse_task(std::string_view s) {
  for (Task t : {Task::Label2Image, Task::Image2Depth, Task::Image2Label,
                 Task::SingleLabel2Image})
    if (to_string(t) == s) return t;
  throw std::invalid_argument("unknown task '" + std::string(s) + "'");
}

std::string_view to_string(PairingKind k) {
  switch (k) {
    case PairingKind::RealConditional: return "real_conditional";
    case PairingKind::GeneratedConditional: return "generated_conditional";
    case PairingKind::RealAContrario: return "real_acontrario";
    case PairingKind::GeneratedAContrario: return "generated_acontrario";
  }
  return "?";
}

PairingKind parse_pairing_kind(std::string_view s) {
  for (PairingKind k : kAllPairings)
    if (to_string(k) == s) return k;
  throw std::invalid_argument("unknown pairing kind '" + std::string(s) + "'");
}

void PairedDataset::validate() const {
  std::unordered_set<std::string> ids;
  for (const auto& s : samples) {
    if (!ids.insert(s.sample_id).second)
      throw std::invalid_argument("duplicate sample id '" + s.sample_id + "'");
    const Shape& cs = s.condition.shape();
    const Shape& ts = s.target.shape();
    if (cs.spatial() && ts.spatial() && (cs.h != ts.h || cs.w != ts.w))
      throw std::invalid_argument("condition/target plane mismatch for '" +
                                  s.sample_id + "': " + cs.str() + " vs " +
                                  ts.str());
  }
}

std::vector<std::size_t> derange_indices(std::size_t n, Rng& rng) {
  if (n <= 1) throw std::invalid_argument("no derangement exists");
  std::uniform_int_distribution<std::size_t> shift_dist(1, n - 1);
  const std::size_t shift = shift_dist(rng);
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = (i + shift) % n;
  return perm;
}

namespace {

bool same_content(const Tensor& a, const Tensor& b) {
  return a.shape() == b.shape() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0;
}

// Row i of the result is row perm[i] of `t`.
Tensor permute_rows(const Tensor& t, std::span<const std::size_t> perm) {
  Tensor out(t.shape());
  const std::size_t stride = t.shape().sample_size();
  for (std::size_t i = 0; i < perm.size(); ++i)
    std::memcpy(out.data() + i * stride, t.data() + perm[i] * stride,
                stride * sizeof(float));
  return out;
}

std::vector<bool> collisions(const Tensor& conditions,
                             std::span<const std::size_t> perm) {
  std::vector<bool> flags(perm.size(), false);
  const std::size_t stride = conditions.shape().sample_size();
  for (std::size_t i = 0; i < perm.size(); ++i)
    flags[i] = std::memcmp(conditions.data() + i * stride,
                           conditions.data() + perm[i] * stride,
                           stride * sizeof(float)) == 0;
  return flags;
}

}  // namespace

AContrarioBatch make_acontrario_batch(std::span<const PairedSample> batch,
                                      Rng& rng) {
  if (batch.size() < 2)
    throw std::invalid_argument(
        "a-contrario batch needs at least 2 samples: no derangement exists");
  AContrarioBatch out;
  out.permutation = derange_indices(batch.size(), rng);
  out.pairs.reserve(batch.size());
  out.content_collision.resize(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const PairedSample& donor = batch[out.permutation[i]];
    out.pairs.push_back({donor.condition, batch[i].target,
                         batch[i].sample_id + "~" + donor.sample_id});
    out.content_collision[i] =
        same_content(donor.condition, batch[i].condition);
  }
  return out;
}

FourPairingsBatch assemble_pairings(std::span<const PairedSample> real_batch,
                                    const Tensor& generated_targets, Rng& rng,
                                    const PairingOptions& options) {
  std::vector<Tensor> conds, targets;
  conds.reserve(real_batch.size());
  targets.reserve(real_batch.size());
  for (const auto& s : real_batch) {
    conds.push_back(s.condition);
    targets.push_back(s.target);
  }
  if (conds.empty()) throw std::invalid_argument("empty batch");
  return assemble_pairings(stack(conds), stack(targets), generated_targets,
                           rng, options);
}

FourPairingsBatch assemble_pairings(const Tensor& conditions,
                                    const Tensor& targets,
                                    const Tensor& generated_targets, Rng& rng,
                                    const PairingOptions& options) {
  const int b = conditions.shape().n;
  if (targets.shape().n != b || generated_targets.shape().n != b)
    throw std::invalid_argument(
        "assemble_pairings: misaligned batch lengths (conditions " +
        std::to_string(b) + ", targets " + std::to_string(targets.shape().n) +
        ", generated " + std::to_string(generated_targets.shape().n) + ")");
  if (generated_targets.shape().sample_size() != targets.shape().sample_size())
    throw std::invalid_argument("generated targets do not match target shape");

  FourPairingsBatch out;
  using K = PairingKind;
  if (!options.disjoint_conditional_sets) {
    out.permutation = derange_indices(static_cast<std::size_t>(b), rng);
    Tensor shuffled = permute_rows(conditions, out.permutation);
    out.content_collision = collisions(conditions, out.permutation);
    out[K::RealConditional] = {conditions, targets};
    out[K::GeneratedConditional] = {conditions, generated_targets};
    out[K::RealAContrario] = {shuffled, targets};
    out[K::GeneratedAContrario] = {std::move(shuffled), generated_targets};
    return out;
  }

  if (b % 2 != 0 || b < 4)
    throw std::invalid_argument(
        "disjoint conditional sets need an even batch of at least 4");
  const int half = b / 2;
  Tensor cond_real = slice_batch(conditions, 0, half);
  Tensor tgt_real = slice_batch(targets, 0, half);
  Tensor cond_gen = slice_batch(conditions, half, half);
  Tensor tgt_gen = slice_batch(generated_targets, half, half);
  out.permutation = derange_indices(static_cast<std::size_t>(half), rng);
  out.content_collision = collisions(cond_real, out.permutation);
  const auto gen_flags = collisions(cond_gen, out.permutation);
  for (std::size_t i = 0; i < gen_flags.size(); ++i)
    out.content_collision[i] = out.content_collision[i] || gen_flags[i];
  Tensor shuffled_real = permute_rows(cond_real, out.permutation);
  Tensor shuffled_gen = permute_rows(cond_gen, out.permutation);
  out[K::RealConditional] = {std::move(cond_real), tgt_real};
  out[K::GeneratedConditional] = {std::move(cond_gen), tgt_gen};
  out[K::RealAContrario] = {std::move(shuffled_real), std::move(tgt_real)};
  out[K::GeneratedAContrario] = {std::move(shuffled_gen), std::move(tgt_gen)};
  return out;
}

}  // namespace acgan
