#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "json.hpp"

#include "acgan/nets.hpp"

namespace acgan {

/**
 * Checkpoint container, version 1. All integers and floats little-endian.
 *
 *   offset 0   8 bytes   magic "ACGANCKP"
 *   offset 8   u32       format version (1)
 *   offset 12  u64       manifest length L in bytes
 *   offset 20  L bytes   manifest, UTF-8 JSON:
 *                          { "kind": "discriminator" | "generator",
 *                            "config": { ... network config ... },
 *                            "tensors": [ { "name": str, "shape": [n,c,h,w] } ] }
 *   then       f32[]     tensor values, concatenated in manifest order
 *
 * Buffers (batch-norm running statistics) are stored like parameters.
 */
inline constexpr std::uint32_t kCheckpointVersion = 1;

using Bytes = std::vector<std::uint8_t>;

nlohmann::json to_json(const DiscriminatorConfig& c);
DiscriminatorConfig discriminator_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const GeneratorConfig& c);
GeneratorConfig generator_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ConvLayerSpec& l);
ConvLayerSpec conv_layer_from_json(const nlohmann::json& j);

Bytes save_checkpoint(PatchDiscriminator& d);
Bytes save_checkpoint(UNetGenerator& g);
PatchDiscriminator load_discriminator(std::span<const std::uint8_t> bytes);
UNetGenerator load_generator(std::span<const std::uint8_t> bytes);
/// Manifest of a checkpoint without materializing the network.
nlohmann::json read_manifest(std::span<const std::uint8_t> bytes);

void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
Bytes read_bytes(const std::filesystem::path& path);

}  // namespace acgan
