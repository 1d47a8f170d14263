#include "acgan/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace acgan {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'A', 'C', 'G', 'A', 'N', 'C', 'K', 'P'};

template <class T>
void put_le(Bytes& out, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big)
    std::reverse(buf, buf + sizeof(T));
  out.insert(out.end(), buf, buf + sizeof(T));
}

template <class T>
T get_le(std::span<const std::uint8_t> in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw std::runtime_error("checkpoint truncated");
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, in.data() + pos, sizeof(T));
  if constexpr (std::endian::native == std::endian::big)
    std::reverse(buf, buf + sizeof(T));
  pos += sizeof(T);
  T v;
  std::memcpy(&v, buf, sizeof(T));
  return v;
}

Bytes pack(const std::string& kind, const json& config,
           const std::vector<NamedParam>& params) {
  json manifest;
  manifest["kind"] = kind;
  manifest["config"] = config;
  manifest["tensors"] = json::array();
  for (const auto& np : params) {
    const Shape& s = np.param->value.shape();
    manifest["tensors"].push_back({{"name", np.name}, {"shape", {s.n, s.c, s.h, s.w}}});
  }
  const std::string text = manifest.dump();
  Bytes out(kMagic, kMagic + 8);
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint64_t>(out, text.size());
  out.insert(out.end(), text.begin(), text.end());
  for (const auto& np : params)
    for (float v : np.param->value.values()) put_le<float>(out, v);
  return out;
}

struct Unpacked {
  json manifest;
  std::size_t data_offset;
};

Unpacked unpack_header(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 20 || std::memcmp(bytes.data(), kMagic, 8) != 0)
    throw std::runtime_error("not an acgan checkpoint");
  std::size_t pos = 8;
  const auto version = get_le<std::uint32_t>(bytes, pos);
  if (version != kCheckpointVersion)
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  const auto len = get_le<std::uint64_t>(bytes, pos);
  if (pos + len > bytes.size()) throw std::runtime_error("checkpoint truncated");
  Unpacked u;
  u.manifest = json::parse(bytes.begin() + pos, bytes.begin() + pos + len);
  u.data_offset = pos + len;
  return u;
}

void restore(const Unpacked& u, std::span<const std::uint8_t> bytes,
             const std::vector<NamedParam>& params) {
  const auto& tensors = u.manifest.at("tensors");
  if (tensors.size() != params.size())
    throw std::runtime_error("checkpoint tensor count does not match network");
  std::size_t pos = u.data_offset;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& t = tensors[i];
    auto& value = params[i].param->value;
    const Shape& s = value.shape();
    const std::vector<int> shape = t.at("shape").get<std::vector<int>>();
    if (t.at("name").get<std::string>() != params[i].name ||
        shape != std::vector<int>{s.n, s.c, s.h, s.w})
      throw std::runtime_error("checkpoint tensor '" + t.at("name").get<std::string>() +
                               "' does not match network layout");
    for (auto& v : value.values()) v = get_le<float>(bytes, pos);
  }
  if (pos != bytes.size()) throw std::runtime_error("checkpoint has trailing bytes");
}

}  // namespace

json to_json(const ConvLayerSpec& l) {
  return {{"kernel", l.kernel},
          {"stride", l.stride},
          {"channels_out", l.channels_out},
          {"normalization", to_string(l.normalization)},
          {"activation", to_string(l.activation)},
          {"padding", l.padding}};
}

ConvLayerSpec conv_layer_from_json(const json& j) {
  ConvLayerSpec l;
  l.kernel = j.at("kernel");
  l.stride = j.at("stride");
  l.channels_out = j.at("channels_out");
  l.normalization = parse_normalization(j.at("normalization").get<std::string>());
  l.activation = parse_activation(j.at("activation").get<std::string>());
  l.padding = j.value("padding", -1);
  return l;
}

json to_json(const DiscriminatorConfig& c) {
  json layers = json::array();
  for (const auto& l : c.layers) layers.push_back(to_json(l));
  return {{"layers", layers},
          {"fusion", "early_concat"},
          {"condition_channels", c.condition_channels},
          {"target_channels", c.target_channels},
          {"class_embedding", c.class_embedding},
          {"init_std", c.init_std}};
}

DiscriminatorConfig discriminator_config_from_json(const json& j) {
  DiscriminatorConfig c;
  c.layers.clear();
  for (const auto& l : j.at("layers")) c.layers.push_back(conv_layer_from_json(l));
  if (j.value("fusion", std::string("early_concat")) != "early_concat")
    throw std::runtime_error("unsupported fusion");
  c.condition_channels = j.at("condition_channels");
  c.target_channels = j.at("target_channels");
  c.class_embedding = j.value("class_embedding", 0);
  c.init_std = j.value("init_std", 0.02);
  return c;
}

json to_json(const GeneratorConfig& c) {
  return {{"task", to_string(c.task)},
          {"size", c.size},
          {"n_classes", c.n_classes},
          {"base_channels", c.base_channels},
          {"levels", c.levels},
          {"dropout", c.dropout},
          {"dropout_stages", c.dropout_stages},
          {"class_embedding", c.class_embedding},
          {"init_std", c.init_std},
          {"normalization", to_string(c.normalization)}};
}

GeneratorConfig generator_config_from_json(const json& j) {
  GeneratorConfig c;
  c.task = parse_task(j.at("task").get<std::string>());
  c.size = j.at("size");
  c.n_classes = j.at("n_classes");
  c.base_channels = j.at("base_channels");
  c.levels = j.value("levels", 0);
  c.dropout = j.value("dropout", 0.5f);
  c.dropout_stages = j.value("dropout_stages", 2);
  c.class_embedding = j.value("class_embedding", 8);
  c.init_std = j.value("init_std", 0.02);
  c.normalization = parse_normalization(j.value("normalization", std::string("instance")));
  return c;
}

Bytes save_checkpoint(PatchDiscriminator& d) {
  return pack("discriminator", to_json(d.config()), d.params());
}

Bytes save_checkpoint(UNetGenerator& g) {
  return pack("generator", to_json(g.config()), g.params());
}

json read_manifest(std::span<const std::uint8_t> bytes) {
  return unpack_header(bytes).manifest;
}

PatchDiscriminator load_discriminator(std::span<const std::uint8_t> bytes) {
  Unpacked u = unpack_header(bytes);
  if (u.manifest.at("kind") != "discriminator")
    throw std::runtime_error("checkpoint does not hold a discriminator");
  Rng scratch(0);
  PatchDiscriminator d(discriminator_config_from_json(u.manifest.at("config")), scratch);
  restore(u, bytes, d.params());
  return d;
}

UNetGenerator load_generator(std::span<const std::uint8_t> bytes) {
  Unpacked u = unpack_header(bytes);
  if (u.manifest.at("kind") != "generator")
    throw std::runtime_error("checkpoint does not hold a generator");
  Rng scratch(0);
  UNetGenerator g(generator_config_from_json(u.manifest.at("config")), scratch);
  restore(u, bytes, g.params());
  return g;
}

void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f.write(reinterpret_cast<const char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("short write to " + path.string());
}

Bytes read_bytes(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path.string());
  return Bytes(std::istreambuf_iterator<char>(f), {});
}

}  // namespace acgan
