#include <cstring>
#include <fstream>

#include "windts/model.hpp"

namespace windts::model {

namespace {

constexpr char kMagic[8] = {'W', 'T', 'S', 'C', 'K', 'P', 'T', '1'};
constexpr std::uint32_t kVersion = 1;

std::uint64_t fnv1a(const char* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (std::size_t i = 0; i < n; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string kv_to_text(const std::map<std::string, std::string>& kv) {
  std::string text;
  for (const auto& [k, v] : kv) {
    text += k;
    text += '=';
    text += v;
    text += '\n';
  }
  return text;
}

std::map<std::string, std::string> text_to_kv(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::string line = text.substr(pos, nl - pos);
    pos = nl == std::string::npos ? text.size() : nl + 1;
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    WINDTS_REQUIRE(eq != std::string::npos, "checkpoint: malformed config line '{}'", line);
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

void append_block(std::string& buf, const std::string& block) {
  const std::uint64_t len = block.size();
  buf.append(reinterpret_cast<const char*>(&len), sizeof(len));
  buf.append(block);
}

}  // namespace

void save_checkpoint(const std::string& path, const Model& model,
                     const std::map<std::string, std::string>& metadata) {
  model.config.validate();
  std::string buf;
  buf.append(kMagic, 8);
  buf.append(reinterpret_cast<const char*>(&kVersion), sizeof(kVersion));
  append_block(buf, kv_to_text(model.config.to_kv()));
  append_block(buf, kv_to_text(metadata));

  const std::uint32_t count = static_cast<std::uint32_t>(model.params.size());
  buf.append(reinterpret_cast<const char*>(&count), sizeof(count));
  for (const auto& [name, t] : model.params) {
    append_block(buf, name);
    const std::uint32_t ndims = static_cast<std::uint32_t>(t.shape().size());
    buf.append(reinterpret_cast<const char*>(&ndims), sizeof(ndims));
    for (std::int64_t dim : t.shape()) {
      buf.append(reinterpret_cast<const char*>(&dim), sizeof(dim));
    }
    buf.append(reinterpret_cast<const char*>(t.data().data()), t.data().size() * sizeof(double));
  }
  const std::uint64_t checksum = fnv1a(buf.data(), buf.size());
  buf.append(reinterpret_cast<const char*>(&checksum), sizeof(checksum));

  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot open '{}' for writing", path);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  WINDTS_REQUIRE(out.good(), "short write to '{}'", path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open '{}' for reading", path);
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  WINDTS_REQUIRE(buf.size() > 8 + sizeof(kVersion) + sizeof(std::uint64_t),
                 "{}: too short to be a checkpoint", path);

  const std::uint64_t stored_checksum = [&] {
    std::uint64_t c = 0;
    std::memcpy(&c, buf.data() + buf.size() - sizeof(c), sizeof(c));
    return c;
  }();
  const std::uint64_t computed = fnv1a(buf.data(), buf.size() - sizeof(std::uint64_t));
  WINDTS_REQUIRE(stored_checksum == computed,
                 "{}: checksum failure (file truncated or corrupted)", path);

  std::size_t pos = 0;
  auto take = [&](void* dst, std::size_t n) {
    WINDTS_REQUIRE(pos + n + sizeof(std::uint64_t) <= buf.size(), "{}: truncated checkpoint",
                   path);
    std::memcpy(dst, buf.data() + pos, n);
    pos += n;
  };
  auto take_block = [&] {
    std::uint64_t len = 0;
    take(&len, sizeof(len));
    std::string block(len, '\0');
    take(block.data(), len);
    return block;
  };

  char magic[8];
  take(magic, 8);
  WINDTS_REQUIRE(std::memcmp(magic, kMagic, 8) == 0, "{}: not a checkpoint file", path);
  std::uint32_t version = 0;
  take(&version, sizeof(version));
  WINDTS_REQUIRE(version == kVersion, "{}: unsupported checkpoint version {}", path, version);

  Checkpoint ckpt;
  ckpt.model.config = ModelConfig::from_kv(text_to_kv(take_block()));
  ckpt.metadata = text_to_kv(take_block());

  std::uint32_t count = 0;
  take(&count, sizeof(count));
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = take_block();
    std::uint32_t ndims = 0;
    take(&ndims, sizeof(ndims));
    ad::Shape shape(ndims);
    for (std::uint32_t d = 0; d < ndims; ++d) take(&shape[d], sizeof(std::int64_t));
    std::vector<double> data(static_cast<std::size_t>(ad::shape_numel(shape)));
    take(data.data(), data.size() * sizeof(double));
    ckpt.model.params[name] = ad::Tensor::from_data(std::move(shape), std::move(data), true);
  }

  // Shapes must agree with the embedded config.
  for (const ParamSpec& spec : param_specs(ckpt.model.config)) {
    auto it = ckpt.model.params.find(spec.name);
    WINDTS_REQUIRE(it != ckpt.model.params.end(), "{}: parameter '{}' missing", path, spec.name);
    WINDTS_REQUIRE(it->second.shape() == spec.shape, "{}: parameter '{}' has shape {}, expected {}",
                   path, spec.name, ad::shape_str(it->second.shape()), ad::shape_str(spec.shape));
  }
  WINDTS_REQUIRE(ckpt.model.params.size() == param_specs(ckpt.model.config).size(),
                 "{}: checkpoint holds {} parameters, config expects {}", path,
                 ckpt.model.params.size(), param_specs(ckpt.model.config).size());
  return ckpt;
}

Checkpoint load_checkpoint(const std::string& path, const ModelConfig& expected) {
  Checkpoint ckpt = load_checkpoint(path);
  if (!(ckpt.model.config == expected)) {
    fail("{}: checkpoint config does not match the requested config\n  checkpoint: {}\n  requested:  {}",
         path, kv_to_text(ckpt.model.config.to_kv()), kv_to_text(expected.to_kv()));
  }
  return ckpt;
}

}  // namespace windts::model
