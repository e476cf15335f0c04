#include "regretforge/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "regretforge/errors.hpp"

namespace regretforge {

namespace {

constexpr char kMagic[8] = {'R', 'G', 'F', 'C', 'K', 'P', 'T', '\0'};

uint64_t fnv1a_bytes(const std::string& buf) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : buf) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void append_u32(std::string& buf, uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void append_u64(std::string& buf, uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

uint32_t read_u32(const std::string& buf, size_t off) {
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<unsigned char>(buf[off + i]))
                                   << (8 * i);
  return v;
}

uint64_t read_u64(const std::string& buf, size_t off) {
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(static_cast<unsigned char>(buf[off + i]))
                                   << (8 * i);
  return v;
}

nlohmann::json build_header(PredictorParams& params, const nlohmann::json& training_echo) {
  nlohmann::json header;
  header["format_version"] = kCheckpointVersion;
  header["architecture"] = {
      {"hidden", params.hidden},
      {"layers", 2},
      {"embed_dim", params.embed_dim},
      {"num_embeddings", params.num_embeddings},
      {"max_actions", params.max_actions},
      {"head", head_name(params.head)},
      {"form", form_name(params.form)},
      {"alpha", params.alpha},
  };
  nlohmann::json manifest = nlohmann::json::array();
  int64_t offset = 0;
  for (auto& a : params.arrays()) {
    manifest.push_back({{"name", a.name}, {"rows", a.rows}, {"cols", a.cols}, {"offset", offset}});
    offset += static_cast<int64_t>(a.rows) * a.cols;
  }
  header["arrays"] = std::move(manifest);
  header["training"] = training_echo;
  return header;
}

}  // namespace

void save_checkpoint(const std::string& path, PredictorParams& params,
                     const nlohmann::json& training_echo) {
  const std::string header = build_header(params, training_echo).dump();

  std::string buf;
  buf.append(kMagic, sizeof(kMagic));
  append_u32(buf, kCheckpointVersion);
  append_u32(buf, static_cast<uint32_t>(header.size()));
  buf += header;
  for (auto& a : params.arrays()) {
    const size_t bytes = a.data->size() * sizeof(double);
    const size_t at = buf.size();
    buf.resize(at + bytes);
    std::memcpy(buf.data() + at, a.data->data(), bytes);
  }
  const uint64_t checksum = fnv1a_bytes(buf);
  append_u64(buf, checksum);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot open '" + path + "' for writing");
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw CheckpointError("short write to '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open '" + path + "'");
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (buf.size() < sizeof(kMagic) + 8) throw CheckpointError("truncated checkpoint");
  if (std::memcmp(buf.data(), kMagic, sizeof(kMagic)) != 0)
    throw CheckpointError("not a predictor checkpoint (bad magic)");
  const uint32_t version = read_u32(buf, 8);
  if (version != kCheckpointVersion)
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  const uint32_t header_len = read_u32(buf, 12);
  if (buf.size() < 16 + static_cast<size_t>(header_len) + 8)
    throw CheckpointError("truncated checkpoint header");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(buf.substr(16, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("corrupt checkpoint header: ") + e.what());
  }

  Checkpoint ck;
  try {
    if (header.at("format_version").get<uint32_t>() != version)
      throw CheckpointError("checkpoint header disagrees with the container version");
    const auto& arch = header.at("architecture");
    if (arch.at("layers").get<int>() != 2)
      throw CheckpointError("unsupported layer count in checkpoint");
    ck.params = make_predictor(arch.at("max_actions").get<int>(), arch.at("embed_dim").get<int>(),
                               arch.at("hidden").get<int>(), arch.at("num_embeddings").get<int>(),
                               parse_head(arch.at("head").get<std::string>()),
                               arch.at("alpha").get<double>());
    ck.params.form = parse_form(arch.at("form").get<std::string>());
    ck.training = header.value("training", nlohmann::json::object());

    const auto& manifest = header.at("arrays");
    auto arrays = ck.params.arrays();
    if (manifest.size() != arrays.size())
      throw CheckpointError("checkpoint manifest has the wrong array count");
    int64_t offset = 0;
    for (size_t i = 0; i < arrays.size(); ++i) {
      const auto& entry = manifest.at(i);
      if (entry.at("name").get<std::string>() != arrays[i].name ||
          entry.at("rows").get<int>() != arrays[i].rows ||
          entry.at("cols").get<int>() != arrays[i].cols ||
          entry.at("offset").get<int64_t>() != offset)
        throw CheckpointError("checkpoint manifest disagrees with the declared architecture");
      offset += static_cast<int64_t>(arrays[i].rows) * arrays[i].cols;
    }

    const size_t payload_bytes = static_cast<size_t>(offset) * sizeof(double);
    if (buf.size() != 16 + header_len + payload_bytes + 8)
      throw CheckpointError("corrupt checkpoint payload (truncated or oversized)");
    const uint64_t stored = read_u64(buf, buf.size() - 8);
    if (stored != fnv1a_bytes(buf.substr(0, buf.size() - 8)))
      throw CheckpointError("checkpoint checksum mismatch (corrupt payload)");

    size_t at = 16 + header_len;
    for (auto& a : arrays) {
      std::memcpy(a.data->data(), buf.data() + at, a.data->size() * sizeof(double));
      at += a.data->size() * sizeof(double);
    }
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("corrupt checkpoint header: ") + e.what());
  }
  return ck;
}

}  // namespace regretforge
