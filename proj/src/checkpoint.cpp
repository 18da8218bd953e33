#include "tpn2f/checkpoint.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "tpn2f/error.hpp"

namespace tpn2f {

namespace {

constexpr std::string_view kMagic = "TPN2FCKP";

template <typename T>
void put_le(std::string& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((value >> (8 * i)) & 0xff));
}

template <typename T>
T get_le(std::string_view bytes, std::size_t offset) {
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    value |= static_cast<T>(static_cast<unsigned char>(bytes[offset + i])) << (8 * i);
  }
  return value;
}

std::uint32_t crc_of(std::string_view bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed large buffers in pieces.
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    const std::size_t n = std::min<std::size_t>(bytes.size() - pos, 1u << 30);
    crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data() + pos), static_cast<uInt>(n));
    pos += n;
  }
  return static_cast<std::uint32_t>(crc);
}

CheckpointError corrupt(const std::string& what) {
  return CheckpointError(CheckpointError::Kind::Corrupt, "corrupt checkpoint: " + what);
}

}  // namespace

Checkpoint Checkpoint::capture(const Model& model) {
  Checkpoint ckpt;
  for (const auto& p : model.parameters()) ckpt.parameters.push_back({p.name, p.value.shape(), p.value.to_vector()});
  return ckpt;
}

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  nlohmann::json table = nlohmann::json::array();
  std::uint64_t offset = 0;
  auto entry = [&](const std::string& name, const Shape& shape, std::size_t count) {
    table.push_back({{"name", name}, {"shape", shape}, {"offset", offset}, {"count", count}});
    offset += count;
  };
  for (const auto& p : ckpt.parameters) entry(p.name, p.shape, p.data.size());

  nlohmann::json header{{"config", ckpt.config}, {"epoch", ckpt.epoch}, {"rng_state", ckpt.rng_state}};
  if (ckpt.optimizer) {
    const AdamState& a = *ckpt.optimizer;
    if (a.m.size() != a.v.size()) throw StateError("optimizer moment lists differ in length");
    for (std::size_t k = 0; k < a.m.size(); ++k) {
      entry("adam.m." + std::to_string(k), {a.m[k].size()}, a.m[k].size());
      entry("adam.v." + std::to_string(k), {a.v[k].size()}, a.v[k].size());
    }
    header["optimizer"] = {{"step_count", a.step_count}, {"beta1", a.beta1},         {"beta2", a.beta2},
                           {"epsilon", a.epsilon},       {"learning_rate", a.learning_rate},
                           {"grad_clip", a.grad_clip ? nlohmann::json(*a.grad_clip) : nlohmann::json(nullptr)},
                           {"slots", a.m.size()}};
  } else {
    header["optimizer"] = nullptr;
  }
  header["tensors"] = std::move(table);
  const std::string header_text = header.dump();

  std::string out;
  out.reserve(kMagic.size() + 16 + header_text.size() + 8 * offset + 4);
  out.append(kMagic);
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint64_t>(out, header_text.size());
  out.append(header_text);
  auto put_values = [&](const std::vector<double>& values) {
    for (double v : values) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  };
  for (const auto& p : ckpt.parameters) put_values(p.data);
  if (ckpt.optimizer) {
    for (std::size_t k = 0; k < ckpt.optimizer->m.size(); ++k) {
      put_values(ckpt.optimizer->m[k]);
      put_values(ckpt.optimizer->v[k]);
    }
  }
  put_le<std::uint32_t>(out, crc_of(out));
  return out;
}

Checkpoint deserialize_checkpoint(std::string_view bytes) {
  const std::size_t fixed = kMagic.size() + 4 + 8;
  if (bytes.size() < fixed + 4) throw corrupt("file is truncated");
  if (bytes.substr(0, kMagic.size()) != kMagic) throw corrupt("bad magic");
  const auto stored_crc = get_le<std::uint32_t>(bytes, bytes.size() - 4);
  if (stored_crc != crc_of(bytes.substr(0, bytes.size() - 4))) throw corrupt("checksum mismatch");
  const auto version = get_le<std::uint32_t>(bytes, kMagic.size());
  if (version != kCheckpointVersion) {
    throw CheckpointError(CheckpointError::Kind::Version,
                          "unsupported checkpoint version " + std::to_string(version) + " (this build reads " +
                              std::to_string(kCheckpointVersion) + ")");
  }
  const auto header_len = get_le<std::uint64_t>(bytes, kMagic.size() + 4);
  if (header_len > bytes.size() - fixed - 4) throw corrupt("header length past end of file");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(fixed, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw corrupt(std::string("header: ") + e.what());
  }
  const std::size_t payload = fixed + header_len;
  const std::size_t payload_count = (bytes.size() - 4 - payload) / 8;
  if ((bytes.size() - 4 - payload) % 8 != 0) throw corrupt("payload is not a whole number of f64 values");

  try {
    auto read_values = [&](const nlohmann::json& e) {
      const auto off = e.at("offset").get<std::uint64_t>();
      const auto count = e.at("count").get<std::uint64_t>();
      if (off + count > payload_count) throw corrupt("tensor '" + e.at("name").get<std::string>() + "' past payload");
      std::vector<double> values(count);
      for (std::size_t i = 0; i < count; ++i) {
        values[i] = std::bit_cast<double>(get_le<std::uint64_t>(bytes, payload + 8 * (off + i)));
      }
      return values;
    };

    Checkpoint ckpt;
    ckpt.config = header.at("config");
    ckpt.epoch = header.at("epoch").get<std::uint64_t>();
    ckpt.rng_state = header.at("rng_state").get<std::string>();
    const auto& tensors = header.at("tensors");
    std::size_t slots = 0;
    if (!header.at("optimizer").is_null()) slots = header["optimizer"].at("slots").get<std::size_t>();
    if (tensors.size() < 2 * slots) throw corrupt("tensor table shorter than optimizer slots");
    const std::size_t n_params = tensors.size() - 2 * slots;
    for (std::size_t i = 0; i < n_params; ++i) {
      const auto& e = tensors[i];
      StoredTensor t{e.at("name").get<std::string>(), e.at("shape").get<Shape>(), read_values(e)};
      if (shape_numel(t.shape) != t.data.size()) throw corrupt("shape/count mismatch for '" + t.name + "'");
      ckpt.parameters.push_back(std::move(t));
    }
    if (!header["optimizer"].is_null()) {
      const auto& o = header["optimizer"];
      AdamState a;
      a.step_count = o.at("step_count").get<std::uint64_t>();
      a.beta1 = o.at("beta1").get<double>();
      a.beta2 = o.at("beta2").get<double>();
      a.epsilon = o.at("epsilon").get<double>();
      a.learning_rate = o.at("learning_rate").get<double>();
      if (!o.at("grad_clip").is_null()) a.grad_clip = o["grad_clip"].get<double>();
      for (std::size_t k = 0; k < slots; ++k) {
        a.m.push_back(read_values(tensors[n_params + 2 * k]));
        a.v.push_back(read_values(tensors[n_params + 2 * k + 1]));
      }
      ckpt.optimizer = std::move(a);
    }
    return ckpt;
  } catch (const nlohmann::json::exception& e) {
    throw corrupt(std::string("header: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const std::string bytes = serialize_checkpoint(ckpt);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError(CheckpointError::Kind::Io, "cannot write '" + tmp.string() + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw CheckpointError(CheckpointError::Kind::Io, "failed writing '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw CheckpointError(CheckpointError::Kind::Io, "cannot move checkpoint into '" + path.string() + "'");
  }
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError(CheckpointError::Kind::Io, "cannot open checkpoint '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return deserialize_checkpoint(buffer.str());
}

void restore_parameters(Model& model, const Checkpoint& ckpt) {
  const auto params = model.parameters();
  if (params.size() != ckpt.parameters.size()) {
    throw CheckpointError(CheckpointError::Kind::Corrupt,
                          "checkpoint holds " + std::to_string(ckpt.parameters.size()) + " tensors, model has " +
                              std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& stored = ckpt.parameters[i];
    if (stored.name != params[i].name || stored.shape != params[i].value.shape()) {
      throw CheckpointError(CheckpointError::Kind::Corrupt, "checkpoint tensor '" + stored.name + "' " +
                                                                shape_str(stored.shape) + " does not match model tensor '" +
                                                                params[i].name + "'");
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor handle = params[i].value;
    std::copy(ckpt.parameters[i].data.begin(), ckpt.parameters[i].data.end(), handle.mutable_data().begin());
  }
}

}  // namespace tpn2f
