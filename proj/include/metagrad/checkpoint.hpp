#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "metagrad/model.hpp"

namespace metagrad {

// Versioned parameter container: a short text header (one field per line)
// followed by the flat parameter payload as little-endian 64-bit floats.
// Round-trips are bit-exact; val_metric is kept in the header at 17
// significant digits, which reproduces the double exactly.

inline constexpr int kCheckpointVersion = 1;
inline constexpr const char* kCheckpointMagic = "metagrad checkpoint v";

struct Checkpoint {
  int version = kCheckpointVersion;
  ModelConfig config;
  LayeredParams params;
  std::size_t iteration = 0;
  double val_metric = 0.0;
};

namespace detail {

inline void append_le64(std::string& out, std::uint64_t bits) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

inline std::uint64_t read_le64(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return bits;
}

inline std::string format_exact(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

inline std::string serialize_checkpoint(const Checkpoint& cp) {
  std::ostringstream head;
  head << kCheckpointMagic << cp.version << "\n";
  head << "input_dim " << cp.config.input_dim << "\n";
  head << "hidden";
  for (std::size_t h : cp.config.hidden) head << " " << h;
  head << "\n";
  head << "output_dim " << cp.config.output_dim << "\n";
  head << "activation " << activation_name(cp.config.hidden_activation) << "\n";
  head << "seed " << cp.config.seed << "\n";
  head << "iteration " << cp.iteration << "\n";
  head << "val_metric " << detail::format_exact(cp.val_metric) << "\n";
  head << "layers " << cp.params.layer_count() << "\n";
  std::size_t doubles = 0;
  for (const Layer& l : cp.params.layers) {
    head << "layer " << l.in << " " << l.out << "\n";
    doubles += l.weights.size() + l.bias.size();
  }
  head << "payload " << doubles << "\n";

  std::string out = head.str();
  out.reserve(out.size() + doubles * 8);
  for (const Layer& l : cp.params.layers) {
    for (double v : l.weights) {
      std::uint64_t bits;
      std::memcpy(&bits, &v, 8);
      detail::append_le64(out, bits);
    }
    for (double v : l.bias) {
      std::uint64_t bits;
      std::memcpy(&bits, &v, 8);
      detail::append_le64(out, bits);
    }
  }
  return out;
}

inline Checkpoint deserialize_checkpoint(const std::string& bytes, const std::string& origin) {
  const auto fail = [&](const std::string& why) -> IoError {
    return IoError("checkpoint " + origin + ": " + why);
  };
  std::size_t pos = 0;
  const auto next_line = [&]() -> std::string {
    const std::size_t nl = bytes.find('\n', pos);
    if (nl == std::string::npos) throw fail("truncated header");
    std::string line = bytes.substr(pos, nl - pos);
    pos = nl + 1;
    return line;
  };

  const std::string magic_line = next_line();
  if (magic_line.rfind(kCheckpointMagic, 0) != 0) throw fail("not a checkpoint file");
  Checkpoint cp;
  try {
    cp.version = std::stoi(magic_line.substr(std::strlen(kCheckpointMagic)));
  } catch (const std::exception&) {
    throw fail("unreadable version field");
  }
  if (cp.version != kCheckpointVersion)
    throw CheckpointVersionError("checkpoint " + origin + ": format version " +
                                 std::to_string(cp.version) + " (this build reads version " +
                                 std::to_string(kCheckpointVersion) + ")");

  std::vector<std::pair<std::size_t, std::size_t>> layer_dims;
  std::size_t payload_doubles = 0;
  bool saw_payload = false;
  while (!saw_payload) {
    std::istringstream ls(next_line());
    std::string key;
    ls >> key;
    if (key == "input_dim") ls >> cp.config.input_dim;
    else if (key == "hidden") {
      cp.config.hidden.clear();
      std::size_t h;
      while (ls >> h) cp.config.hidden.push_back(h);
      continue;  // the stream is exhausted; skip the trailing check below
    } else if (key == "output_dim") ls >> cp.config.output_dim;
    else if (key == "activation") {
      std::string name;
      ls >> name;
      cp.config.hidden_activation = activation_from_string(name);
    } else if (key == "seed") ls >> cp.config.seed;
    else if (key == "iteration") ls >> cp.iteration;
    else if (key == "val_metric") ls >> cp.val_metric;
    else if (key == "layers") {
      std::size_t n;
      ls >> n;
      layer_dims.reserve(n);
    } else if (key == "layer") {
      std::size_t in = 0, out = 0;
      ls >> in >> out;
      layer_dims.emplace_back(in, out);
    } else if (key == "payload") {
      ls >> payload_doubles;
      saw_payload = true;
    } else {
      throw fail("unknown header field '" + key + "'");
    }
    if (ls.fail()) throw fail("unreadable value for header field '" + key + "'");
  }

  std::size_t expect = 0;
  for (const auto& [in, out] : layer_dims) expect += in * out + out;
  if (expect != payload_doubles) throw fail("payload size disagrees with layer shapes");
  if (bytes.size() - pos != payload_doubles * 8)
    throw fail("truncated payload: expected " + std::to_string(payload_doubles * 8) +
               " bytes, found " + std::to_string(bytes.size() - pos));

  const auto* raw = reinterpret_cast<const unsigned char*>(bytes.data()) + pos;
  cp.params.layers.clear();
  std::vector<Activation> acts;
  for (std::size_t i = 0; i < layer_dims.size(); ++i)
    acts.push_back(i + 1 < layer_dims.size() ? cp.config.hidden_activation
                                             : Activation::kIdentity);
  for (std::size_t i = 0; i < layer_dims.size(); ++i) {
    Layer l;
    l.in = layer_dims[i].first;
    l.out = layer_dims[i].second;
    l.act = acts[i];
    l.weights.resize(l.in * l.out);
    l.bias.resize(l.out);
    for (double& v : l.weights) {
      const std::uint64_t bits = detail::read_le64(raw);
      raw += 8;
      std::memcpy(&v, &bits, 8);
    }
    for (double& v : l.bias) {
      const std::uint64_t bits = detail::read_le64(raw);
      raw += 8;
      std::memcpy(&v, &bits, 8);
    }
    cp.params.layers.push_back(std::move(l));
  }
  return cp;
}

inline void save_checkpoint(const std::string& path, const Checkpoint& cp) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  const std::string bytes = serialize_checkpoint(cp);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("write failed for '" + path + "'");
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << f.rdbuf();
  return deserialize_checkpoint(ss.str(), "'" + path + "'");
}

}  // namespace metagrad
