#include "qpv/manifest.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace qpv {

namespace {

class Sha1 {
 public:
  void update(const unsigned char* data, std::size_t len) {
    total_ += len;
    while (len > 0) {
      const std::size_t take = std::min(len, std::size_t{64} - fill_);
      std::copy(data, data + take, block_.begin() + fill_);
      fill_ += take;
      data += take;
      len -= take;
      if (fill_ == 64) {
        process();
        fill_ = 0;
      }
    }
  }

  std::array<std::uint8_t, 20> finish() {
    const std::uint64_t bits = total_ * 8;
    const unsigned char pad = 0x80;
    update(&pad, 1);
    const unsigned char zero = 0x00;
    while (fill_ != 56) update(&zero, 1);
    unsigned char len_be[8];
    for (int i = 0; i < 8; ++i) len_be[i] = static_cast<unsigned char>(bits >> (56 - 8 * i));
    update(len_be, 8);
    std::array<std::uint8_t, 20> digest;
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 4; ++j)
        digest[4 * i + j] = static_cast<std::uint8_t>(h_[i] >> (24 - 8 * j));
    return digest;
  }

 private:
  void process() {
    std::uint32_t w[80];
    for (int i = 0; i < 16; ++i)
      w[i] = (std::uint32_t(block_[4 * i]) << 24) | (std::uint32_t(block_[4 * i + 1]) << 16) |
             (std::uint32_t(block_[4 * i + 2]) << 8) | std::uint32_t(block_[4 * i + 3]);
    for (int i = 16; i < 80; ++i)
      w[i] = std::rotl(w[i - 3] ^ w[i - 8] ^ w[i - 14] ^ w[i - 16], 1);
    std::uint32_t a = h_[0], b = h_[1], c = h_[2], d = h_[3], e = h_[4];
    for (int i = 0; i < 80; ++i) {
      std::uint32_t f, k;
      if (i < 20) { f = (b & c) | (~b & d); k = 0x5A827999; }
      else if (i < 40) { f = b ^ c ^ d; k = 0x6ED9EBA1; }
      else if (i < 60) { f = (b & c) | (b & d) | (c & d); k = 0x8F1BBCDC; }
      else { f = b ^ c ^ d; k = 0xCA62C1D6; }
      const std::uint32_t temp = std::rotl(a, 5) + f + e + k + w[i];
      e = d; d = c; c = std::rotl(b, 30); b = a; a = temp;
    }
    h_[0] += a; h_[1] += b; h_[2] += c; h_[3] += d; h_[4] += e;
  }

  std::array<unsigned char, 64> block_{};
  std::size_t fill_ = 0;
  std::uint64_t total_ = 0;
  std::array<std::uint32_t, 5> h_ = {0x67452301u, 0xEFCDAB89u, 0x98BADCFEu, 0x10325476u,
                                     0xC3D2E1F0u};
};

}  // namespace

std::string sha1_hex(std::string_view bytes) {
  Sha1 sha;
  sha.update(reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size());
  const auto digest = sha.finish();
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(40);
  for (std::uint8_t byte : digest) {
    out.push_back(hex[byte >> 4]);
    out.push_back(hex[byte & 0xF]);
  }
  return out;
}

std::string git_blob_hash(std::string_view content) {
  std::string prefixed = "blob " + std::to_string(content.size());
  prefixed.push_back('\0');
  prefixed.append(content);
  return sha1_hex(prefixed);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw std::runtime_error("write failed: " + path);
}

nlohmann::json Manifest::to_json() const {
  nlohmann::json j;
  j["config"] = config;
  j["mode"] = mode;
  j["seed"] = seed;
  j["config_hash"] = git_blob_hash(config.dump(2));
  nlohmann::json outs = nlohmann::json::object();
  for (const auto& [name, hash] : outputs) outs[name] = hash;
  j["outputs"] = outs;
  return j;
}

Manifest Manifest::from_json(const nlohmann::json& j) {
  Manifest m;
  m.config = j.at("config");
  m.mode = j.at("mode").get<std::string>();
  m.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& [name, hash] : j.at("outputs").items())
    m.outputs[name] = hash.get<std::string>();
  return m;
}

void Manifest::record_output(const std::string& filename, std::string_view content) {
  outputs[filename] = git_blob_hash(content);
}

}  // namespace qpv
