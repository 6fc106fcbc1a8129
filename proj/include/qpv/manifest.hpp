#pragma once

#include <map>
#include <string>
#include <string_view>

#include <json.hpp>

namespace qpv {

// SHA-1, plus the git blob convention sha1("blob <size>\0" + content) used to
// fingerprint emitted files in run manifests.
std::string sha1_hex(std::string_view bytes);
std::string git_blob_hash(std::string_view content);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

// Run manifest: full config echo, master seed, and content hashes of every
// emitted file. Deterministic (no timestamps) so replays can compare bytes.
struct Manifest {
  nlohmann::json config;
  std::string mode;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> outputs;  // filename -> git blob hash

  nlohmann::json to_json() const;
  static Manifest from_json(const nlohmann::json& j);

  void record_output(const std::string& filename, std::string_view content);
};

}  // namespace qpv
