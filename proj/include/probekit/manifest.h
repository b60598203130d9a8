#ifndef PROBEKIT_MANIFEST_H_
#define PROBEKIT_MANIFEST_H_

// Run manifest attached to every command's output: command, flags, seeds,
// content digests of the inputs, toolkit version and wall time.

#include <chrono>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace probekit {

inline constexpr std::string_view kToolkitVersion = "0.3.0";

// Lowercase hex SHA-256.
std::string Sha256Hex(std::string_view bytes);
std::string Sha256File(const std::string& path);

class RunManifest {
 public:
  explicit RunManifest(std::string command);

  void SetFlag(const std::string& name, nlohmann::ordered_json value);
  void AddSeed(const std::string& name, uint64_t seed);
  // Records the SHA-256 of the file's current contents.
  void AddInput(const std::string& path);
  void AddOutput(const std::string& path);

  // Wall time is measured from construction to the call.
  nlohmann::ordered_json ToJson() const;

 private:
  std::string command_;
  nlohmann::ordered_json flags_ = nlohmann::ordered_json::object();
  nlohmann::ordered_json seeds_ = nlohmann::ordered_json::object();
  nlohmann::ordered_json inputs_ = nlohmann::ordered_json::array();
  std::vector<std::string> outputs_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace probekit

#endif  // PROBEKIT_MANIFEST_H_
