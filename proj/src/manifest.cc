#include "probekit/manifest.h"

#include <openssl/evp.h>

#include <cstdio>
#include <memory>

#include "probekit/binary_io.h"
#include "probekit/error.h"

namespace probekit {

using Json = nlohmann::ordered_json;

std::string Sha256Hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 failed");
  }
  std::string hex;
  hex.reserve(2 * len);
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof(buf), "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

std::string Sha256File(const std::string& path) {
  return Sha256Hex(binio::ReadFile(path));
}

RunManifest::RunManifest(std::string command)
    : command_(std::move(command)), start_(std::chrono::steady_clock::now()) {}

void RunManifest::SetFlag(const std::string& name, Json value) {
  flags_[name] = std::move(value);
}

void RunManifest::AddSeed(const std::string& name, uint64_t seed) {
  seeds_[name] = seed;
}

void RunManifest::AddInput(const std::string& path) {
  inputs_.push_back({{"path", path}, {"sha256", Sha256File(path)}});
}

void RunManifest::AddOutput(const std::string& path) { outputs_.push_back(path); }

Json RunManifest::ToJson() const {
  const std::chrono::duration<double> elapsed =
      std::chrono::steady_clock::now() - start_;
  Json j;
  j["command"] = command_;
  j["flags"] = flags_;
  j["seeds"] = seeds_;
  j["inputs"] = inputs_;
  j["outputs"] = outputs_;
  j["version"] = std::string(kToolkitVersion);
  j["wall_time_s"] = elapsed.count();
  return j;
}

}  // namespace probekit
