#include "probekit/checkpoint.h"

#include "probekit/binary_io.h"
#include "probekit/error.h"

namespace probekit {
namespace {
constexpr std::string_view kMagic = "PKCKPT1\n";
}  // namespace


const Matrix& Checkpoint::Value(const std::string& name, size_t rows,
                                size_t cols) const {
  for (const Parameter& p : params) {
    if (p.name != name) continue;
    if (p.value.rows() != rows || p.value.cols() != cols) {
      throw ValidationError("checkpoint parameter " + name + " has shape " +
                            ShapeString(p.value) + ", expected (" +
                            std::to_string(rows) + "," + std::to_string(cols) +
                            ")");
    }
    return p.value;
  }
  throw ValidationError("checkpoint is missing parameter " + name);
}

void SaveCheckpoint(const std::string& path, const nlohmann::ordered_json& meta,
                    const std::vector<const Parameter*>& params) {
  nlohmann::ordered_json manifest;
  manifest["meta"] = meta;
  manifest["parameters"] = nlohmann::ordered_json::array();
  for (const Parameter* p : params) {
    manifest["parameters"].push_back(
        {{"name", p->name}, {"rows", p->value.rows()}, {"cols", p->value.cols()}});
  }
  const std::string text = manifest.dump();
  binio::Writer w;
  w.Bytes(kMagic);
  w.U64(text.size());
  w.Bytes(text);
  for (const Parameter* p : params) {
    for (double v : p->value.values()) w.F64(v);
  }
  binio::WriteFile(path, w.buffer());
}

Checkpoint LoadCheckpoint(const std::string& path) {
  const std::string bytes = binio::ReadFile(path);
  binio::Reader r(bytes);
  if (r.remaining() < kMagic.size() || r.Bytes(kMagic.size()) != kMagic) {
    throw ValidationError(path + ": not a probekit checkpoint (bad magic)");
  }
  const uint64_t len = r.U64();
  nlohmann::ordered_json manifest;
  try {
    manifest = nlohmann::ordered_json::parse(r.Bytes(len));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path + ": bad checkpoint manifest: " + e.what());
  }
  Checkpoint ck;
  ck.meta = manifest.value("meta", nlohmann::ordered_json::object());
  for (const auto& entry : manifest.at("parameters")) {
    Parameter p(entry.at("name").get<std::string>(),
                entry.at("rows").get<size_t>(), entry.at("cols").get<size_t>());
    for (double& v : p.value.values()) v = r.F64();
    ck.params.push_back(std::move(p));
  }
  if (r.remaining() != 0) {
    throw ValidationError(path + ": trailing bytes after parameter blocks");
  }
  return ck;
}

}  // namespace probekit
