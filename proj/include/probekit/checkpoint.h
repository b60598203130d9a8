#ifndef PROBEKIT_CHECKPOINT_H_
#define PROBEKIT_CHECKPOINT_H_

// Parameter checkpoints: an 8-byte magic "PKCKPT1\n", a u64 length, a JSON
// manifest {"meta": ..., "parameters": [{"name","rows","cols"}]}, then one raw
// little-endian float64 block per parameter in manifest order.

#include <string>
#include <vector>

#include "json.hpp"
#include "probekit/matrix.h"

namespace probekit {

struct Checkpoint {
  nlohmann::ordered_json meta;
  std::vector<Parameter> params;

  // Throws ValidationError if `name` is absent or the shape differs.
  const Matrix& Value(const std::string& name, size_t rows, size_t cols) const;
};

void SaveCheckpoint(const std::string& path, const nlohmann::ordered_json& meta,
                    const std::vector<const Parameter*>& params);
Checkpoint LoadCheckpoint(const std::string& path);

}  // namespace probekit

#endif  // PROBEKIT_CHECKPOINT_H_
