#pragma once
// Binary checkpoint container: a metadata string plus named f64 tensors.
// Round-trips bit-exactly; backbones and generators share the format.

#include <string>
#include <vector>

#include "tsbench/optim.hpp"
#include "tsbench/tensor.hpp"

namespace tsbench {

struct Checkpoint {
  std::string meta;  // free-form (JSON in practice)
  std::vector<std::pair<std::string, Tensor>> tensors;

  const Tensor* find(const std::string& name) const;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// Deep-copies parameter values into a checkpoint / back into live parameters.
// Restore matches by name and shape and fails loudly on any mismatch.
Checkpoint checkpoint_from_params(const ParamList& params, std::string meta);
void restore_params(ParamList& params, const Checkpoint& ckpt);

}  // namespace tsbench
