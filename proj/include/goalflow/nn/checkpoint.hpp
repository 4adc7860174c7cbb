#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "goalflow/nn/tensor.hpp"

namespace goalflow::nn {

inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Metadata plus named arrays; see docs/checkpoint_format.md for the layout.
struct Checkpoint {
  nlohmann::json metadata = nlohmann::json::object();
  std::map<std::string, Tensor> tensors;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
/// Throws CheckpointError on bad magic, unknown version, precision mismatch or truncation.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace goalflow::nn
