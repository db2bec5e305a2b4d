#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include "rismimo/autoencoder.hpp"

namespace rismimo {

class CheckpointError : public std::runtime_error {
 public:
  enum class Code { io, corrupted, version_mismatch, dimension_mismatch };

  CheckpointError(Code code, const std::string& what) : std::runtime_error(what), code_(code) {}
  [[nodiscard]] Code code() const noexcept { return code_; }

 private:
  Code code_;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary little-endian file: magic, version, dimensions, P, normalization
/// mode, then named float64 arrays, then an FNV-1a checksum of everything
/// before it.  A human-readable `<path>.manifest.txt` is written alongside.
void save_checkpoint(const AutoencoderModel& model, const std::filesystem::path& path);

/// Restores a model in inference mode.  When `expected` is given the stored
/// dimensions must match it exactly.
AutoencoderModel load_checkpoint(const std::filesystem::path& path,
                                 const std::optional<AeDims>& expected = std::nullopt);

std::filesystem::path manifest_path(const std::filesystem::path& checkpoint);

}  // namespace rismimo
