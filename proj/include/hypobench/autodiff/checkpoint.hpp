#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "hypobench/autodiff/tensor.hpp"

namespace hypobench::ad {

/// Binary container of named, shaped double arrays. All integers and
/// doubles are little-endian; doubles are raw IEEE-754 bits, so a
/// save/load round trip is bit-exact.
///
///   bytes 0..7   magic "HBCKPT\0\0"
///   u32          format version (1)
///   u32          tensor count
///   per tensor:  u32 name length, name bytes (UTF-8),
///                u32 rank, u64 dims[rank], f64 values[product(dims)]
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors);

std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& path);

/// Copies checkpoint values into `params` by name. Throws ContractError on a
/// missing name or a shape mismatch.
void restore_parameters(const std::vector<NamedTensor>& saved, std::vector<NamedTensor>& params);

std::string encode_checkpoint(const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> decode_checkpoint(const std::string& bytes);

}  // namespace hypobench::ad
