#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "cyldet/tensor.hpp"

namespace cyldet {

// "CYLT": magic, u32 rank, rank x u64 shape, f32 data row-major, little-endian.
void write_tensor(const std::filesystem::path& path, const Tensor& t);
Tensor read_tensor(const std::filesystem::path& path);

// "CYLW": magic, u32 version, u32 tensor count, then per tensor
// u32 name length + UTF-8 name + an embedded CYLT payload.
void write_checkpoint(const std::filesystem::path& path,
                      const std::vector<std::pair<std::string, const Tensor*>>& tensors);
std::map<std::string, Tensor> read_checkpoint(const std::filesystem::path& path);

}  // namespace cyldet
