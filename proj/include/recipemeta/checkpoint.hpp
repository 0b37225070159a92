#pragma once

#include "recipemeta/tensor.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace recipemeta {

struct NamedTensor {
    std::string name;
    ad::Tensor tensor;
};

// Layout: 8-byte magic "RMTENSOR", u64 little-endian index length, JSON index
// {"tensors":[{"name","shape":[rows,cols],"offset"}]}, then the float64
// little-endian payloads back to back (offset counts bytes into the payload).
void write_tensors(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> read_tensors(const std::filesystem::path& path);

/// Copies values from `saved` into `params` by name; shapes and names must match exactly.
void restore_tensors(std::vector<NamedTensor>& params, const std::vector<NamedTensor>& saved);

}  // namespace recipemeta
