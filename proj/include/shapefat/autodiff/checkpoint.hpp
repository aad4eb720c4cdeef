// SPDX-License-Identifier: Apache-2.0
#pragma once

// Parameter checkpoint format ("SFP1"), all integers little-endian:
//
//   char[4]  magic "SFP1"
//   u32      tensor count
//   per tensor:
//     u16    name length, then the UTF-8 name bytes
//     u8     rank, then rank x u32 dims
//     f32    values, row-major
//
// Values are narrowed to 32-bit on write.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "shapefat/autodiff/tensor.hpp"

namespace shapefat::ad {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

void write_checkpoint(std::ostream& out, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& path);

}  // namespace shapefat::ad
