// SPDX-License-Identifier: Apache-2.0
#include "shapefat/autodiff/checkpoint.hpp"

#include <fstream>
#include <limits>

#include "shapefat/binary_io.hpp"
#include "shapefat/error.hpp"

namespace shapefat::ad {

namespace {
constexpr std::string_view kMagic = "SFP1";
}

void write_checkpoint(std::ostream& out, const std::vector<NamedTensor>& tensors) {
  io::write_magic(out, kMagic);
  io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    if (name.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw FormatError("checkpoint: parameter name too long: " + name.substr(0, 32) + "...");
    }
    io::write_le<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    io::write_le<std::uint8_t>(out, static_cast<std::uint8_t>(t.rank()));
    for (std::size_t d : t.shape()) io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    for (double v : t.values()) io::write_f32(out, static_cast<float>(v));
  }
  if (!out) throw FormatError("checkpoint: write failed");
}

std::vector<NamedTensor> read_checkpoint(std::istream& in) {
  io::expect_magic(in, kMagic);
  const auto count = io::read_le<std::uint32_t>(in, "tensor count");
  std::vector<NamedTensor> tensors;
  tensors.reserve(count);
  for (std::uint32_t k = 0; k < count; ++k) {
    const auto len = io::read_le<std::uint16_t>(in, "name length");
    std::string name(len, '\0');
    in.read(name.data(), len);
    if (in.gcount() != len) throw FormatError("truncated file while reading parameter name");
    const auto rank = io::read_le<std::uint8_t>(in, "rank");
    if (rank == 0) throw FormatError("checkpoint: parameter '" + name + "' has rank 0");
    Shape shape(rank);
    for (auto& d : shape) {
      d = io::read_le<std::uint32_t>(in, "dimension");
      if (d == 0) throw FormatError("checkpoint: parameter '" + name + "' has a zero dimension");
    }
    std::vector<double> values(numel(shape));
    const std::string what = "values of parameter '" + name + "'";
    for (double& v : values) v = io::read_f32(in, what);
    tensors.push_back({std::move(name), Tensor(std::move(shape), std::move(values))});
  }
  return tensors;
}

void save_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  write_checkpoint(out, tensors);
}

std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint '" + path.string() + "'");
  return read_checkpoint(in);
}

}  // namespace shapefat::ad
