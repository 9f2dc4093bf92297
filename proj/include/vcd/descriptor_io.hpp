#pragma once

// Binary descriptor files, little-endian:
//   "VCD1" | u32 dimension | u32 count | count x (u16 id_len, id bytes, f32 t, D x f32)

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "vcd/descriptor.hpp"

namespace vcd {

struct DescriptorSet {
  std::uint32_t dimension = 0;
  std::vector<FrameDescriptor> records;

  bool operator==(const DescriptorSet&) const = default;
};

std::vector<std::uint8_t> encode_descriptors(const DescriptorSet& set);
DescriptorSet decode_descriptors(const std::vector<std::uint8_t>& bytes);

void write_descriptors(const std::filesystem::path& path, const DescriptorSet& set);
DescriptorSet read_descriptors(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);

}  // namespace vcd
