#include "vcd/descriptor_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <stdexcept>

namespace vcd {
namespace {

static_assert(std::numeric_limits<float>::is_iec559);

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

void put_f32(std::vector<std::uint8_t>& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) {
      throw std::runtime_error("descriptor file truncated at byte " + std::to_string(pos_));
    }
  }
  std::uint16_t u16() {
    need(2);
    const auto v = static_cast<std::uint16_t>(bytes_[pos_] | (bytes_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_descriptors(const DescriptorSet& set) {
  std::vector<std::uint8_t> out = {'V', 'C', 'D', '1'};
  put_u32(out, set.dimension);
  put_u32(out, static_cast<std::uint32_t>(set.records.size()));
  for (const auto& rec : set.records) {
    if (rec.vector.size() != set.dimension) {
      throw std::invalid_argument("descriptor for '" + rec.video_id + "' has dimension " +
                                  std::to_string(rec.vector.size()) + ", expected " +
                                  std::to_string(set.dimension));
    }
    if (rec.video_id.size() > 0xFFFF) throw std::invalid_argument("video id too long");
    put_u16(out, static_cast<std::uint16_t>(rec.video_id.size()));
    out.insert(out.end(), rec.video_id.begin(), rec.video_id.end());
    put_f32(out, rec.timestamp_s);
    for (const float v : rec.vector) put_f32(out, v);
  }
  return out;
}

DescriptorSet decode_descriptors(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  if (r.str(4) != "VCD1") throw std::runtime_error("bad descriptor magic");
  DescriptorSet set;
  set.dimension = r.u32();
  const std::uint32_t count = r.u32();
  set.records.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    FrameDescriptor rec;
    rec.video_id = r.str(r.u16());
    rec.timestamp_s = r.f32();
    rec.vector.resize(set.dimension);
    for (float& v : rec.vector) v = r.f32();
    set.records.push_back(std::move(rec));
  }
  if (!r.done()) throw std::runtime_error("trailing bytes after descriptor records");
  return set;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

void write_descriptors(const std::filesystem::path& path, const DescriptorSet& set) {
  write_file_bytes(path, encode_descriptors(set));
}

DescriptorSet read_descriptors(const std::filesystem::path& path) {
  return decode_descriptors(read_file_bytes(path));
}

}  // namespace vcd
