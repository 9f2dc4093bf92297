#include "vcd/video_io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "vcd/descriptor_io.hpp"

namespace vcd {
namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(const std::vector<std::uint8_t>& b, std::size_t& pos) {
  if (pos + 4 > b.size()) throw std::runtime_error("video file truncated");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[pos + i]) << (8 * i);
  pos += 4;
  return v;
}

std::string next_token(std::istream& in) {
  std::string tok;
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (std::isspace(c)) {
      if (!tok.empty()) break;
    } else {
      tok.push_back(static_cast<char>(c));
    }
    c = in.get();
  }
  return tok;
}

}  // namespace

void write_video(const std::filesystem::path& path, const Video& video) {
  std::vector<std::uint8_t> out = {'V', 'C', 'D', 'V'};
  const int w = video.frames.empty() ? 0 : video.frames.front().width;
  const int h = video.frames.empty() ? 0 : video.frames.front().height;
  put_u32(out, static_cast<std::uint32_t>(w));
  put_u32(out, static_cast<std::uint32_t>(h));
  put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(video.fps)));
  put_u32(out, static_cast<std::uint32_t>(video.frames.size()));
  out.push_back(static_cast<std::uint8_t>(video.id.size() & 0xFF));
  out.push_back(static_cast<std::uint8_t>(video.id.size() >> 8));
  out.insert(out.end(), video.id.begin(), video.id.end());
  for (const auto& f : video.frames) {
    if (f.width != w || f.height != h) throw std::invalid_argument("video frames differ in geometry");
    for (const float p : f.pixels) put_u32(out, std::bit_cast<std::uint32_t>(p));
  }
  write_file_bytes(path, out);
}

Video read_video(const std::filesystem::path& path) {
  const auto b = read_file_bytes(path);
  if (b.size() < 4 || std::string(b.begin(), b.begin() + 4) != "VCDV") {
    throw std::runtime_error(path.string() + ": bad video magic");
  }
  std::size_t pos = 4;
  const auto w = static_cast<int>(get_u32(b, pos));
  const auto h = static_cast<int>(get_u32(b, pos));
  Video v;
  v.fps = std::bit_cast<float>(get_u32(b, pos));
  const std::uint32_t n = get_u32(b, pos);
  if (pos + 2 > b.size()) throw std::runtime_error(path.string() + ": truncated");
  const std::size_t id_len = b[pos] | (b[pos + 1] << 8);
  pos += 2;
  if (pos + id_len > b.size()) throw std::runtime_error(path.string() + ": truncated");
  v.id.assign(reinterpret_cast<const char*>(b.data() + pos), id_len);
  pos += id_len;
  const std::size_t need = static_cast<std::size_t>(w) * h * n * 4;
  if (b.size() - pos != need) throw std::runtime_error(path.string() + ": pixel payload size mismatch");
  v.frames.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    Frame f(w, h);
    for (float& p : f.pixels) p = std::bit_cast<float>(get_u32(b, pos));
    validate_frame(f);
    v.frames.push_back(std::move(f));
  }
  return v;
}

Frame read_netpbm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  const std::string magic = next_token(in);
  if (magic != "P5" && magic != "P6") throw std::runtime_error(path.string() + ": only P5/P6 supported");
  const int w = std::stoi(next_token(in));
  const int h = std::stoi(next_token(in));
  const int maxval = std::stoi(next_token(in));
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 255) {
    throw std::runtime_error(path.string() + ": unsupported netpbm header");
  }
  const std::size_t channels = magic == "P6" ? 3 : 1;
  std::vector<unsigned char> raw(static_cast<std::size_t>(w) * h * channels);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size())) {
    throw std::runtime_error(path.string() + ": truncated pixel data");
  }
  std::vector<float> values(raw.size());
  std::transform(raw.begin(), raw.end(), values.begin(),
                 [maxval](unsigned char c) { return static_cast<float>(c) / maxval; });
  if (channels == 3) return frame_from_rgb(w, h, values);
  Frame f(w, h);
  f.pixels = std::move(values);
  return f;
}

Video read_netpbm_directory(const std::filesystem::path& dir, const std::string& id, double fps) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const auto ext = entry.path().extension();
    if (ext == ".pgm" || ext == ".ppm") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  Video v;
  v.id = id;
  v.fps = fps;
  for (const auto& f : files) v.frames.push_back(read_netpbm(f));
  if (v.frames.empty()) throw std::runtime_error(dir.string() + ": no netpbm frames");
  return v;
}

}  // namespace vcd
