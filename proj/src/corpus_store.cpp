#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <openssl/evp.h>

#include "vcd/descriptor_io.hpp"
#include "vcd/pipeline.hpp"
#include "vcd/video_io.hpp"

namespace vcd::pipeline {
namespace {

using nlohmann::json;

json layout_json(const scene::SceneLayout& l) {
  return {{"kind", scene::to_string(l.kind)}, {"x", l.x}, {"y", l.y}};
}

}  // namespace

void write_corpus(const std::filesystem::path& dir, const eval::Corpus& corpus) {
  std::filesystem::create_directories(dir / "videos");
  json videos = json::array();
  for (const auto& v : corpus.videos) {
    const std::string file = "videos/" + v.video.id + ".vcdv";
    write_video(dir / file, v.video);
    json entry = {{"id", v.video.id},
                  {"role", eval::to_string(v.role)},
                  {"seed", v.seed},
                  {"file", file},
                  {"sources", v.sources}};
    if (v.role == eval::Role::Stacked) entry["layout"] = layout_json(v.layout);
    videos.push_back(std::move(entry));
  }
  PipelineConfig snapshot;
  snapshot.corpus = corpus.config;
  const json manifest = {{"format", "vcd-corpus-1"},
                         {"corpus", to_json(snapshot)["corpus"]},
                         {"videos", std::move(videos)}};
  std::ofstream out(dir / "manifest.json", std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write corpus manifest in " + dir.string());
  out << manifest.dump(2) << '\n';
  eval::write_truth(dir / "ground_truth.csv", corpus.truth);
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw std::runtime_error("cannot open " + (dir / "manifest.json").string());
  const json j = json::parse(in);
  std::vector<ManifestEntry> out;
  for (const auto& v : j.at("videos")) {
    ManifestEntry e;
    e.id = v.at("id").get<std::string>();
    const auto role = v.at("role").get<std::string>();
    e.role = role == "query" ? eval::Role::Positive : eval::role_from_string(role);
    e.seed = v.value("seed", std::uint64_t{0});
    e.file = v.value("file", std::string{});
    e.frames_dir = v.value("frames_dir", std::string{});
    e.fps = v.value("fps", 0.0);
    if (v.contains("sources")) e.sources = v.at("sources").get<std::vector<std::string>>();
    if (e.file.empty() == e.frames_dir.empty()) {
      throw std::runtime_error("manifest entry '" + e.id + "' needs exactly one of file / frames_dir");
    }
    out.push_back(std::move(e));
  }
  return out;
}

Video load_video(const std::filesystem::path& dir, const ManifestEntry& entry) {
  Video v = entry.file.empty() ? read_netpbm_directory(dir / entry.frames_dir, entry.id,
                                                       entry.fps > 0 ? entry.fps : 1.0)
                               : read_video(dir / entry.file);
  if (v.id != entry.id) throw std::runtime_error("video file id '" + v.id + "' != manifest id '" + entry.id + "'");
  return v;
}

std::string sha256_hex(const std::vector<std::uint8_t>& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof(buf), "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(read_file_bytes(path)); }

std::string RunManifest::content_hash() const {
  const json basis = {{"command", command}, {"config", config}, {"inputs", inputs}};
  const std::string s = basis.dump();
  return sha256_hex(std::vector<std::uint8_t>(s.begin(), s.end()));
}

json RunManifest::to_json() const {
  return {{"command", command},   {"config", config},          {"inputs", inputs},
          {"outputs", outputs},   {"timings_ms", timings_ms},  {"error_count", error_count},
          {"content_hash", content_hash()}};
}

void write_run_manifest(const std::filesystem::path& path, const RunManifest& manifest) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << manifest.to_json().dump(2) << '\n';
}

}  // namespace vcd::pipeline
