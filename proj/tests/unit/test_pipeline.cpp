#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "vcd/commands.hpp"
#include "vcd/descriptor_io.hpp"
#include "vcd/pipeline.hpp"
#include "vcd/retrieval.hpp"

namespace fs = std::filesystem;
using namespace vcd;
using nlohmann::json;

namespace {

const char* kSmall =
    " --set corpus.references=20 --set corpus.positives=6 --set corpus.distractors=4"
    " --set corpus.stacked=4 --set corpus.background=20";

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<json> read_jsonl(const fs::path& p) {
  std::vector<json> out;
  std::istringstream in(read_text(p));
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(json::parse(line));
  }
  return out;
}

// Runs the CLI inside `dir`; stdout and stderr land in dir/last.log.
int run_cli(const fs::path& dir, const std::string& args, const std::string& env = "") {
  const std::string cmd = "cd '" + dir.string() + "' && " + env + " '" + VCD_CLI_PATH + "' " + args +
                          " > last.log 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string last_log(const fs::path& dir) { return read_text(dir / "last.log"); }

struct Workspace {
  fs::path dir;
  Workspace() {
    dir = fs::temp_directory_path() / "vcd_test_pipeline";
    fs::remove_all(dir);
    fs::create_directories(dir);
    REQUIRE(run_cli(dir, std::string("gen-corpus --corpus c --out o") + kSmall) == 0);
  }
  ~Workspace() { fs::remove_all(dir); }
};

// One small corpus shared by the CLI cases.
Workspace& workspace() {
  static Workspace w;
  return w;
}

std::map<std::string, std::size_t> record_counts(const DescriptorSet& set) {
  std::map<std::string, std::size_t> out;
  for (const auto& r : set.records) ++out[r.video_id];
  return out;
}

std::set<std::pair<std::string, std::string>> pair_set(const std::vector<retrieval::CandidatePair>& pairs) {
  std::set<std::pair<std::string, std::string>> out;
  for (const auto& p : pairs) out.insert({p.query_id, p.reference_id});
  return out;
}

}  // namespace

TEST_CASE("parse_config reads YAML and applies overrides") {
  const auto cfg = pipeline::parse_config(
      "sampling_fps: 2\n"
      "top_k: 7\n"
      "gate:\n  alpha: 0.3\n  enabled: false\n"
      "normalization:\n  beta: 0.5\n"
      "corpus:\n  references: 12\n");
  CHECK(cfg.sampling_fps == 2.0);
  CHECK(cfg.top_k == 7);
  CHECK(cfg.gate.alpha == 0.3);
  CHECK_FALSE(cfg.gate.enabled);
  CHECK(cfg.normalization.beta == 0.5);
  CHECK(cfg.corpus.references == 12);
  CHECK(cfg.normalization.k_background == 10);

  const auto over = pipeline::parse_config("top_k: 7\n", {"top_k=3", "gate.alpha=0.25", "splitter.enabled=false"});
  CHECK(over.top_k == 3);
  CHECK(over.gate.alpha == 0.25);
  CHECK_FALSE(over.split_enabled);

  const auto defaults = pipeline::parse_config("");
  CHECK(defaults.top_k == 20);
  CHECK(defaults.gate.alpha == 0.1);
  CHECK(defaults.normalization.beta == 1.2);
  CHECK(defaults.gate.epsilon == 1e-3);
}

TEST_CASE("config round-trips through JSON") {
  const auto cfg = pipeline::parse_config("", {"top_k=5", "corpus.seed=9", "normalization.negative_bias=-2"});
  const auto back = pipeline::config_from_json(pipeline::to_json(cfg));
  CHECK(pipeline::to_json(back) == pipeline::to_json(cfg));
  CHECK(back.corpus.seed == 9);
}

TEST_CASE("config errors") {
  CHECK_THROWS(pipeline::parse_config("no_such_key: 1\n"));
  CHECK_THROWS(pipeline::parse_config("gate:\n  threshold: 0.2\n"));
  CHECK_THROWS(pipeline::parse_config("", {"gate.nope=1"}));
  CHECK_THROWS(pipeline::parse_config("", {"top_k"}));
  CHECK_THROWS(pipeline::parse_config("top_k: many\n"));
  CHECK_THROWS(pipeline::parse_config("", {"gate.alpha=1.5"}));
  CHECK_THROWS(pipeline::parse_config("", {"top_k=0"}));
  CHECK_THROWS(pipeline::parse_config("", {"sampling_fps=0"}));
  CHECK_THROWS(pipeline::parse_config("", {"gate.epsilon=0"}));
  CHECK_THROWS(pipeline::parse_config("", {"normalization.k_background=0"}));
  CHECK_THROWS(pipeline::parse_config("top_k: [1, 2\n"));
}

TEST_CASE("sha256 known answers") {
  CHECK(pipeline::sha256_hex({}) == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(pipeline::sha256_hex({'a', 'b', 'c'}) ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("cli describe, search and evaluate") {
  const auto& dir = workspace().dir;
  REQUIRE(run_cli(dir, std::string("describe --corpus c --out o") + kSmall) == 0);
  REQUIRE(run_cli(dir, std::string("search --corpus c --out o") + kSmall) == 0);
  REQUIRE(run_cli(dir, "evaluate --corpus c --out o") == 0);
  CHECK(last_log(dir).find("uAP") != std::string::npos);

  const auto eval_json = json::parse(read_text(dir / "o/evaluation.json"));
  CHECK(eval_json["micro_ap"].get<double>() > 0.5);
  CHECK(eval_json["ground_truth_pairs"].get<std::size_t>() == eval::read_truth(dir / "c/ground_truth.csv").pairs.size());

  for (const char* f : {"run_manifest_gen-corpus.json", "run_manifest_describe.json", "run_manifest_search.json",
                        "run_manifest_evaluate.json"}) {
    const auto m = json::parse(read_text(dir / "o" / f));
    CHECK(m.contains("content_hash"));
    CHECK(m.contains("outputs"));
  }
  const auto search_manifest = json::parse(read_text(dir / "o/run_manifest_search.json"));
  for (const auto& [path, digest] : search_manifest["outputs"].items()) {
    CHECK(pipeline::sha256_file(dir / path) == digest.get<std::string>());
  }
}

TEST_CASE("cli record counts follow gate and layout") {
  const auto& dir = workspace().dir;
  REQUIRE(run_cli(dir, std::string("describe --corpus c --out o") + kSmall) == 0);
  const auto queries = read_descriptors(dir / "o/queries.vcd");
  const auto counts = record_counts(queries);
  std::map<std::string, std::string> layout;
  for (const auto& j : read_jsonl(dir / "o/layouts.jsonl")) {
    layout[j["video_id"].get<std::string>()] = j["kind"].get<std::string>();
  }
  const auto references = read_descriptors(dir / "o/references.vcd");
  // Query clips are 5 s at 1 fps sampling.
  const std::size_t frames = 5;
  int unedited = 0;
  int grid = 0;
  for (const auto& d : read_jsonl(dir / "o/gate_decisions.jsonl")) {
    const auto id = d["video_id"].get<std::string>();
    if (d["verdict"] == "unedited") {
      ++unedited;
      CHECK(counts.at(id) == 1);
      CHECK(layout.count(id) == 0);
      for (const auto& r : queries.records) {
        if (r.video_id == id) CHECK(std::abs(l2_norm(std::vector<double>(r.vector.begin(), r.vector.end())) - 1e-3) < 1e-6);
      }
      continue;
    }
    REQUIRE(layout.count(id) == 1);
    const std::size_t tiles = layout[id] == "grid" ? 4 : (layout[id] == "single" ? 1 : 2);
    grid += layout[id] == "grid" ? 1 : 0;
    CHECK(counts.at(id) == tiles * frames);
  }
  CHECK(unedited >= 4);
  CHECK(grid >= 1);
  CHECK(references.records.size() == 20 * 8);
  CHECK(read_text(dir / "o/errors.jsonl").empty());
}

TEST_CASE("cli search runs from descriptor files alone") {
  const auto& dir = workspace().dir;
  const auto copy = dir / "isolated";
  fs::remove_all(copy);
  fs::create_directories(copy / "o");
  REQUIRE(run_cli(dir, std::string("describe --corpus c --out o") + kSmall) == 0);
  REQUIRE(run_cli(dir, std::string("search --corpus c --out o") + kSmall) == 0);
  for (const char* f : {"references.vcd", "queries.vcd", "background.vcd", "gate_decisions.jsonl"}) {
    fs::copy_file(dir / "o" / f, copy / "o" / f);
  }
  // No corpus directory exists next to the copy.
  REQUIRE(run_cli(copy, std::string("search --corpus c --out o") + kSmall) == 0);
  CHECK(read_text(copy / "o/candidates.csv") == read_text(dir / "o/candidates.csv"));
}

TEST_CASE("cli outputs are deterministic across runs and thread counts") {
  const auto& dir = workspace().dir;
  REQUIRE(run_cli(dir, std::string("describe --corpus c --out o") + kSmall, "VCD_THREADS=1") == 0);
  REQUIRE(run_cli(dir, std::string("search --corpus c --out o") + kSmall, "VCD_THREADS=1") == 0);
  REQUIRE(run_cli(dir, std::string("describe --corpus c --out o2 --threads 3") + kSmall) == 0);
  REQUIRE(run_cli(dir, std::string("search --corpus c --out o2 --threads 3") + kSmall) == 0);
  for (const char* f : {"references.vcd", "queries.vcd", "background.vcd", "gate_decisions.jsonl", "layouts.jsonl",
                        "candidates.csv"}) {
    CHECK_MESSAGE(read_text(dir / "o" / f) == read_text(dir / "o2" / f), f);
  }

  // A regenerated corpus is byte-identical too.
  REQUIRE(run_cli(dir, std::string("gen-corpus --corpus c2 --out o3") + kSmall) == 0);
  for (const auto& e : pipeline::read_manifest(dir / "c")) {
    CHECK(read_text(dir / "c" / e.file) == read_text(dir / "c2" / e.file));
  }
  CHECK(read_text(dir / "c/ground_truth.csv") == read_text(dir / "c2/ground_truth.csv"));
  CHECK(read_text(dir / "c/gate_model.json") == read_text(dir / "c2/gate_model.json"));
  fs::remove_all(dir / "c2");
}

TEST_CASE("cli run manifest hash tracks config and inputs") {
  const auto& dir = workspace().dir;
  auto hash = [&](const std::string& extra) {
    REQUIRE(run_cli(dir, std::string("describe --corpus c --out oh") + kSmall + extra) == 0);
    return json::parse(read_text(dir / "oh/run_manifest_describe.json"))["content_hash"].get<std::string>();
  };
  const auto base = hash("");
  CHECK(hash("") == base);
  CHECK(hash(" --set gate.alpha=0.2") != base);

  const auto model_path = dir / "c/gate_model.json";
  const auto original = read_text(model_path);
  {
    auto m = json::parse(original);
    m["bias"] = m["bias"].get<double>() + 1e-3;
    std::ofstream(model_path) << m.dump(2);
  }
  CHECK(hash("") != base);
  std::ofstream(model_path) << original;
  CHECK(hash("") == base);
}

TEST_CASE("pipeline search: normalization and substitutes") {
  const auto& dir = workspace().dir;
  REQUIRE(run_cli(dir, std::string("describe --corpus c --out o") + kSmall) == 0);
  const auto refs = read_descriptors(dir / "o/references.vcd");
  const auto queries = read_descriptors(dir / "o/queries.vcd");
  const auto background = read_descriptors(dir / "o/background.vcd");
  const auto decisions = gate::decisions_from_jsonl(read_text(dir / "o/gate_decisions.jsonl"));

  pipeline::PipelineConfig cfg;
  const auto normalized = pipeline::search(refs, queries, &background, decisions, cfg);
  auto flat = cfg;
  flat.normalization.beta = 0.0;
  const auto raw = pipeline::search(refs, queries, &background, decisions, flat);

  std::set<std::string> unedited;
  for (const auto& d : decisions) {
    if (d.verdict == gate::Verdict::Unedited) unedited.insert(d.video_id);
  }
  REQUIRE_FALSE(unedited.empty());
  auto edited_only = [&](const std::vector<retrieval::CandidatePair>& pairs) {
    std::vector<retrieval::CandidatePair> out;
    for (const auto& p : pairs) {
      if (!unedited.count(p.query_id)) out.push_back(p);
    }
    return out;
  };
  CHECK(pair_set(edited_only(normalized)) == pair_set(edited_only(raw)));
  CHECK(normalized.size() == raw.size());

  bool any_score_moved = false;
  std::map<std::pair<std::string, std::string>, double> raw_scores;
  for (const auto& p : raw) raw_scores[{p.query_id, p.reference_id}] = p.score;
  for (const auto& p : edited_only(normalized)) {
    any_score_moved = any_score_moved || p.score != raw_scores.at({p.query_id, p.reference_id});
  }
  CHECK(any_score_moved);

  int substitute_pairs = 0;
  for (const auto& p : normalized) {
    if (!unedited.count(p.query_id)) continue;
    ++substitute_pairs;
    CHECK(p.score < 0.0);
  }
  CHECK(substitute_pairs > 0);
}

TEST_CASE("cli evaluate edge cases") {
  const auto& dir = workspace().dir;
  {
    std::ofstream(dir / "empty.csv") << "query_id,ref_id,score\n";
  }
  REQUIRE(run_cli(dir, "evaluate --corpus c --out oe --candidates empty.csv") == 0);
  CHECK(json::parse(read_text(dir / "oe/evaluation.json"))["micro_ap"].get<double>() == 0.0);

  const auto truth = eval::read_truth(dir / "c/ground_truth.csv");
  {
    std::ofstream out(dir / "perfect.csv");
    out << "query_id,ref_id,score\n";
    for (const auto& [q, r] : truth.pairs) out << q << "," << r << ",1.000000\n";
  }
  REQUIRE(run_cli(dir, "evaluate --corpus c --out oe --candidates perfect.csv") == 0);
  CHECK(json::parse(read_text(dir / "oe/evaluation.json"))["micro_ap"].get<double>() == 1.0);

  {
    std::ofstream(dir / "broken.csv") << "query_id,ref_id,score\nQ1,R1\n";
  }
  CHECK(run_cli(dir, "evaluate --corpus c --out oe --candidates broken.csv") != 0);
  CHECK(last_log(dir).find("line 2") != std::string::npos);
}

TEST_CASE("cli describe reports damaged videos") {
  const auto& dir = workspace().dir;
  const auto broken = dir / "cb";
  fs::remove_all(broken);
  fs::copy(dir / "c", broken, fs::copy_options::recursive);
  const auto entries = pipeline::read_manifest(broken);
  std::string victim;
  for (const auto& e : entries) {
    if (e.role == eval::Role::Positive) {
      victim = e.id;
      const auto path = broken / e.file;
      auto bytes = read_file_bytes(path);
      bytes.resize(bytes.size() / 2);
      write_file_bytes(path, bytes);
      break;
    }
  }
  REQUIRE_FALSE(victim.empty());
  CHECK(run_cli(dir, std::string("describe --corpus cb --out ob") + kSmall) == 2);
  const auto errors = read_jsonl(dir / "ob/errors.jsonl");
  REQUIRE(errors.size() == 1);
  CHECK(errors[0]["video_id"] == victim);
  CHECK(record_counts(read_descriptors(dir / "ob/queries.vcd")).count(victim) == 0);
  CHECK(json::parse(read_text(dir / "ob/run_manifest_describe.json"))["error_count"] == 1);
  fs::remove_all(broken);
}

TEST_CASE("cli external gate scores") {
  const auto& dir = workspace().dir;
  std::vector<gate::GateDecision> fixed;
  for (const auto& e : pipeline::read_manifest(dir / "c")) {
    if (e.role == eval::Role::Reference || e.role == eval::Role::Background) continue;
    // Everything but distractors is declared edited.
    const bool edited = e.role != eval::Role::Distractor;
    fixed.push_back({e.id, edited ? gate::Verdict::Edited : gate::Verdict::Unedited, edited ? 0.9 : 0.01, 0.1});
  }
  {
    std::ofstream(dir / "scores.jsonl") << gate::decisions_to_jsonl(fixed);
  }
  const auto scores = (dir / "scores.jsonl").string();
  REQUIRE(run_cli(dir, std::string("describe --corpus c --out ox --set gate.external_scores=") + scores + kSmall) == 0);
  const auto decisions = gate::decisions_from_jsonl(read_text(dir / "ox/gate_decisions.jsonl"));
  REQUIRE(decisions.size() == fixed.size());
  for (std::size_t i = 0; i < fixed.size(); ++i) {
    CHECK(decisions[i].video_id == fixed[i].video_id);
    CHECK(decisions[i].verdict == fixed[i].verdict);
    CHECK(decisions[i].score == fixed[i].score);
  }
  CHECK(run_cli(dir, std::string("describe --corpus c --out ox --set gate.external_scores=missing.jsonl") + kSmall) != 0);
}

TEST_CASE("cli losscheck") {
  const auto& dir = workspace().dir;
  CHECK(run_cli(dir, "losscheck --batches 10 --report loss.json") == 0);
  const auto report = json::parse(read_text(dir / "loss.json"));
  CHECK(report.is_object());
  CHECK(run_cli(dir, "losscheck --tau 0") != 0);
  CHECK_FALSE(last_log(dir).empty());
  CHECK(run_cli(dir, "losscheck --lambda -1") != 0);
}

TEST_CASE("cli rejects bad arguments") {
  const auto& dir = workspace().dir;
  CHECK(run_cli(dir, "describe --corpus c --out o --set nonsense=1") != 0);
  CHECK(run_cli(dir, "describe --corpus does-not-exist --out o") != 0);
  CHECK(run_cli(dir, "frobnicate") != 0);
  {
    std::ofstream(dir / "bad.yaml") << "gate:\n  alpha: 2\n";
  }
  CHECK(run_cli(dir, "describe -c bad.yaml --corpus c --out o") != 0);
}
