#pragma once

// File-level commands behind the `vcd` CLI. Each returns a process exit code:
// 0 success, 1 failed check (evaluate/losscheck), 2 partial per-video failure.
// Precondition violations raise exceptions.

#include <filesystem>
#include <iosfwd>
#include <optional>

#include "vcd/pipeline.hpp"

namespace vcd::commands {

// Output file names inside output_dir.
inline constexpr const char* kReferenceFile = "references.vcd";
inline constexpr const char* kQueryFile = "queries.vcd";
inline constexpr const char* kBackgroundFile = "background.vcd";
inline constexpr const char* kDecisionFile = "gate_decisions.jsonl";
inline constexpr const char* kLayoutFile = "layouts.jsonl";
inline constexpr const char* kErrorFile = "errors.jsonl";
inline constexpr const char* kCandidateFile = "candidates.csv";

int gen_corpus(const pipeline::PipelineConfig& config, std::ostream& log);
int describe(const pipeline::PipelineConfig& config, std::ostream& log);
int search(const pipeline::PipelineConfig& config, std::ostream& log);
int evaluate(const pipeline::PipelineConfig& config, const std::optional<std::filesystem::path>& candidates,
             const std::optional<std::filesystem::path>& truth, std::ostream& log);
int ablate(const pipeline::PipelineConfig& config, std::ostream& log);
int losscheck(const pipeline::LossCheckOptions& options, const std::optional<std::filesystem::path>& report,
              std::ostream& out);

}  // namespace vcd::commands
