#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace copypaste {

struct TopKEntry {
  std::string token;  // detokenized surface
  double probability = 0.0;
  bool continuation = false;  // subword piece continuing the previous token

  friend bool operator==(const TopKEntry&, const TopKEntry&) = default;
};

struct TraceStep {
  std::size_t step_index = 0;
  std::vector<TopKEntry> topk;  // descending probability
  std::uint64_t hidden_ref = 0;  // row in the hidden-state sidecar

  friend bool operator==(const TraceStep&, const TraceStep&) = default;
};

struct GenerationTrace {
  std::string run_id;
  std::string query_id;
  bool with_context = false;
  std::string model_id;
  std::size_t hidden_dim = 0;
  std::size_t k = 0;
  std::string generated_text;
  std::vector<TraceStep> steps;

  /// Checks ordering, probability range and top-K width of every step.
  /// Throws Error(kTraceFormat).
  void validate() const;

  friend bool operator==(const GenerationTrace&, const GenerationTrace&) = default;
};

/// Reads a trace: a header line {run_id, query_id, with_context, model_id,
/// hidden_dim, k} followed by one {i, topk: [[token, p], ...], h_off} line
/// per step. A topk entry may carry a third boolean continuation flag. When
/// the header has no "generated_text", it is rebuilt from top-1 tokens.
GenerationTrace read_trace(const std::filesystem::path& path);

void write_trace(const GenerationTrace& trace, const std::filesystem::path& path);

/// Conventional sidecar location: the trace path with extension ".bin".
std::filesystem::path sidecar_path(const std::filesystem::path& trace_path);

/// Row `row` of a float32 little-endian sidecar holding hidden_dim columns.
std::vector<float> read_hidden(const std::filesystem::path& sidecar, std::uint64_t row,
                               std::size_t hidden_dim);

/// Writes rows back to back as float32 little-endian.
void write_hidden(const std::filesystem::path& sidecar, std::span<const std::vector<float>> rows);

/// Top-1 surfaces joined with spaces, except continuation pieces, which are
/// glued to the previous token.
std::string reconstruct_text(const std::vector<TraceStep>& steps);

}  // namespace copypaste
