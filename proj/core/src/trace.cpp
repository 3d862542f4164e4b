#include "copypaste/trace.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "copypaste/error.hpp"
#include "copypaste/serialization.hpp"

namespace copypaste {

using nlohmann::json;

void GenerationTrace::validate() const {
  auto fail = [&](const std::string& what) {
    throw Error(ErrorKind::kTraceFormat, "trace " + run_id + ": " + what);
  };
  if (query_id.empty()) fail("missing query_id");
  for (std::size_t s = 0; s < steps.size(); ++s) {
    const auto& step = steps[s];
    if (s > 0 && step.step_index <= steps[s - 1].step_index) fail("step indices not increasing");
    if (step.topk.empty()) fail("step " + std::to_string(step.step_index) + " has no candidates");
    if (k > 0 && step.topk.size() > k) {
      fail("step " + std::to_string(step.step_index) + " has more than k candidates");
    }
    for (std::size_t j = 0; j < step.topk.size(); ++j) {
      const double p = step.topk[j].probability;
      if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
        fail("probability outside [0, 1] at step " + std::to_string(step.step_index));
      }
      if (j > 0 && p > step.topk[j - 1].probability) {
        fail("top-k not descending at step " + std::to_string(step.step_index));
      }
    }
  }
}

std::string reconstruct_text(const std::vector<TraceStep>& steps) {
  std::string out;
  for (const auto& step : steps) {
    if (step.topk.empty()) continue;
    const auto& top = step.topk.front();
    if (!out.empty() && !top.continuation) out.push_back(' ');
    out += top.token;
  }
  return out;
}

GenerationTrace read_trace(const std::filesystem::path& path) {
  const auto lines = read_jsonl(path);
  if (lines.empty()) throw Error(ErrorKind::kTraceFormat, "empty trace file " + path.string());
  GenerationTrace trace;
  try {
    const auto& h = lines.front();
    trace.run_id = h.at("run_id").is_string() ? h["run_id"].get<std::string>() : h["run_id"].dump();
    trace.query_id =
        h.at("query_id").is_string() ? h["query_id"].get<std::string>() : h["query_id"].dump();
    trace.with_context = h.at("with_context").get<bool>();
    trace.model_id = h.value("model_id", "");
    trace.hidden_dim = h.at("hidden_dim").get<std::size_t>();
    trace.k = h.at("k").get<std::size_t>();
    for (std::size_t l = 1; l < lines.size(); ++l) {
      const auto& sj = lines[l];
      TraceStep step;
      step.step_index = sj.at("i").get<std::size_t>();
      step.hidden_ref = sj.value("h_off", std::uint64_t{0});
      for (const auto& e : sj.at("topk")) {
        TopKEntry entry;
        entry.token = e.at(0).get<std::string>();
        entry.probability = e.at(1).get<double>();
        if (e.size() > 2 && e.at(2).is_boolean()) entry.continuation = e.at(2).get<bool>();
        step.topk.push_back(std::move(entry));
      }
      trace.steps.push_back(std::move(step));
    }
    trace.generated_text = h.contains("generated_text") ? h["generated_text"].get<std::string>()
                                                        : reconstruct_text(trace.steps);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kTraceFormat, path.string() + ": " + e.what());
  }
  trace.validate();
  return trace;
}

void write_trace(const GenerationTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write trace " + path.string());
  json header = {{"run_id", trace.run_id},         {"query_id", trace.query_id},
                 {"with_context", trace.with_context}, {"model_id", trace.model_id},
                 {"hidden_dim", trace.hidden_dim}, {"k", trace.k},
                 {"generated_text", trace.generated_text}};
  out << header.dump() << '\n';
  for (const auto& step : trace.steps) {
    json topk = json::array();
    for (const auto& e : step.topk) {
      json entry = json::array({e.token, e.probability});
      if (e.continuation) entry.push_back(true);
      topk.push_back(std::move(entry));
    }
    out << json{{"i", step.step_index}, {"topk", std::move(topk)}, {"h_off", step.hidden_ref}}.dump()
        << '\n';
  }
}

std::filesystem::path sidecar_path(const std::filesystem::path& trace_path) {
  auto p = trace_path;
  p.replace_extension(".bin");
  return p;
}

namespace {

static_assert(sizeof(float) == 4);

std::uint32_t to_le(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    return ((v & 0xFFu) << 24) | ((v & 0xFF00u) << 8) | ((v >> 8) & 0xFF00u) | (v >> 24);
  }
}

}  // namespace

std::vector<float> read_hidden(const std::filesystem::path& sidecar, std::uint64_t row,
                               std::size_t hidden_dim) {
  std::ifstream in(sidecar, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open sidecar " + sidecar.string());
  const std::uint64_t offset = row * hidden_dim * 4;
  in.seekg(static_cast<std::streamoff>(offset));
  std::vector<char> raw(hidden_dim * 4);
  in.read(raw.data(), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
    throw Error(ErrorKind::kTraceFormat,
                "sidecar " + sidecar.string() + " too short for row " + std::to_string(row));
  }
  std::vector<float> out(hidden_dim);
  for (std::size_t d = 0; d < hidden_dim; ++d) {
    std::uint32_t bits = 0;
    std::memcpy(&bits, raw.data() + d * 4, 4);
    bits = to_le(bits);
    out[d] = std::bit_cast<float>(bits);
  }
  return out;
}

void write_hidden(const std::filesystem::path& sidecar, std::span<const std::vector<float>> rows) {
  std::ofstream out(sidecar, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write sidecar " + sidecar.string());
  for (const auto& row : rows) {
    for (float v : row) {
      const std::uint32_t bits = to_le(std::bit_cast<std::uint32_t>(v));
      out.write(reinterpret_cast<const char*>(&bits), 4);
    }
  }
}

}  // namespace copypaste
