#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace copypaste {

/// Names of the bundled prompt templates. A templates directory overrides
/// any of them with a file named "<name>.txt".
namespace tmpl {
inline constexpr std::string_view kExtract = "extract";
inline constexpr std::string_view kOrder = "cp_order";
inline constexpr std::string_view kLink = "cp_link";
inline constexpr std::string_view kCopyingRequirements = "copying_requirements";
inline constexpr std::string_view kWriter = "writer";
inline constexpr std::string_view kWriterRevise = "writer_revise";
inline constexpr std::string_view kReviewer = "reviewer";
inline constexpr std::string_view kBase = "base";
inline constexpr std::string_view kAttributed = "attributed";
inline constexpr std::string_view kCitations = "citations";
inline constexpr std::string_view kJudgePairwise = "judge_pairwise";
inline constexpr std::string_view kJudgeTwist = "judge_twist";
inline constexpr std::string_view kJudgeCausal = "judge_causal";
inline constexpr std::string_view kHitRate = "hit_rate";
inline constexpr std::string_view kAccuracy = "accuracy";
}  // namespace tmpl

class TemplateSet {
 public:
  /// The bundled defaults.
  TemplateSet();

  /// Defaults overridden by every "<name>.txt" found in dir. Throws
  /// Error(kConfig) if dir does not exist.
  static TemplateSet from_directory(const std::filesystem::path& dir);

  const std::string& get(std::string_view name) const;
  std::string render(std::string_view name,
                     const std::vector<std::pair<std::string, std::string>>& values) const;

  void set(std::string name, std::string text);
  std::vector<std::string> names() const;

 private:
  std::map<std::string, std::string, std::less<>> templates_;
};

}  // namespace copypaste
