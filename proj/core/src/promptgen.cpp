#include "copypaste/promptgen.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <set>

#include "copypaste/fragments.hpp"
#include "copypaste/text_util.hpp"
#include "copypaste/textseg.hpp"

namespace copypaste {

namespace {

std::string_view ltrim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  return s;
}

std::string upper_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

bool parse_index(std::string_view s, std::size_t& out) {
  if (s.empty() || s.size() > 6) return false;
  std::size_t v = 0;
  for (char c : s) {
    if (c < '0' || c > '9') return false;
    v = v * 10 + static_cast<std::size_t>(c - '0');
  }
  out = v;
  return true;
}

std::string format_score(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

}  // namespace

std::vector<std::string> parse_extracted(std::string_view reply) {
  static constexpr std::string_view kPrefix = "EXTRACTED:";
  std::vector<std::string> out;
  for (const auto& raw : split_lines(reply)) {
    std::string_view line = ltrim(raw);
    if (line.substr(0, kPrefix.size()) != kPrefix) continue;
    std::string text = trim(line.substr(kPrefix.size()));
    if (!text.empty()) out.push_back(std::move(text));
  }
  return out;
}

Parsed<std::vector<std::string>> parse_order(std::string_view reply) {
  static constexpr std::string_view kKey = "ORDER:";
  for (const auto& raw : split_lines(reply)) {
    const auto pos = raw.find(kKey);
    if (pos == std::string::npos) continue;
    std::string_view rest = std::string_view(raw).substr(pos + kKey.size());
    std::vector<std::string> ids;
    std::string current;
    auto flush = [&] {
      if (!current.empty()) ids.push_back(upper_ascii(current));
      current.clear();
    };
    for (char c : rest) {
      if (c == ',' || c == ' ' || c == '\t' || c == '[' || c == ']' || c == '*' || c == '`' ||
          c == '"' || c == '\'') {
        flush();
      } else {
        current.push_back(c);
      }
    }
    flush();
    if (ids.empty()) return FormatError{ErrorKind::kFormat, "ORDER line lists no sentence ids"};
    return ids;
  }
  return FormatError{ErrorKind::kFormat, "reply has no ORDER line"};
}

std::vector<std::string> repair_order(const std::vector<std::string>& proposed,
                                      const std::vector<std::string>& known) {
  const std::set<std::string> known_set(known.begin(), known.end());
  std::set<std::string> used;
  std::vector<std::string> out;
  for (const auto& id : proposed) {
    if (known_set.count(id) == 0 || used.count(id) != 0) continue;
    used.insert(id);
    out.push_back(id);
  }
  for (const auto& id : known) {
    if (used.insert(id).second) out.push_back(id);
  }
  return out;
}

Parsed<LinkBlocks> parse_link(std::string_view reply) {
  LinkBlocks blocks;
  bool found = false;
  std::size_t pos = 0;
  while (pos < reply.size()) {
    const auto open = reply.find('[', pos);
    if (open == std::string_view::npos) break;
    const auto close = reply.find(']', open + 1);
    if (close == std::string_view::npos) break;
    const std::string_view name = reply.substr(open + 1, close - open - 1);
    pos = open + 1;
    if (name.empty() || name.front() == '/') continue;

    const bool is_intro = name == "INTRO";
    const bool is_conclusion = name == "CONCLUSION";
    std::size_t from = 0;
    std::size_t to = 0;
    bool is_transition = false;
    if (name.substr(0, 11) == "TRANSITION_") {
      const std::string_view rest = name.substr(11);
      const auto sep = rest.find('_');
      is_transition = sep != std::string_view::npos && parse_index(rest.substr(0, sep), from) &&
                      parse_index(rest.substr(sep + 1), to);
    }
    if (!is_intro && !is_conclusion && !is_transition) continue;

    const std::string closing = "[/" + std::string(name) + "]";
    const auto end = reply.find(closing, close + 1);
    if (end == std::string_view::npos) continue;
    std::string text = trim(reply.substr(close + 1, end - close - 1));
    pos = end + closing.size();
    found = true;
    if (is_intro) {
      blocks.intro = std::move(text);
    } else if (is_conclusion) {
      blocks.conclusion = std::move(text);
    } else {
      blocks.transitions.push_back({from, to, std::move(text)});
    }
  }
  if (!found) return FormatError{ErrorKind::kFormat, "reply has no INTRO, CONCLUSION or TRANSITION block"};
  return blocks;
}

bool occurs_verbatim(std::string_view sentence, std::string_view context) {
  const std::string needle = normalize_whitespace(sentence);
  if (needle.empty()) return false;
  return normalize_whitespace(context).find(needle) != std::string::npos;
}

std::string numbered_sentences(const std::vector<ExtractedSentence>& sentences) {
  std::string out;
  for (const auto& s : sentences) {
    if (!out.empty()) out.push_back('\n');
    out += s.sent_id + ": " + s.text;
  }
  return out;
}

std::string numbered_passages(std::string_view context) {
  std::string out;
  std::size_t n = 0;
  for (const auto& s : split_sentences(context)) {
    if (!out.empty()) out.push_back('\n');
    out += "[" + std::to_string(++n) + "] " + s;
  }
  return out;
}

CopyMetrics answer_metrics(std::string_view context, std::string_view answer, bool strip_markers) {
  const TokenSeq ctx = tokenize(context);
  const TokenSeq ans = tokenize(strip_markers ? strip_citations(answer) : std::string(answer));
  return copy_metrics(detect_fragments(ctx, ans));
}

PromptGenerator::PromptGenerator(llm::Client& client, const TemplateSet& templates,
                                 GenerationSettings settings)
    : client_(client), templates_(templates), settings_(settings) {
  settings_.score.validate();
  if (settings_.t_max < 1) throw Error(ErrorKind::kInvalidArgument, "t_max must be >= 1");
}

std::string PromptGenerator::ask(std::string prompt) {
  return client_.ask(std::move(prompt), settings_.temperature).text;
}

Extraction PromptGenerator::extract_sentences(const QueryContextPair& pair) {
  const std::string reply = ask(templates_.render(
      tmpl::kExtract, {{"context", pair.context}, {"query", pair.query}}));
  Extraction out;
  std::set<std::string> seen;
  for (auto& text : parse_extracted(reply)) {
    std::string candidate = text;
    if (!occurs_verbatim(candidate, pair.context) && candidate.size() >= 2 &&
        candidate.front() == '[' && candidate.back() == ']') {
      candidate = trim(std::string_view(candidate).substr(1, candidate.size() - 2));
    }
    if (!occurs_verbatim(candidate, pair.context)) {
      ++out.dropped;
      continue;
    }
    candidate = normalize_whitespace(candidate);
    if (!seen.insert(candidate).second) continue;
    out.sentences.push_back(
        {"SENT_" + std::to_string(out.sentences.size() + 1), std::move(candidate), true});
  }
  if (out.sentences.empty()) {
    throw Error(ErrorKind::kExtractionFailed,
                "no extracted sentence occurs verbatim in the context (" +
                    std::to_string(out.dropped) + " dropped)");
  }
  return out;
}

std::string PromptGenerator::cp_order(const QueryContextPair& pair,
                                      const std::vector<ExtractedSentence>& sentences) {
  if (sentences.empty()) throw Error(ErrorKind::kInvalidArgument, "cp_order needs sentences");
  const std::string reply = ask(templates_.render(
      tmpl::kOrder, {{"query", pair.query}, {"numbered_sentences", numbered_sentences(sentences)}}));
  auto parsed = parse_order(reply);
  if (!parsed) throw Error(parsed.error().kind, parsed.error().message);

  std::vector<std::string> known;
  for (const auto& s : sentences) known.push_back(s.sent_id);
  std::string out;
  for (const auto& id : repair_order(parsed.value(), known)) {
    const auto it = std::find_if(sentences.begin(), sentences.end(),
                                 [&](const auto& s) { return s.sent_id == id; });
    if (!out.empty()) out.push_back(' ');
    out += it->text;
  }
  return out;
}

LinkResult PromptGenerator::cp_link(const QueryContextPair& pair,
                                    const std::vector<ExtractedSentence>& sentences) {
  if (sentences.empty()) throw Error(ErrorKind::kInvalidArgument, "cp_link needs sentences");
  const std::string reply = ask(templates_.render(
      tmpl::kLink, {{"query", pair.query}, {"numbered_sentences", numbered_sentences(sentences)}}));
  LinkResult result;
  const auto parsed = parse_link(reply);
  std::vector<std::string> parts;
  auto add = [&](std::string_view text) {
    std::string t = normalize_whitespace(text);
    if (!t.empty()) parts.push_back(std::move(t));
  };
  if (!parsed) {
    result.fallback = true;
    for (const auto& s : sentences) add(s.text);
  } else {
    const LinkBlocks& blocks = parsed.value();
    if (blocks.intro) add(*blocks.intro);
    for (std::size_t i = 0; i < sentences.size(); ++i) {
      add(sentences[i].text);
      if (i + 1 == sentences.size()) break;
      for (const auto& t : blocks.transitions) {
        if (t.from != i + 1 || t.to != i + 2) continue;
        if (count_words(t.text) > kMaxTransitionWords) {
          ++result.truncated_transitions;
          add(truncate_words(t.text, kMaxTransitionWords));
        } else {
          add(t.text);
        }
        break;
      }
    }
    if (blocks.conclusion) add(*blocks.conclusion);
  }
  for (const auto& p : parts) {
    if (!result.text.empty()) result.text.push_back(' ');
    result.text += p;
  }
  return result;
}

RefineResult PromptGenerator::cp_refine(const QueryContextPair& pair) {
  RefineResult result;
  const std::string& requirements = templates_.get(tmpl::kCopyingRequirements);
  const auto& cfg = settings_.score;

  std::string draft = trim(ask(templates_.render(
      tmpl::kWriter,
      {{"query", pair.query}, {"context", pair.context}, {"copying_requirements", requirements}})));
  std::optional<std::string> feedback;
  bool writer_failed = draft.empty();

  for (int t = 0;; ++t) {
    const double sigma = copy_score(answer_metrics(pair.context, draft), cfg);
    result.history.push_back({t, draft, feedback, sigma, writer_failed});
    if (!draft.empty() && sigma >= cfg.threshold) break;
    if (t >= settings_.t_max) {
      result.below_threshold = true;
      break;
    }
    feedback = trim(ask(templates_.render(tmpl::kReviewer,
                                          {{"context", pair.context},
                                           {"query", pair.query},
                                           {"answer", draft},
                                           {"copying_score", format_score(sigma)},
                                           {"copying_threshold", format_score(cfg.threshold)}})));
    ++result.reviewer_calls;
    std::string next = trim(ask(templates_.render(tmpl::kWriterRevise,
                                                  {{"old_answer", draft},
                                                   {"reviewer_suggestions", *feedback},
                                                   {"context", pair.context},
                                                   {"query", pair.query},
                                                   {"copying_requirements", requirements}})));
    writer_failed = next.empty();
    // An empty revision is a failed iteration; the previous draft stands.
    if (!writer_failed) draft = std::move(next);
  }
  if (draft.empty()) throw Error(ErrorKind::kGenerationFailed, "writer never produced a draft");
  result.answer = draft;
  return result;
}

std::string PromptGenerator::baseline_prompt(const QueryContextPair& pair,
                                             CandidateMethod method) const {
  switch (method) {
    case CandidateMethod::kBase:
      return templates_.render(tmpl::kBase, {{"query", pair.query}});
    case CandidateMethod::kAttributed:
      return templates_.render(tmpl::kAttributed, {{"context", pair.context}, {"query", pair.query}});
    case CandidateMethod::kCitations:
      return templates_.render(tmpl::kCitations, {{"numbered_sentences", numbered_passages(pair.context)},
                                                  {"query", pair.query}});
    default:
      throw Error(ErrorKind::kInvalidArgument,
                  "not a baseline method: " + std::string(to_string(method)));
  }
}

Candidate PromptGenerator::generate_candidate(const QueryContextPair& pair, CandidateMethod method) {
  Candidate cand;
  cand.pair_id = pair.id;
  cand.method = method;
  cand.candidate_id = Candidate::make_id(pair.id, method);
  try {
    switch (method) {
      case CandidateMethod::kBase:
      case CandidateMethod::kAttributed:
      case CandidateMethod::kCitations:
        cand.text = trim(ask(baseline_prompt(pair, method)));
        break;
      case CandidateMethod::kCPOrder: {
        const Extraction ex = extract_sentences(pair);
        if (ex.dropped > 0) cand.flags.push_back("dropped_sentences=" + std::to_string(ex.dropped));
        cand.text = cp_order(pair, ex.sentences);
        break;
      }
      case CandidateMethod::kCPLink: {
        const Extraction ex = extract_sentences(pair);
        if (ex.dropped > 0) cand.flags.push_back("dropped_sentences=" + std::to_string(ex.dropped));
        const LinkResult link = cp_link(pair, ex.sentences);
        if (link.fallback) cand.flags.push_back("link_fallback");
        cand.text = link.text;
        break;
      }
      case CandidateMethod::kCPRefine: {
        const RefineResult refined = cp_refine(pair);
        if (refined.below_threshold) cand.flags.push_back("below_threshold");
        cand.flags.push_back("refine_iterations=" + std::to_string(refined.history.size() - 1));
        cand.text = refined.answer;
        break;
      }
    }
  } catch (const Error& e) {
    cand.status = CandidateStatus::kGenFailed;
    cand.failure = std::string(to_string(e.kind())) + ": " + e.what();
    cand.text.clear();
    return cand;
  }
  if (cand.text.empty()) {
    cand.status = CandidateStatus::kGenFailed;
    cand.failure = "empty response";
    return cand;
  }
  cand.metrics = answer_metrics(pair.context, cand.text, method == CandidateMethod::kCitations);
  cand.copy_score = copy_score(cand.metrics, settings_.score);
  return cand;
}

}  // namespace copypaste
