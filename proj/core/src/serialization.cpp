#include "copypaste/serialization.hpp"

#include <fstream>
#include <string>

#include "copypaste/error.hpp"

namespace copypaste {

using nlohmann::json;

std::vector<json> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::vector<json> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::exception& e) {
      throw Error(ErrorKind::kFormat,
                  path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

QueryContextPair pair_from_json(const json& j) {
  try {
    QueryContextPair p;
    const auto& id = j.at("id");
    p.id = id.is_string() ? id.get<std::string>() : id.dump();
    p.query = j.at("query").get<std::string>();
    p.context = j.at("context").get<std::string>();
    if (j.contains("gold_answer") && !j["gold_answer"].is_null()) {
      p.gold_answer = j["gold_answer"].get<std::string>();
    }
    if (j.contains("wrong_answers") && !j["wrong_answers"].is_null()) {
      p.wrong_answers = j["wrong_answers"].get<std::vector<std::string>>();
    }
    p.validate();
    return p;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kFormat, std::string("malformed pair record: ") + e.what());
  }
}

json to_json(const QueryContextPair& pair) {
  json j = {{"id", pair.id}, {"query", pair.query}, {"context", pair.context}};
  if (pair.gold_answer) j["gold_answer"] = *pair.gold_answer;
  if (!pair.wrong_answers.empty()) j["wrong_answers"] = pair.wrong_answers;
  return j;
}

std::vector<QueryContextPair> read_pairs(const std::filesystem::path& path) {
  std::vector<QueryContextPair> pairs;
  for (const auto& j : read_jsonl(path)) pairs.push_back(pair_from_json(j));
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    for (std::size_t k = 0; k < i; ++k) {
      if (pairs[k].id == pairs[i].id) {
        throw Error(ErrorKind::kFormat, "duplicate pair id " + pairs[i].id + " in " + path.string());
      }
    }
  }
  return pairs;
}

json to_json(const CopyMetrics& m) {
  return {{"coverage", m.coverage},
          {"density", m.density},
          {"answer_len", m.answer_len},
          {"degenerate", m.degenerate}};
}

json to_json(const ScoreCard& card) {
  json scores = json::object();
  for (const auto& [metric, value] : card.scores) {
    scores[std::string(to_string(metric))] = value ? json(*value) : json(nullptr);
  }
  json failed = json::array();
  for (auto m : card.failed_criteria) failed.push_back(std::string(to_string(m)));
  json j = {{"candidate_id", card.candidate_id},
            {"scores", std::move(scores)},
            {"passed", card.passed},
            {"failed_criteria", std::move(failed)}};
  if (!card.errors.empty()) {
    json errors = json::object();
    for (const auto& [metric, msg] : card.errors) errors[std::string(to_string(metric))] = msg;
    j["errors"] = std::move(errors);
  }
  return j;
}

namespace {

ScoreCard scorecard_from_json(const json& j) {
  ScoreCard card;
  card.candidate_id = j.value("candidate_id", "");
  for (const auto& [key, value] : j.at("scores").items()) {
    if (auto m = metric_from_string(key)) {
      card.scores[*m] = value.is_null() ? std::nullopt : std::optional<double>(value.get<double>());
    }
  }
  card.passed = j.value("passed", false);
  for (const auto& f : j.value("failed_criteria", json::array())) {
    if (auto m = metric_from_string(f.get<std::string>())) card.failed_criteria.push_back(*m);
  }
  if (j.contains("errors")) {
    for (const auto& [key, value] : j["errors"].items()) {
      if (auto m = metric_from_string(key)) card.errors[*m] = value.get<std::string>();
    }
  }
  return card;
}

}  // namespace

json to_json(const Candidate& cand) {
  json j = {{"candidate_id", cand.candidate_id},
            {"pair_id", cand.pair_id},
            {"method", std::string(to_string(cand.method))},
            {"text", cand.text},
            {"metrics", to_json(cand.metrics)},
            {"copy_score", cand.copy_score},
            {"status", std::string(to_string(cand.status))}};
  if (cand.scorecard) j["scorecard"] = to_json(*cand.scorecard);
  if (cand.elo) j["elo"] = *cand.elo;
  if (!cand.failure.empty()) j["failure"] = cand.failure;
  if (!cand.flags.empty()) j["flags"] = cand.flags;
  return j;
}

Candidate candidate_from_json(const json& j) {
  try {
    Candidate c;
    c.pair_id = j.value("pair_id", "");
    const std::string method = j.value("method", "base");
    const auto m = method_from_string(method);
    if (!m) throw Error(ErrorKind::kFormat, "unknown candidate method: " + method);
    c.method = *m;
    c.candidate_id = j.contains("candidate_id") ? j["candidate_id"].get<std::string>()
                                                : Candidate::make_id(c.pair_id, c.method);
    c.text = j.at("text").get<std::string>();
    if (j.contains("metrics")) {
      const auto& mj = j["metrics"];
      c.metrics.coverage = mj.value("coverage", 0.0);
      c.metrics.density = mj.value("density", 0.0);
      c.metrics.answer_len = mj.value("answer_len", std::size_t{0});
      c.metrics.degenerate = mj.value("degenerate", false);
    }
    c.copy_score = j.value("copy_score", 0.0);
    if (j.contains("status")) {
      const auto s = status_from_string(j["status"].get<std::string>());
      if (!s) throw Error(ErrorKind::kFormat, "unknown candidate status");
      c.status = *s;
    }
    if (j.contains("scorecard")) c.scorecard = scorecard_from_json(j["scorecard"]);
    if (j.contains("elo") && !j["elo"].is_null()) c.elo = j["elo"].get<double>();
    c.failure = j.value("failure", "");
    c.flags = j.value("flags", std::vector<std::string>{});
    return c;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kFormat, std::string("malformed candidate record: ") + e.what());
  }
}

json to_json(const PreferencePair& p) {
  return {{"prompt", p.prompt},
          {"chosen", p.chosen},
          {"rejected", p.rejected},
          {"pair_id", p.pair_id},
          {"chosen_method", std::string(to_string(p.chosen_method))},
          {"rejected_method", std::string(to_string(p.rejected_method))},
          {"stamped", p.stamped},
          {"rejected_stamped", p.rejected_stamped}};
}

PreferencePair preference_pair_from_json(const json& j) {
  try {
    PreferencePair p;
    p.prompt = j.at("prompt").get<std::string>();
    p.chosen = j.at("chosen").get<std::string>();
    p.rejected = j.at("rejected").get<std::string>();
    p.pair_id = j.at("pair_id").get<std::string>();
    const auto cm = method_from_string(j.at("chosen_method").get<std::string>());
    const auto rm = method_from_string(j.at("rejected_method").get<std::string>());
    if (!cm || !rm) throw Error(ErrorKind::kFormat, "unknown method in preference pair");
    p.chosen_method = *cm;
    p.rejected_method = *rm;
    p.stamped = j.at("stamped").get<bool>();
    p.rejected_stamped = j.value("rejected_stamped", false);
    return p;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kFormat, std::string("malformed preference pair: ") + e.what());
  }
}

}  // namespace copypaste
