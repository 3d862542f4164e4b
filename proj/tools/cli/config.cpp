#include "config.hpp"

#include <fstream>
#include <sstream>

#include <toml.hpp>

#include "copypaste/error.hpp"
#include "copypaste/http_backend.hpp"
#include "copypaste/mock_backend.hpp"

namespace copypaste::cli {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorKind::kConfig, what); }

template <typename T>
T get_or(const toml::node_view<const toml::node>& node, T fallback, const std::string& key) {
  if (!node) return fallback;
  if constexpr (std::is_same_v<T, double>) {
    if (auto v = node.value<double>()) return *v;
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (auto v = node.value<std::string>()) return *v;
  } else if constexpr (std::is_same_v<T, bool>) {
    if (auto v = node.value<bool>()) return *v;
  } else {
    if (auto v = node.value<std::int64_t>()) {
      if (*v < 0) config_error(key + " must be non-negative");
      return static_cast<T>(*v);
    }
  }
  config_error("wrong type for " + key);
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

JudgeDimension dimension_from(const std::string& s) {
  if (s == "twist") return JudgeDimension::kTwist;
  if (s == "causal") return JudgeDimension::kCausal;
  config_error("unknown judge dimension: " + s);
}

FilterCriterion criterion_from(const toml::table& t) {
  FilterCriterion c;
  const auto metric = t["metric"].value<std::string>();
  if (!metric) config_error("[[filter]] entry needs a metric");
  const auto m = metric_from_string(*metric);
  if (!m) config_error("unknown filter metric: " + *metric);
  c.metric = *m;
  const auto threshold = t["threshold"].value<double>();
  if (!threshold) config_error("[[filter]] " + *metric + " needs a numeric threshold");
  c.threshold = *threshold;
  const std::string dir =
      t["direction"].value_or(std::string(*m == MetricId::kFluencyPpl ? "at_most" : "at_least"));
  if (dir == "at_least") {
    c.direction = Direction::kAtLeast;
  } else if (dir == "at_most") {
    c.direction = Direction::kAtMost;
  } else {
    config_error("unknown filter direction: " + dir);
  }
  const std::string policy = t["on_error"].value_or(std::string("fail_closed"));
  if (policy == "fail_closed") {
    c.on_error = ErrorPolicy::kFailClosed;
  } else if (policy == "fail_open") {
    c.on_error = ErrorPolicy::kFailOpen;
  } else {
    config_error("unknown on_error policy: " + policy);
  }
  try {
    c.validate();
  } catch (const Error& e) {
    config_error(e.what());
  }
  return c;
}

}  // namespace

std::vector<FilterCriterion> default_config_criteria() {
  auto out = default_criteria();
  std::erase_if(out, [](const FilterCriterion& c) { return c.metric == MetricId::kFluencyPpl; });
  return out;
}

PipelineConfig parse_config(const std::string& text, const fs::path& base_dir) {
  toml::table root;
  try {
    root = toml::parse(text);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << "config parse error at line " << e.source().begin.line << ": " << e.description();
    config_error(msg.str());
  }
  const toml::node_view<const toml::node> doc{static_cast<const toml::node&>(root)};

  PipelineConfig cfg;
  const std::string kind = get_or<std::string>(doc["backend"]["kind"], "http", "backend.kind");
  if (kind == "http") {
    cfg.endpoint.kind = BackendKind::kHttp;
  } else if (kind == "mock") {
    cfg.endpoint.kind = BackendKind::kMock;
  } else {
    config_error("backend.kind must be http or mock, got " + kind);
  }
  cfg.endpoint.base_url = get_or<std::string>(doc["backend"]["base_url"], "", "backend.base_url");
  cfg.endpoint.timeout_s = get_or<int>(doc["backend"]["timeout_s"], 120, "backend.timeout_s");
  if (const auto script = doc["backend"]["script"].value<std::string>()) {
    cfg.endpoint.mock_script = resolve(base_dir, *script);
  }

  cfg.generator_model = get_or(doc["models"]["generator"], cfg.generator_model, "models.generator");
  cfg.judge_model = get_or(doc["models"]["judge"], cfg.judge_model, "models.judge");
  cfg.embedding_model = get_or(doc["models"]["embedding"], cfg.embedding_model, "models.embedding");

  auto& cs = cfg.copy_score;
  cs.alpha = get_or(doc["copy_score"]["alpha"], cs.alpha, "copy_score.alpha");
  cs.beta = get_or(doc["copy_score"]["beta"], cs.beta, "copy_score.beta");
  cs.gamma = get_or(doc["copy_score"]["gamma"], cs.gamma, "copy_score.gamma");
  cs.epsilon_cap = get_or(doc["copy_score"]["epsilon"], cs.epsilon_cap, "copy_score.epsilon");
  cs.threshold = get_or(doc["copy_score"]["threshold"], cs.threshold, "copy_score.threshold");

  cfg.t_max = get_or(doc["refine"]["t_max"], cfg.t_max, "refine.t_max");
  cfg.temperature = get_or(doc["refine"]["temperature"], cfg.temperature, "refine.temperature");

  cfg.elo.k = get_or(doc["elo"]["k"], cfg.elo.k, "elo.k");
  cfg.elo.initial = get_or(doc["elo"]["initial"], cfg.elo.initial, "elo.initial");
  cfg.elo.passes = get_or(doc["elo"]["passes"], cfg.elo.passes, "elo.passes");
  if (const auto* dims = doc["elo"]["dimensions"].as_array()) {
    cfg.dimensions.clear();
    for (const auto& d : *dims) {
      const auto s = d.value<std::string>();
      if (!s) config_error("elo.dimensions must be strings");
      cfg.dimensions.push_back(dimension_from(*s));
    }
  }

  if (const auto* filters = doc["filter"].as_array()) {
    cfg.criteria.clear();
    for (const auto& f : *filters) {
      const auto* t = f.as_table();
      if (!t) config_error("[[filter]] entries must be tables");
      cfg.criteria.push_back(criterion_from(*t));
    }
  }

  auto& sc = cfg.scorers;
  sc.faith_doc = get_or(doc["scorers"]["faith_doc"], sc.faith_doc, "scorers.faith_doc");
  sc.faith_sent = get_or(doc["scorers"]["faith_sent"], sc.faith_sent, "scorers.faith_sent");
  sc.fluency = get_or(doc["scorers"]["fluency"], sc.fluency, "scorers.fluency");
  const std::string agg =
      get_or<std::string>(doc["scorers"]["sentence_aggregate"], "mean", "scorers.sentence_aggregate");
  if (agg == "mean") {
    sc.sentence_aggregate = SentenceAggregate::kMean;
  } else if (agg == "min") {
    sc.sentence_aggregate = SentenceAggregate::kMin;
  } else {
    config_error("scorers.sentence_aggregate must be mean or min");
  }

  cfg.concurrency = get_or(doc["run"]["concurrency"], cfg.concurrency, "run.concurrency");
  if (const auto dir = doc["run"]["cache_dir"].value<std::string>()) {
    cfg.cache_dir = resolve(base_dir, *dir);
  }
  if (const auto dir = doc["run"]["templates_dir"].value<std::string>()) {
    cfg.templates_dir = resolve(base_dir, *dir);
  }
  cfg.validate();
  return cfg;
}

PipelineConfig load_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot read config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path.parent_path());
}

void PipelineConfig::validate() const {
  try {
    copy_score.validate();
    for (const auto& c : criteria) c.validate();
  } catch (const Error& e) {
    config_error(e.what());
  }
  if (t_max < 1) config_error("refine.t_max must be >= 1");
  if (temperature < 0.0) config_error("refine.temperature must be >= 0");
  if (elo.k <= 0.0) config_error("elo.k must be positive");
  if (elo.passes < 1) config_error("elo.passes must be >= 1");
  if (dimensions.empty()) config_error("elo.dimensions must not be empty");
  if (concurrency < 1) config_error("run.concurrency must be >= 1");
  if (endpoint.timeout_s < 1) config_error("backend.timeout_s must be >= 1");
  if (endpoint.kind == BackendKind::kMock) {
    if (endpoint.mock_script.empty()) config_error("mock backend needs backend.script");
    if (!fs::is_regular_file(endpoint.mock_script)) {
      config_error("mock script not found: " + endpoint.mock_script.string());
    }
  }
  if (templates_dir && !fs::is_directory(*templates_dir)) {
    config_error("templates directory not found: " + templates_dir->string());
  }
  if (cache_dir && fs::exists(*cache_dir) && !fs::is_directory(*cache_dir)) {
    config_error("cache_dir is not a directory: " + cache_dir->string());
  }
  for (const auto* spec : {&scorers.faith_doc, &scorers.faith_sent, &scorers.fluency}) {
    if (!spec->empty()) make_scorer(*spec);
  }
  for (const auto& c : criteria) {
    const std::string* spec = c.metric == MetricId::kFaithDoc     ? &scorers.faith_doc
                              : c.metric == MetricId::kFaithSent  ? &scorers.faith_sent
                              : c.metric == MetricId::kFluencyPpl ? &scorers.fluency
                                                                  : nullptr;
    if (spec && spec->empty()) {
      config_error("filter on " + std::string(to_string(c.metric)) + " needs scorers." +
                   std::string(c.metric == MetricId::kFluencyPpl ? "fluency"
                                                                 : to_string(c.metric)));
    }
  }
}

nlohmann::json PipelineConfig::to_json() const {
  nlohmann::json filters = nlohmann::json::array();
  for (const auto& c : criteria) {
    filters.push_back({{"metric", std::string(to_string(c.metric))},
                       {"threshold", c.threshold},
                       {"direction", c.direction == Direction::kAtLeast ? "at_least" : "at_most"},
                       {"on_error", c.on_error == ErrorPolicy::kFailClosed ? "fail_closed"
                                                                            : "fail_open"}});
  }
  nlohmann::json dims = nlohmann::json::array();
  for (auto d : dimensions) dims.push_back(std::string(to_string(d)));
  return {
      {"backend",
       {{"kind", endpoint.kind == BackendKind::kMock ? "mock" : "http"},
        {"base_url", endpoint.base_url},
        {"script", endpoint.mock_script.string()},
        {"timeout_s", endpoint.timeout_s}}},
      {"models",
       {{"generator", generator_model}, {"judge", judge_model}, {"embedding", embedding_model}}},
      {"copy_score",
       {{"alpha", copy_score.alpha},
        {"beta", copy_score.beta},
        {"gamma", copy_score.gamma},
        {"epsilon", copy_score.epsilon_cap},
        {"threshold", copy_score.threshold}}},
      {"refine", {{"t_max", t_max}, {"temperature", temperature}}},
      {"elo", {{"k", elo.k}, {"initial", elo.initial}, {"passes", elo.passes}, {"dimensions", dims}}},
      {"filter", filters},
      {"scorers",
       {{"faith_doc", scorers.faith_doc},
        {"faith_sent", scorers.faith_sent},
        {"fluency", scorers.fluency},
        {"sentence_aggregate",
         scorers.sentence_aggregate == SentenceAggregate::kMean ? "mean" : "min"}}},
      {"run",
       {{"concurrency", concurrency},
        {"cache_dir", cache_dir ? cache_dir->string() : ""},
        {"templates_dir", templates_dir ? templates_dir->string() : ""}}},
  };
}

PipelineSettings PipelineConfig::settings() const {
  PipelineSettings s;
  s.generation.score = copy_score;
  s.generation.t_max = t_max;
  s.generation.temperature = temperature;
  s.criteria = criteria;
  s.elo = elo;
  s.dimensions = dimensions;
  s.concurrency = concurrency;
  return s;
}

std::shared_ptr<llm::Backend> make_backend(const EndpointConfig& endpoint) {
  if (endpoint.kind == BackendKind::kMock) {
    std::ifstream in(endpoint.mock_script, std::ios::binary);
    if (!in) throw Error(ErrorKind::kIo, "cannot read mock script " + endpoint.mock_script.string());
    nlohmann::json script;
    try {
      script = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      config_error("mock script " + endpoint.mock_script.string() + ": " + e.what());
    }
    return llm::make_rule_backend(script);
  }
  auto opts = llm::HttpBackendOptions::from_env();
  if (!endpoint.base_url.empty()) opts.base_url = endpoint.base_url;
  opts.timeout = std::chrono::seconds(endpoint.timeout_s);
  return std::make_shared<llm::HttpBackend>(opts);
}

std::shared_ptr<Scorer> make_scorer(const std::string& spec) {
  if (spec == "lexical_overlap") return std::make_shared<LexicalOverlapScorer>();
  if (spec.rfind("constant:", 0) == 0) {
    try {
      std::size_t used = 0;
      const std::string num = spec.substr(9);
      const double v = std::stod(num, &used);
      if (used != num.size()) config_error("bad constant scorer: " + spec);
      return std::make_shared<ConstantScorer>(v);
    } catch (const std::logic_error&) {
      config_error("bad constant scorer: " + spec);
    }
  }
  if (spec.rfind("http://", 0) == 0 || spec.rfind("https://", 0) == 0) {
    return std::make_shared<HttpScorer>(spec, false);
  }
  config_error("unknown scorer spec: " + spec);
}

ScorerSet make_scorers(const ScorerSpec& spec) {
  ScorerSet set;
  if (!spec.faith_doc.empty()) set.faith_doc = make_scorer(spec.faith_doc);
  if (!spec.faith_sent.empty()) set.faith_sent = make_scorer(spec.faith_sent);
  if (!spec.fluency.empty()) {
    // Fluency services take the bare text.
    if (spec.fluency.rfind("http", 0) == 0) {
      set.fluency = std::make_shared<HttpScorer>(spec.fluency, true);
    } else {
      set.fluency = make_scorer(spec.fluency);
    }
  }
  set.sentence_aggregate = spec.sentence_aggregate;
  return set;
}

}  // namespace copypaste::cli
