#include "commands.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "config.hpp"
#include "copypaste/capture.hpp"
#include "copypaste/error.hpp"
#include "copypaste/evalkit.hpp"
#include "copypaste/fragments.hpp"
#include "copypaste/judge.hpp"
#include "copypaste/metrics.hpp"
#include "copypaste/parallel.hpp"
#include "copypaste/prefbuild.hpp"
#include "copypaste/promptgen.hpp"
#include "copypaste/serialization.hpp"
#include "copypaste/text_util.hpp"
#include "copypaste/trace.hpp"

namespace copypaste::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string fmt6(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

// Destination of "-" outputs; run() points it at its `out` stream.
std::ostream* g_stdout = &std::cout;

/// Output file that only appears on disk once fully written.
class OutputFile {
 public:
  explicit OutputFile(fs::path path) : path_(std::move(path)) {
    if (path_ == "-") return;
    tmp_ = path_;
    tmp_ += ".tmp";
    file_.open(tmp_, std::ios::binary | std::ios::trunc);
    if (!file_) throw Error(ErrorKind::kIo, "cannot write " + path_.string());
  }
  std::ostream& stream() { return path_ == "-" ? *g_stdout : file_; }
  void commit() {
    if (path_ == "-") {
      g_stdout->flush();
      return;
    }
    file_.close();
    if (!file_) throw Error(ErrorKind::kIo, "failed writing " + path_.string());
    fs::rename(tmp_, path_);
  }
  ~OutputFile() {
    if (file_.is_open()) {
      file_.close();
      std::error_code ec;
      fs::remove(tmp_, ec);
    }
  }

 private:
  fs::path path_;
  fs::path tmp_;
  std::ofstream file_;
};

struct CommonOptions {
  std::string config;
  std::string manifest;
  std::optional<std::size_t> concurrency;
  std::string cache_dir;
  std::string templates_dir;
};

/// State shared by one subcommand run: resolved config, service objects and
/// the manifest being assembled.
class Run {
 public:
  Run(std::string command, const CommonOptions& common) : command_(std::move(command)) {
    started_ = utc_now();
    if (!common.config.empty()) {
      config_ = load_config(common.config);
      add_input(common.config);
    }
    if (common.concurrency) config_.concurrency = *common.concurrency;
    if (!common.cache_dir.empty()) config_.cache_dir = fs::path(common.cache_dir);
    if (!common.templates_dir.empty()) config_.templates_dir = fs::path(common.templates_dir);
    config_.validate();
    manifest_path_ = common.manifest;
    templates_ = config_.templates_dir ? TemplateSet::from_directory(*config_.templates_dir)
                                       : TemplateSet();
  }

  const PipelineConfig& config() const { return config_; }
  const TemplateSet& templates() const { return templates_; }

  void add_input(const fs::path& p) {
    inputs_.push_back({{"path", p.string()}, {"sha256", sha256_hex(read_file(p))}});
  }
  void add_output(const fs::path& p) {
    outputs_.push_back(p.string());
    if (manifest_path_.empty() && p != "-") manifest_path_ = p.string() + ".manifest.json";
  }
  json& counts() { return counts_; }
  void skip(const std::string& id, const std::string& reason) {
    skipped_.push_back({{"id", id}, {"reason", reason}});
  }
  bool any_skipped() const { return !skipped_.empty(); }

  llm::Client& client(const std::string& role) {
    if (!backend_) backend_ = make_backend(config_.endpoint);
    auto it = clients_.find(role);
    if (it != clients_.end()) return *it->second;
    llm::ClientOptions opts;
    opts.chat_model = role == "judge" ? config_.judge_model : config_.generator_model;
    opts.embedding_model = config_.embedding_model;
    opts.max_in_flight = config_.concurrency;
    opts.cache_dir = config_.cache_dir;
    auto c = std::make_unique<llm::Client>(backend_, opts);
    auto& ref = *c;
    clients_.emplace(role, std::move(c));
    return ref;
  }

  int finish() {
    const int code = any_skipped() ? kExitPartial : kExitOk;
    if (manifest_path_.empty()) return code;
    json stats = json::object();
    for (const auto& [role, c] : clients_) {
      const auto s = c->stats();
      stats[role] = {{"backend_calls", s.backend_calls},
                     {"cache_hits", s.cache_hits},
                     {"retries", s.retries}};
    }
    const json cfg = config_.to_json();
    const json manifest = {{"command", command_},
                           {"version", kVersion},
                           {"started_at", started_},
                           {"finished_at", utc_now()},
                           {"config_hash", sha256_hex(cfg.dump())},
                           {"config", cfg},
                           {"inputs", inputs_},
                           {"outputs", outputs_},
                           {"counts", counts_},
                           {"skipped", skipped_},
                           {"client_stats", stats},
                           {"exit_code", code}};
    OutputFile out(manifest_path_);
    out.stream() << manifest.dump(2) << '\n';
    out.commit();
    return code;
  }

 private:
  std::string command_;
  std::string started_;
  PipelineConfig config_;
  TemplateSet templates_;
  std::string manifest_path_;
  json inputs_ = json::array();
  json outputs_ = json::array();
  json counts_ = json::object();
  json skipped_ = json::array();
  std::shared_ptr<llm::Backend> backend_;
  std::map<std::string, std::unique_ptr<llm::Client>> clients_;
};

std::map<std::string, QueryContextPair> pairs_by_id(const std::vector<QueryContextPair>& pairs) {
  std::map<std::string, QueryContextPair> out;
  for (const auto& p : pairs) out.emplace(p.id, p);
  return out;
}

// fragments ------------------------------------------------------------------

struct FragmentsArgs {
  std::string in;
  std::string context;
  std::string answer;
  std::string out = "-";
};

int cmd_fragments(const FragmentsArgs& a, const CommonOptions& common) {
  Run run("fragments", common);
  struct Record {
    std::string id;
    std::string context;
    std::string answer;
  };
  std::vector<Record> records;
  if (!a.in.empty()) {
    run.add_input(a.in);
    std::size_t n = 0;
    for (const auto& j : read_jsonl(a.in)) {
      ++n;
      try {
        Record r;
        r.id = j.contains("id") ? (j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump())
                                : std::to_string(n);
        r.context = j.at("context").get<std::string>();
        r.answer = j.contains("answer") ? j["answer"].get<std::string>() : j.at("text").get<std::string>();
        records.push_back(std::move(r));
      } catch (const json::exception& e) {
        throw Error(ErrorKind::kFormat, a.in + ": record " + std::to_string(n) + ": " + e.what());
      }
    }
  } else {
    if (a.context.empty() || a.answer.empty()) {
      throw Error(ErrorKind::kInvalidArgument, "fragments needs --in or both --context and --answer");
    }
    run.add_input(a.context);
    run.add_input(a.answer);
    records.push_back({"1", read_file(a.context), read_file(a.answer)});
  }

  OutputFile out(a.out);
  std::size_t total = 0;
  for (const auto& r : records) {
    const TokenSeq ctx = tokenize(r.context);
    const TokenSeq ans = tokenize(r.answer);
    const FragmentSet frags = detect_fragments(ctx, ans);
    for (const auto& f : frags.fragments) {
      const ByteSpan as = answer_bytes(ans, f);
      const ByteSpan cs = context_bytes(ctx, f);
      out.stream() << json{{"id", r.id},
                           {"answer_start", f.answer_start},
                           {"context_start", f.context_start},
                           {"length", f.length},
                           {"answer_span", {as.begin, as.end}},
                           {"context_span", {cs.begin, cs.end}},
                           {"text", r.answer.substr(as.begin, as.size())}}
                          .dump()
                   << '\n';
      ++total;
    }
  }
  out.commit();
  run.add_output(a.out);
  run.counts() = {{"records", records.size()}, {"fragments", total}};
  return run.finish();
}

// score ----------------------------------------------------------------------

struct ScoreArgs {
  std::string in;
  std::string pairs;
  std::string out;
  std::string format;
};

int cmd_score(const ScoreArgs& a, const CommonOptions& common) {
  Run run("score", common);
  run.add_input(a.in);
  std::map<std::string, QueryContextPair> by_id;
  if (!a.pairs.empty()) {
    run.add_input(a.pairs);
    by_id = pairs_by_id(read_pairs(a.pairs));
  }
  std::string format = a.format;
  if (format.empty()) format = fs::path(a.out).extension() == ".csv" ? "csv" : "jsonl";
  if (format != "csv" && format != "jsonl") {
    throw Error(ErrorKind::kInvalidArgument, "--format must be csv or jsonl");
  }

  const CopyScoreConfig& cfg = run.config().copy_score;
  OutputFile out(a.out);
  if (format == "csv") {
    out.stream() << "candidate_id,pair_id,method,answer_len,coverage,density,copy_score\n";
  }
  std::size_t n = 0;
  for (const auto& j : read_jsonl(a.in)) {
    ++n;
    Candidate c = candidate_from_json(j);
    std::string context;
    if (j.contains("context")) {
      context = j["context"].get<std::string>();
    } else if (auto it = by_id.find(c.pair_id); it != by_id.end()) {
      context = it->second.context;
    } else {
      throw Error(ErrorKind::kFormat, a.in + ": record " + std::to_string(n) +
                                          " has no context and no matching pair in --pairs");
    }
    const CopyMetrics m =
        answer_metrics(context, c.text, c.method == CandidateMethod::kCitations);
    const double sigma = copy_score(m, cfg);
    if (format == "csv") {
      out.stream() << csv_field(c.candidate_id) << ',' << csv_field(c.pair_id) << ','
                   << to_string(c.method) << ',' << m.answer_len << ',' << fmt6(m.coverage) << ','
                   << fmt6(m.density) << ',' << fmt6(sigma) << '\n';
    } else {
      out.stream() << json{{"candidate_id", c.candidate_id},
                           {"pair_id", c.pair_id},
                           {"method", std::string(to_string(c.method))},
                           {"answer_len", m.answer_len},
                           {"coverage", m.coverage},
                           {"density", m.density},
                           {"copy_score", sigma}}
                          .dump()
                   << '\n';
    }
  }
  out.commit();
  run.add_output(a.out);
  run.counts() = {{"candidates", n}};
  return run.finish();
}

// generate -------------------------------------------------------------------

struct GenerateArgs {
  std::string pairs;
  std::string out;
  std::vector<std::string> methods;
};

int cmd_generate(const GenerateArgs& a, const CommonOptions& common) {
  Run run("generate", common);
  run.add_input(a.pairs);
  const auto pairs = read_pairs(a.pairs);
  std::vector<CandidateMethod> methods;
  if (a.methods.empty()) {
    methods.assign(kAllMethods.begin(), kAllMethods.end());
  } else {
    for (const auto& s : a.methods) {
      const auto m = method_from_string(s);
      if (!m) throw Error(ErrorKind::kInvalidArgument, "unknown method: " + s);
      methods.push_back(*m);
    }
  }

  PromptGenerator generator(run.client("generator"), run.templates(), run.config().settings().generation);
  std::vector<Candidate> candidates(pairs.size() * methods.size());
  parallel_for(candidates.size(), run.config().concurrency, [&](std::size_t i) {
    candidates[i] = generator.generate_candidate(pairs[i / methods.size()], methods[i % methods.size()]);
  });

  OutputFile out(a.out);
  std::size_t failed = 0;
  for (const auto& c : candidates) {
    if (c.status == CandidateStatus::kGenFailed) {
      ++failed;
      run.skip(c.candidate_id, c.failure);
    }
    out.stream() << to_json(c).dump() << '\n';
  }
  out.commit();
  run.add_output(a.out);
  run.counts() = {{"pairs", pairs.size()}, {"candidates", candidates.size()}, {"gen_failed", failed}};
  return run.finish();
}

// rank -----------------------------------------------------------------------

struct RankArgs {
  std::string candidates;
  std::string pairs;
  std::string out;
};

int cmd_rank(const RankArgs& a, const CommonOptions& common) {
  Run run("rank", common);
  run.add_input(a.candidates);
  run.add_input(a.pairs);
  const auto by_id = pairs_by_id(read_pairs(a.pairs));

  std::vector<std::string> order;
  std::map<std::string, std::vector<Candidate>> groups;
  for (const auto& j : read_jsonl(a.candidates)) {
    Candidate c = candidate_from_json(j);
    if (c.status != CandidateStatus::kOk) continue;
    if (!groups.count(c.pair_id)) order.push_back(c.pair_id);
    groups[c.pair_id].push_back(std::move(c));
  }

  Judge judge(run.client("judge"), run.templates());
  OutputFile out(a.out);
  std::size_t ranked = 0;
  std::size_t matches = 0;
  for (const auto& pair_id : order) {
    const auto& group = groups[pair_id];
    const auto pit = by_id.find(pair_id);
    if (pit == by_id.end()) {
      run.skip(pair_id, "no pair record with this id");
      continue;
    }
    if (group.size() < 2) {
      run.skip(pair_id, "fewer than two candidates");
      continue;
    }
    TournamentResult result;
    try {
      result = judge.run_tournament(group, pit->second.context, run.config().dimensions,
                                    run.config().elo);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kJudgeFormat) throw;
      run.skip(pair_id, std::string("tournament failed: ") + e.what());
      continue;
    }
    matches += result.matches.size();
    for (const auto& agg : result.aggregate) {
      json dims = json::object();
      for (const auto& [dim, ratings] : result.per_dimension) {
        for (const auto& r : ratings) {
          if (r.candidate_id == agg.candidate_id) dims[std::string(to_string(dim))] = r.rating;
        }
      }
      out.stream() << json{{"pair_id", pair_id},
                           {"candidate_id", agg.candidate_id},
                           {"rating", agg.rating},
                           {"ratings", dims},
                           {"games", agg.games}}
                          .dump()
                   << '\n';
    }
    if (result.errored_matches > 0) {
      run.counts()["errored_matches"] =
          run.counts().value("errored_matches", std::size_t{0}) + result.errored_matches;
    }
    ++ranked;
  }
  out.commit();
  run.add_output(a.out);
  run.counts()["pairs_ranked"] = ranked;
  run.counts()["matches"] = matches;
  return run.finish();
}

// build-prefs ----------------------------------------------------------------

struct BuildArgs {
  std::string pairs;
  std::string out;
  std::string candidates_out;
};

int cmd_build_prefs(const BuildArgs& a, const CommonOptions& common) {
  Run run("build-prefs", common);
  run.add_input(a.pairs);
  const auto pairs = read_pairs(a.pairs);
  const PipelineSettings settings = run.config().settings();
  PipelineServices services{run.client("generator"), run.client("judge"), run.client("generator"),
                            run.templates(), make_scorers(run.config().scorers)};

  std::vector<PreferencePair> dataset;
  std::vector<Candidate> all_candidates;
  std::size_t survivors = 0;
  json flags = json::object();
  std::vector<SampleResult> samples(pairs.size());
  parallel_for(pairs.size(), settings.concurrency,
               [&](std::size_t i) { samples[i] = build_sample(pairs[i], settings, services); });
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& pair = pairs[i];
    SampleResult& r = samples[i];
    survivors += r.survivors();
    if (r.skipped) run.skip(pair.id, r.skip_reason);
    if (!r.flags.empty()) flags[pair.id] = r.flags;
    dataset.insert(dataset.end(), r.pairs.begin(), r.pairs.end());
    for (auto& c : r.candidates) all_candidates.push_back(std::move(c));
  }

  {
    OutputFile out(a.out);
    for (const auto& p : dataset) out.stream() << to_json(p).dump() << '\n';
    out.commit();
    run.add_output(a.out);
  }
  if (!a.candidates_out.empty()) {
    OutputFile out(a.candidates_out);
    for (const auto& c : all_candidates) out.stream() << to_json(c).dump() << '\n';
    out.commit();
    run.add_output(a.candidates_out);
  }
  run.counts() = {{"samples", pairs.size()},
                  {"candidates", all_candidates.size()},
                  {"survivors", survivors},
                  {"preference_pairs", dataset.size()},
                  {"flags", flags}};
  return run.finish();
}

// capture --------------------------------------------------------------------

struct CaptureArgs {
  std::string ctx_trace;
  std::string para_trace;
  std::string context;
  std::string batch;
  std::string out;
  std::string power_csv;
  std::string hidden_out;
  std::string stoplist;
  std::size_t k = 3;
  std::size_t min_common = kDefaultMinCommonRun;
  std::size_t max_len = 0;
  bool log_input = false;
};

json to_json(const CaptureResult& r) {
  return {{"query_id", r.query_id},
          {"p_ctx", r.p_ctx},
          {"p_para", r.p_para},
          {"h_ctx", r.h_ctx},
          {"h_para", r.h_para},
          {"t_ctx", r.t_ctx},
          {"t_para", r.t_para},
          {"positions_ctx", r.positions_ctx},
          {"positions_para", r.positions_para}};
}

int cmd_capture(const CaptureArgs& a, const CommonOptions& common) {
  Run run("capture", common);
  struct Job {
    fs::path ctx_trace;
    fs::path para_trace;
    std::string context;
  };
  std::vector<Job> jobs;
  if (!a.batch.empty()) {
    run.add_input(a.batch);
    const fs::path base = fs::path(a.batch).parent_path();
    auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };
    for (const auto& j : read_jsonl(a.batch)) {
      try {
        Job job{resolve(j.at("ctx_trace").get<std::string>()),
                resolve(j.at("para_trace").get<std::string>()), ""};
        if (j.contains("context")) {
          job.context = j["context"].get<std::string>();
        } else {
          const fs::path cf = resolve(j.at("context_file").get<std::string>());
          run.add_input(cf);
          job.context = read_file(cf);
        }
        jobs.push_back(std::move(job));
      } catch (const json::exception& e) {
        throw Error(ErrorKind::kFormat, a.batch + ": " + e.what());
      }
    }
  } else {
    if (a.ctx_trace.empty() || a.para_trace.empty() || a.context.empty()) {
      throw Error(ErrorKind::kInvalidArgument,
                  "capture needs --batch or all of --ctx-trace, --para-trace, --context");
    }
    run.add_input(a.context);
    jobs.push_back({a.ctx_trace, a.para_trace, read_file(a.context)});
  }

  MeaninglessFilter filter;
  if (!a.stoplist.empty()) {
    run.add_input(a.stoplist);
    std::set<std::string> words;
    for (const auto& line : split_lines(read_file(a.stoplist))) {
      const std::string w = fold_case(trim(line));
      if (!w.empty() && w[0] != '#') words.insert(w);
    }
    filter = MeaninglessFilter(std::move(words));
  }
  const CaptureOptions opts{a.k, a.min_common};

  std::vector<CaptureResult> results;
  std::vector<GenerationTrace> ctx_traces;
  std::vector<fs::path> ctx_paths;
  for (const auto& job : jobs) {
    run.add_input(job.ctx_trace);
    run.add_input(job.para_trace);
    GenerationTrace ctx = read_trace(job.ctx_trace);
    const GenerationTrace para = read_trace(job.para_trace);
    results.push_back(capture(ctx, para, tokenize(job.context), opts, filter));
    ctx_traces.push_back(std::move(ctx));
    ctx_paths.push_back(job.ctx_trace);
  }

  std::size_t n_ctx = 0;
  std::size_t n_para = 0;
  {
    OutputFile out(a.out);
    for (const auto& r : results) {
      n_ctx += r.p_ctx.size();
      n_para += r.p_para.size();
      out.stream() << to_json(r).dump() << '\n';
    }
    out.commit();
    run.add_output(a.out);
  }
  if (!a.power_csv.empty()) {
    const auto rows = position_power_profile(
        results, a.max_len, a.log_input ? PowerInput::kLogProbability : PowerInput::kProbability);
    OutputFile out(a.power_csv);
    out.stream() << "position,ctx_power,para_power,n_ctx,n_para\n";
    for (const auto& row : rows) {
      char buf[128];
      std::snprintf(buf, sizeof buf, "%zu,%.12g,%.12g,%zu,%zu\n", row.position, row.ctx_power,
                    row.para_power, row.n_ctx, row.n_para);
      out.stream() << buf;
    }
    out.commit();
    run.add_output(a.power_csv);
  }
  if (!a.hidden_out.empty()) {
    OutputFile out(a.hidden_out);
    for (std::size_t i = 0; i < results.size(); ++i) {
      const fs::path sidecar = sidecar_path(ctx_paths[i]);
      const std::size_t dim = ctx_traces[i].hidden_dim;
      auto emit = [&](const char* kind, const std::vector<std::uint64_t>& refs,
                      const std::vector<std::string>& tokens,
                      const std::vector<std::size_t>& positions) {
        for (std::size_t t = 0; t < refs.size(); ++t) {
          out.stream() << json{{"query_id", results[i].query_id},
                               {"kind", kind},
                               {"token", tokens[t]},
                               {"position", positions[t]},
                               {"vector", read_hidden(sidecar, refs[t], dim)}}
                              .dump()
                       << '\n';
        }
      };
      emit("ctx", results[i].h_ctx, results[i].t_ctx, results[i].positions_ctx);
      emit("para", results[i].h_para, results[i].t_para, results[i].positions_para);
    }
    out.commit();
    run.add_output(a.hidden_out);
  }
  run.counts() = {{"samples", results.size()}, {"ctx_captures", n_ctx}, {"para_captures", n_para}};
  return run.finish();
}

// eval -----------------------------------------------------------------------

struct EvalArgs {
  std::string items;
  std::string mode = "both";
  std::string out;
  std::string summary;
};

int cmd_eval(const EvalArgs& a, const CommonOptions& common) {
  Run run("eval", common);
  run.add_input(a.items);
  const auto items = read_eval_items(a.items);
  const bool want_hit = a.mode == "hit" || a.mode == "both";
  const bool want_acc = a.mode == "accuracy" || a.mode == "both";

  Evaluator evaluator(run.client("generator"), run.templates());
  std::vector<std::optional<EvalOutcome>> slots(items.size());
  parallel_for(items.size(), run.config().concurrency, [&](std::size_t i) {
    const EvalItem& item = items[i];
    std::optional<EvalOutcome> merged;
    if (want_hit && item.gold_answer_text) merged = evaluator.eval_hit(item);
    if (want_acc && !item.options.empty() && item.gold_label) {
      EvalOutcome acc = evaluator.eval_accuracy(item);
      if (merged) {
        merged->chosen_label = acc.chosen_label;
        merged->correct = acc.correct;
        merged->raw_response += "\n---\n" + acc.raw_response;
        merged->flags.insert(merged->flags.end(), acc.flags.begin(), acc.flags.end());
      } else {
        merged = std::move(acc);
      }
    }
    slots[i] = std::move(merged);
  });

  std::vector<EvalOutcome> outcomes;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (slots[i]) {
      outcomes.push_back(std::move(*slots[i]));
    } else {
      run.skip(items[i].pair.id, "item lacks the gold fields for mode " + a.mode);
    }
  }
  {
    OutputFile out(a.out);
    for (const auto& o : outcomes) out.stream() << to_json(o).dump() << '\n';
    out.commit();
    run.add_output(a.out);
  }
  const EvalReport report = aggregate(outcomes);
  if (!a.summary.empty()) {
    OutputFile out(a.summary);
    out.stream() << report_csv(report);
    out.commit();
    run.add_output(a.summary);
  }
  auto opt = [](std::optional<double> v) { return v ? json(*v) : json(nullptr); };
  run.counts() = {{"items", items.size()},
                  {"evaluated", outcomes.size()},
                  {"hit_rate", opt(report.hit_rate())},
                  {"accuracy", opt(report.accuracy())},
                  {"parse_failures", report.parse_failures}};
  return run.finish();
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"CopyPaste faithfulness pipeline: copy metrics, candidate generation, "
               "judging, preference data and knowledge capture",
               "copypaste"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  g_stdout = &out;

  CommonOptions common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config, "Pipeline TOML config")->check(CLI::ExistingFile);
    sub->add_option("--manifest", common.manifest, "Run manifest path (default <out>.manifest.json)");
    sub->add_option("--concurrency", common.concurrency, "Concurrent backend requests")
        ->check(CLI::PositiveNumber);
    sub->add_option("--cache-dir", common.cache_dir, "Response cache directory");
    sub->add_option("--templates", common.templates_dir, "Prompt template directory");
  };

  FragmentsArgs fa;
  auto* frag = app.add_subcommand("fragments", "Copy fragments between answers and contexts");
  frag->add_option("--in", fa.in, "JSONL of {id?, context, answer}");
  frag->add_option("--context", fa.context, "Context text file");
  frag->add_option("--answer", fa.answer, "Answer text file");
  frag->add_option("--out", fa.out, "Fragments JSONL ('-' for stdout)");
  add_common(frag);

  ScoreArgs sa;
  auto* score = app.add_subcommand("score", "Copy coverage, density and copy score per candidate");
  score->add_option("--in", sa.in, "Candidates JSONL")->required();
  score->add_option("--pairs", sa.pairs, "Pairs JSONL supplying contexts by pair_id");
  score->add_option("--out", sa.out, "Output .csv or .jsonl")->required();
  score->add_option("--format", sa.format, "csv or jsonl (default from extension)");
  add_common(score);

  GenerateArgs ga;
  auto* gen = app.add_subcommand("generate", "Generate candidate responses");
  gen->add_option("--pairs", ga.pairs, "Pairs JSONL")->required();
  gen->add_option("--out", ga.out, "Candidates JSONL")->required();
  gen->add_option("--methods", ga.methods, "Subset of methods")->delimiter(',');
  add_common(gen);

  RankArgs ra;
  auto* rank = app.add_subcommand("rank", "Elo tournament over candidates of each pair");
  rank->add_option("--candidates", ra.candidates, "Candidates JSONL")->required();
  rank->add_option("--pairs", ra.pairs, "Pairs JSONL")->required();
  rank->add_option("--out", ra.out, "Ratings JSONL")->required();
  add_common(rank);

  BuildArgs ba;
  auto* build = app.add_subcommand("build-prefs", "Build a preference-pair dataset");
  build->add_option("--pairs", ba.pairs, "Pairs JSONL")->required();
  build->add_option("--out", ba.out, "Dataset JSONL")->required();
  build->add_option("--candidates-out", ba.candidates_out, "All candidates with scores");
  add_common(build);

  CaptureArgs ca;
  auto* cap = app.add_subcommand("capture", "Context vs parametric knowledge capture over traces");
  cap->add_option("--ctx-trace", ca.ctx_trace, "With-context trace");
  cap->add_option("--para-trace", ca.para_trace, "Context-free trace");
  cap->add_option("--context", ca.context, "Context text file");
  cap->add_option("--batch", ca.batch, "JSONL of {ctx_trace, para_trace, context | context_file}");
  cap->add_option("--out", ca.out, "Capture results JSONL")->required();
  cap->add_option("--power-csv", ca.power_csv, "Position power profile CSV");
  cap->add_option("--hidden-out", ca.hidden_out, "Captured hidden vectors JSONL");
  cap->add_option("--stoplist", ca.stoplist, "Stoplist file, one word per line");
  cap->add_option("--k", ca.k, "Candidates scanned per step")->check(CLI::PositiveNumber);
  cap->add_option("--min-common", ca.min_common, "Shortest common run")->check(CLI::PositiveNumber);
  cap->add_option("--max-len", ca.max_len, "Profile length (0: longest capture)");
  cap->add_flag("--log-input", ca.log_input, "Profile log-probabilities instead of probabilities");
  add_common(cap);

  EvalArgs ea;
  auto* ev = app.add_subcommand("eval", "Hit rate and accuracy evaluation");
  ev->add_option("--items", ea.items, "Eval items JSONL")->required();
  ev->add_option("--mode", ea.mode, "hit, accuracy or both")
      ->check(CLI::IsMember({"hit", "accuracy", "both"}));
  ev->add_option("--out", ea.out, "Outcomes JSONL")->required();
  ev->add_option("--summary", ea.summary, "Summary CSV");
  add_common(ev);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitFatal;
  }

  try {
    if (*frag) return cmd_fragments(fa, common);
    if (*score) return cmd_score(sa, common);
    if (*gen) return cmd_generate(ga, common);
    if (*rank) return cmd_rank(ra, common);
    if (*build) return cmd_build_prefs(ba, common);
    if (*cap) return cmd_capture(ca, common);
    if (*ev) return cmd_eval(ea, common);
  } catch (const Error& e) {
    err << "error [" << to_string(e.kind()) << "]: " << e.what() << '\n';
    return kExitFatal;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFatal;
  }
  return kExitFatal;
}

}  // namespace copypaste::cli
