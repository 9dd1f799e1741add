#pragma once

// Config-driven experiment execution, analysis orchestration, scoring,
// reporting, and deterministic replay. Seeds are pure functions of
// (master seed, condition, task, repetition), per-conversation outputs are
// written atomically, and execution order never affects file contents.

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "ideaforge/chat.hpp"
#include "ideaforge/conditions.hpp"
#include "ideaforge/corpus.hpp"
#include "ideaforge/embedding.hpp"
#include "ideaforge/embedding_http.hpp"
#include "ideaforge/protocol.hpp"
#include "ideaforge/stats.hpp"
#include "ideaforge/synthetic.hpp"
#include "ideaforge/trajectory.hpp"
#include "ideaforge/util.hpp"
#include "ideaforge/version.hpp"

namespace ideaforge::runner {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Configuration

struct EmbeddingSpec {
  std::string mode = "mock";  // mock | live
  std::string model_id = "mock-embed-16";
  size_t dim = 16;
  std::uint64_t mock_seed = 0;
  bool prefix_roles = false;  // embed "Agent N: ..." instead of raw content
  std::optional<std::string> cache_dir;
  std::optional<chat::EndpointConfig> endpoint;
};

struct RunConfig {
  std::string run_id = "run";
  std::string mode = "mock";  // mock | live
  std::uint64_t master_seed = 0;
  std::string output_dir = "out";
  int repetitions = 1;
  int parallelism = 1;
  std::vector<TaskPrompt> tasks;         // resolved task set
  std::vector<int> condition_selectors;  // empty = all rows
  std::string model_plan = "gpt-4.1";
  std::map<std::string, chat::EndpointConfig> endpoints;  // model -> endpoint
  EmbeddingSpec embedding;
  std::map<std::string, std::string> mock_scripts;  // model or "*" -> JSONL path
  std::vector<MatrixRow> matrix = builtin_condition_matrix();
};

inline chat::EndpointConfig endpoint_from_json(const json& j) {
  chat::EndpointConfig e;
  e.provider = j.value("provider", std::string("default"));
  e.base_url = j.value("base_url", std::string());
  e.path = j.value("path", e.path);
  if (j.contains("api_key")) e.api_key = j.at("api_key").get<std::string>();
  if (j.contains("wire_model")) e.wire_model = j.at("wire_model").get<std::string>();
  if (j.contains("reasoning_effort"))
    e.reasoning_effort = j.at("reasoning_effort").get<std::string>();
  e.max_attempts = j.value("max_attempts", e.max_attempts);
  e.backoff_base_ms = j.value("backoff_base_ms", e.backoff_base_ms);
  e.timeout_sec = j.value("timeout_sec", e.timeout_sec);
  return e;
}

inline RunConfig parse_run_config(const json& j) {
  RunConfig cfg;
  try {
    cfg.run_id = j.value("run_id", cfg.run_id);
    cfg.mode = j.value("mode", cfg.mode);
    if (cfg.mode != "mock" && cfg.mode != "live")
      throw ConfigError("mode must be 'mock' or 'live'");
    cfg.master_seed = j.value("master_seed", cfg.master_seed);
    cfg.output_dir = j.value("output_dir", cfg.output_dir);
    // live runs default to 10 repetitions per condition x task, mock to 1
    cfg.repetitions = j.value("repetitions", cfg.mode == "live" ? 10 : 1);
    if (cfg.repetitions < 1) throw ConfigError("repetitions must be >= 1");
    cfg.parallelism = j.value("parallelism", cfg.parallelism);
    if (cfg.parallelism < 1) throw ConfigError("parallelism must be >= 1");
    cfg.model_plan = j.value("model_plan", cfg.model_plan);

    if (!j.contains("tasks") || j.at("tasks") == "builtin") {
      cfg.tasks = prompts::builtin_tasks();
    } else {
      for (const auto& t : j.at("tasks")) {
        if (t.is_string()) {
          cfg.tasks.push_back(prompts::builtin_task(t.get<std::string>()));
        } else {
          TaskPrompt task;
          task.task_id = t.at("task_id").get<std::string>();
          task.premise = t.at("premise").get<std::string>();
          task.shared_instruction = t.value("shared_instruction", std::string());
          if (task.premise.empty()) throw ConfigError("task premise empty");
          cfg.tasks.push_back(std::move(task));
        }
      }
    }
    if (cfg.tasks.empty()) throw ConfigError("no tasks configured");
    {
      std::set<std::string> ids;
      for (const auto& t : cfg.tasks)
        if (!ids.insert(t.task_id).second)
          throw ConfigError("duplicate task id: " + t.task_id);
    }

    if (j.contains("conditions") && j.at("conditions") != "all")
      cfg.condition_selectors = j.at("conditions").get<std::vector<int>>();

    if (j.contains("endpoints"))
      for (auto it = j.at("endpoints").begin(); it != j.at("endpoints").end(); ++it)
        cfg.endpoints[it.key()] = endpoint_from_json(it.value());

    if (j.contains("embedding")) {
      const json& e = j.at("embedding");
      cfg.embedding.mode = e.value("mode", cfg.embedding.mode);
      cfg.embedding.model_id = e.value("model_id", cfg.embedding.model_id);
      cfg.embedding.dim = e.value("dim", cfg.embedding.dim);
      cfg.embedding.mock_seed = e.value("mock_seed", cfg.embedding.mock_seed);
      cfg.embedding.prefix_roles = e.value("prefix_roles", cfg.embedding.prefix_roles);
      if (e.contains("cache_dir"))
        cfg.embedding.cache_dir = e.at("cache_dir").get<std::string>();
      if (e.contains("endpoint"))
        cfg.embedding.endpoint = endpoint_from_json(e.at("endpoint"));
    }

    if (j.contains("mock_scripts"))
      for (auto it = j.at("mock_scripts").begin(); it != j.at("mock_scripts").end(); ++it)
        cfg.mock_scripts[it.key()] = it.value().get<std::string>();

    // Optional auditable override of the design matrix (same columns as the
    // shipped table).
    if (j.contains("condition_matrix")) {
      cfg.matrix.clear();
      for (const auto& r : j.at("condition_matrix")) {
        MatrixRow row;
        row.cond = r.at("cond").get<int>();
        row.agents = r.at("agents").get<int>();
        row.persona = r.at("persona").get<std::string>();
        row.generation = r.at("generation").get<std::string>();
        row.discussion = r.at("discussion").get<std::string>();
        row.pool = r.at("pool").get<std::string>();
        row.length = r.at("length").get<std::string>();
        row.order = r.at("order").get<std::string>();
        cfg.matrix.push_back(std::move(row));
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad run config: ") + e.what());
  }
  return cfg;
}

inline RunConfig load_run_config(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file: " + path.string());
  json j;
  try {
    j = json::parse(f);
  } catch (const json::parse_error& e) {
    throw ConfigError("config parse error in " + path.string() + ": " + e.what());
  }
  return parse_run_config(j);
}

// ---------------------------------------------------------------------------
// Small worker pool (order-independent by construction: every job's seed and
// output path depend only on the job's coordinates).

inline void parallel_for(size_t n, int workers,
                         const std::function<void(size_t)>& fn) {
  if (workers <= 1 || n <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::vector<std::thread> pool;
  const int count = std::min<int>(workers, static_cast<int>(n));
  std::mutex err_mu;
  std::exception_ptr first_error;
  for (int w = 0; w < count; ++w) {
    pool.emplace_back([&]() {
      for (;;) {
        const size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lk(err_mu);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

// ---------------------------------------------------------------------------
// Experiment execution

struct RunResult {
  RunManifest manifest;
  int completed = 0;
  int failures = 0;  // protocol failures + hard per-conversation errors
  int skipped = 0;   // resumed conversations already on disk
};

inline std::string make_conversation_id(const std::string& plan, int condition_id,
                                        const std::string& task_id, int rep) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "c%02d", condition_id);
  std::string id = plan + "-" + buf + "-" + task_id + "-r" + std::to_string(rep);
  return id;
}

inline void write_file_atomic(const fs::path& path, const std::string& content) {
  if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot write " + tmp.string());
    f << content;
  }
  fs::rename(tmp, path);
}

inline std::string now_iso8601() {
  std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

inline json manifest_to_json(const RunManifest& m) {
  json j;
  j["run_id"] = m.run_id;
  j["created_at"] = m.created_at;
  j["software_version"] = m.software_version;
  j["mode"] = m.mode;
  j["master_seed"] = m.master_seed;
  j["model_plan"] = m.model_plan;
  j["repetitions"] = m.repetitions;
  j["conditions"] = m.condition_ids;
  j["embedding_model_id"] = m.embedding_model_id;
  j["endpoints"] = m.endpoints.is_null() ? json::object() : m.endpoints;
  j["tasks"] = json::array();
  for (const auto& t : m.tasks)
    j["tasks"].push_back({{"task_id", t.task_id},
                          {"premise", t.premise},
                          {"shared_instruction", t.shared_instruction}});
  j["conversations"] = json::array();
  for (const auto& c : m.conversations)
    j["conversations"].push_back({{"conversation_id", c.conversation_id},
                                  {"condition_id", c.condition_id},
                                  {"task_id", c.task_id},
                                  {"repetition", c.repetition},
                                  {"seed", c.seed},
                                  {"status", c.status}});
  return j;
}

inline RunManifest manifest_from_json(const json& j) {
  RunManifest m;
  m.run_id = j.value("run_id", std::string());
  m.created_at = j.value("created_at", std::string());
  m.software_version = j.value("software_version", std::string());
  m.mode = j.value("mode", std::string());
  m.master_seed = j.value("master_seed", std::uint64_t{0});
  m.model_plan = j.value("model_plan", std::string());
  m.repetitions = j.value("repetitions", 1);
  if (j.contains("conditions"))
    m.condition_ids = j.at("conditions").get<std::vector<int>>();
  m.embedding_model_id = j.value("embedding_model_id", std::string());
  if (j.contains("endpoints")) m.endpoints = j.at("endpoints");
  if (j.contains("tasks"))
    for (const auto& t : j.at("tasks"))
      m.tasks.push_back({t.at("task_id").get<std::string>(),
                         t.at("premise").get<std::string>(),
                         t.value("shared_instruction", std::string())});
  if (j.contains("conversations"))
    for (const auto& c : j.at("conversations")) {
      RunManifest::Entry e;
      e.conversation_id = c.at("conversation_id").get<std::string>();
      e.condition_id = c.at("condition_id").get<int>();
      e.task_id = c.at("task_id").get<std::string>();
      e.repetition = c.at("repetition").get<int>();
      e.seed = c.at("seed").get<std::uint64_t>();
      e.status = c.at("status").get<std::string>();
      m.conversations.push_back(std::move(e));
    }
  return m;
}

namespace detail {

// Per-conversation gateway set. Mock mode defaults to the procedural
// responder; per-role script files (model name or "*") take precedence.
struct ConversationGateways {
  std::vector<std::unique_ptr<chat::ChatGateway>> owned;
  std::vector<chat::ChatGateway*> ptrs;
};

inline ConversationGateways make_mock_gateways(
    const RunConfig& cfg, const std::vector<AgentProfile>& agents,
    std::uint64_t seed) {
  ConversationGateways g;
  if (cfg.mock_scripts.empty()) {
    g.owned.push_back(std::make_unique<chat::SyntheticChatGateway>(seed));
    g.ptrs.assign(agents.size(), g.owned.back().get());
    return g;
  }
  for (const auto& agent : agents) {
    auto it = cfg.mock_scripts.find(agent.model_name);
    if (it == cfg.mock_scripts.end()) it = cfg.mock_scripts.find("*");
    if (it == cfg.mock_scripts.end())
      throw ConfigError("mock mode: no script for agent role '" +
                        agent.model_name + "' (add it or a '*' entry)");
    std::ifstream f(it->second);
    if (!f) throw ConfigError("cannot open mock script: " + it->second);
    g.owned.push_back(std::make_unique<chat::MockChatGateway>(
        chat::MockChatGateway::from_jsonl(f)));
    g.ptrs.push_back(g.owned.back().get());
  }
  return g;
}

}  // namespace detail

inline RunResult run_experiment(const RunConfig& cfg, std::ostream& log = std::cerr) {
  const auto cells =
      expand_condition_matrix(cfg.condition_selectors, cfg.model_plan, cfg.matrix);
  if (cells.empty()) throw ConfigError("no conditions selected");

  // Live mode needs resolvable credentials up front.
  std::map<std::string, std::unique_ptr<chat::HttpChatGateway>> live_gateways;
  if (cfg.mode == "live") {
    std::set<std::string> models;
    for (const auto& cell : cells)
      for (const auto& m : cell.condition.model_assignment) models.insert(m);
    for (const auto& m : models) {
      auto it = cfg.endpoints.find(m);
      if (it == cfg.endpoints.end())
        throw ConfigError("live mode: no endpoint configured for model '" + m + "'");
      chat::resolve_api_key(it->second);  // throws naming the env variable
      live_gateways[m] = std::make_unique<chat::HttpChatGateway>(it->second);
    }
  }

  struct Job {
    const ExpandedCell* cell;
    const TaskPrompt* task;
    int rep;
    std::string conversation_id;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (const auto& cell : cells)
    for (const auto& task : cfg.tasks)
      for (int rep = 0; rep < cfg.repetitions; ++rep) {
        Job j;
        j.cell = &cell;
        j.task = &task;
        j.rep = rep;
        j.conversation_id = make_conversation_id(
            cfg.model_plan, cell.condition.condition_id, task.task_id, rep);
        j.seed = derive_seed(cfg.master_seed, cell.condition.condition_id,
                             task.task_id, rep);
        jobs.push_back(std::move(j));
      }

  const fs::path out_dir(cfg.output_dir);
  const fs::path tr_dir = out_dir / "transcripts";
  fs::create_directories(tr_dir);

  std::vector<RunManifest::Entry> entries(jobs.size());
  std::vector<std::optional<Idea>> finals(jobs.size());
  std::atomic<int> completed{0}, failures{0}, skipped{0};
  std::mutex log_mu;

  parallel_for(jobs.size(), cfg.parallelism, [&](size_t i) {
    const Job& job = jobs[i];
    RunManifest::Entry entry;
    entry.conversation_id = job.conversation_id;
    entry.condition_id = job.cell->condition.condition_id;
    entry.task_id = job.task->task_id;
    entry.repetition = job.rep;
    entry.seed = job.seed;
    const fs::path path = tr_dir / (job.conversation_id + ".jsonl");

    if (fs::exists(path)) {
      // Resume: keep the existing conversation, recover its status and idea.
      std::ifstream f(path);
      auto loaded = load_transcripts(f);
      if (loaded.size() != 1)
        throw SchemaError("expected one transcript in " + path.string());
      entry.status = enum_name(loaded[0].status);
      finals[i] = loaded[0].final_idea;
      ++skipped;
      if (loaded[0].status == TranscriptStatus::completed)
        ++completed;
      else
        ++failures;
      entries[i] = std::move(entry);
      return;
    }

    proto::Team team;
    team.condition = job.cell->condition;
    team.task = *job.task;
    team.agents = job.cell->agents;

    detail::ConversationGateways mock;
    if (cfg.mode == "mock") {
      mock = detail::make_mock_gateways(cfg, team.agents, job.seed);
      team.gateways = mock.ptrs;
    } else {
      for (const auto& agent : team.agents)
        team.gateways.push_back(live_gateways.at(agent.model_name).get());
    }

    try {
      ConversationTranscript t =
          proto::run_condition(team, job.conversation_id, job.seed);
      write_file_atomic(path, transcript_to_string(t));
      entry.status = enum_name(t.status);
      finals[i] = t.final_idea;
      if (t.status == TranscriptStatus::completed)
        ++completed;
      else
        ++failures;
    } catch (const Error& e) {
      entry.status = std::string("error: ") + e.what();
      ++failures;
      std::lock_guard<std::mutex> lk(log_mu);
      log << "conversation " << job.conversation_id << " failed: " << e.what()
          << "\n";
    }
    entries[i] = std::move(entry);
  });

  // Deterministic ordering in every aggregate file.
  std::vector<size_t> order(jobs.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return entries[a].conversation_id < entries[b].conversation_id;
  });

  RunManifest manifest;
  manifest.run_id = cfg.run_id;
  manifest.created_at = now_iso8601();
  manifest.software_version = kVersion;
  manifest.mode = cfg.mode;
  manifest.master_seed = cfg.master_seed;
  manifest.model_plan = cfg.model_plan;
  manifest.repetitions = cfg.repetitions;
  for (const auto& cell : cells)
    manifest.condition_ids.push_back(cell.condition.condition_id);
  manifest.tasks = cfg.tasks;
  manifest.embedding_model_id = cfg.embedding.model_id;
  manifest.endpoints = json::object();
  for (const auto& [model, e] : cfg.endpoints)
    manifest.endpoints[model] = {{"provider", e.provider},
                                 {"base_url", e.base_url},
                                 {"path", e.path}};
  if (!cfg.mock_scripts.empty()) {
    json scripts = json::object();
    for (const auto& [role, p] : cfg.mock_scripts) scripts[role] = p;
    manifest.endpoints["mock_scripts"] = scripts;
  }
  // A custom design matrix must travel with the manifest or replay cannot
  // reconstruct the run.
  {
    const auto& shipped = builtin_condition_matrix();
    bool custom = cfg.matrix.size() != shipped.size();
    for (size_t i = 0; !custom && i < cfg.matrix.size(); ++i)
      custom = cfg.matrix[i].cond != shipped[i].cond ||
               cfg.matrix[i].agents != shipped[i].agents ||
               cfg.matrix[i].persona != shipped[i].persona ||
               cfg.matrix[i].generation != shipped[i].generation ||
               cfg.matrix[i].discussion != shipped[i].discussion ||
               cfg.matrix[i].pool != shipped[i].pool ||
               cfg.matrix[i].length != shipped[i].length ||
               cfg.matrix[i].order != shipped[i].order;
    if (custom) {
      json rows = json::array();
      for (const auto& r : cfg.matrix)
        rows.push_back({{"cond", r.cond},
                        {"agents", r.agents},
                        {"persona", r.persona},
                        {"generation", r.generation},
                        {"discussion", r.discussion},
                        {"pool", r.pool},
                        {"length", r.length},
                        {"order", r.order}});
      manifest.endpoints["condition_matrix"] = rows;
    }
  }
  for (size_t i : order) manifest.conversations.push_back(entries[i]);

  std::ostringstream ideas_os;
  for (size_t i : order)
    if (finals[i]) save_ideas({*finals[i]}, ideas_os);
  write_file_atomic(out_dir / "ideas.jsonl", ideas_os.str());
  write_file_atomic(out_dir / "manifest.json",
                    manifest_to_json(manifest).dump(2) + "\n");

  RunResult res;
  res.manifest = std::move(manifest);
  res.completed = completed;
  res.failures = failures;
  res.skipped = skipped;
  return res;
}

// ---------------------------------------------------------------------------
// Replay: re-execute a mock run and compare transcripts byte for byte.

struct ReplayResult {
  bool pass = false;
  std::string detail;
};

inline ReplayResult replay(const fs::path& manifest_path,
                           const fs::path& transcripts_dir,
                           const fs::path& scratch_dir) {
  std::ifstream mf(manifest_path);
  if (!mf) throw ConfigError("cannot open manifest: " + manifest_path.string());
  json mj;
  try {
    mj = json::parse(mf);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("manifest parse error: ") + e.what());
  }
  const RunManifest m = manifest_from_json(mj);

  if (m.mode != "mock")
    throw ConfigError(
        "replay refused: manifest records a live-mode run, which is not a "
        "deterministic source");
  if (m.software_version != kVersion)
    throw ConfigError("replay refused: manifest was written by version " +
                      m.software_version + " but this binary is " +
                      std::string(kVersion));

  RunConfig cfg;
  cfg.run_id = m.run_id + "-replay";
  cfg.mode = "mock";
  cfg.master_seed = m.master_seed;
  cfg.output_dir = scratch_dir.string();
  cfg.repetitions = m.repetitions;
  cfg.model_plan = m.model_plan;
  cfg.tasks = m.tasks;
  cfg.condition_selectors = m.condition_ids;
  cfg.embedding.model_id = m.embedding_model_id;
  if (m.endpoints.contains("mock_scripts"))
    for (auto it = m.endpoints.at("mock_scripts").begin();
         it != m.endpoints.at("mock_scripts").end(); ++it)
      cfg.mock_scripts[it.key()] = it.value().get<std::string>();
  if (m.endpoints.contains("condition_matrix")) {
    cfg.matrix.clear();
    for (const auto& r : m.endpoints.at("condition_matrix")) {
      MatrixRow row;
      row.cond = r.at("cond").get<int>();
      row.agents = r.at("agents").get<int>();
      row.persona = r.at("persona").get<std::string>();
      row.generation = r.at("generation").get<std::string>();
      row.discussion = r.at("discussion").get<std::string>();
      row.pool = r.at("pool").get<std::string>();
      row.length = r.at("length").get<std::string>();
      row.order = r.at("order").get<std::string>();
      cfg.matrix.push_back(std::move(row));
    }
  }

  std::ostringstream devnull;
  run_experiment(cfg, devnull);

  auto slurp = [](const fs::path& p) -> std::optional<std::string> {
    std::ifstream f(p, std::ios::binary);
    if (!f) return std::nullopt;
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
  };

  for (const auto& entry : m.conversations) {
    const fs::path orig = transcripts_dir / (entry.conversation_id + ".jsonl");
    const fs::path redo =
        scratch_dir / "transcripts" / (entry.conversation_id + ".jsonl");
    const auto a = slurp(orig);
    const auto b = slurp(redo);
    if (!a && !b) continue;  // conversation errored in both runs
    if (!a || !b) {
      return {false, "transcript present in only one run: " +
                         entry.conversation_id};
    }
    if (*a != *b) {
      size_t line = 1;
      for (size_t i = 0; i < std::min(a->size(), b->size()); ++i) {
        if ((*a)[i] != (*b)[i]) break;
        if ((*a)[i] == '\n') ++line;
      }
      return {false, "first divergence at " + entry.conversation_id +
                         ".jsonl line " + std::to_string(line)};
    }
  }
  return {true, "all " + std::to_string(m.conversations.size()) +
                    " transcripts byte-identical"};
}

// ---------------------------------------------------------------------------
// Analysis: transcripts -> trajectory feature CSV (+ optional 2-D projection)

inline std::string feature_csv_header() {
  std::string h = "conversation_id,condition_id,task_id,model,discussion";
  for (const char* name : traj::kFeatureNames) h += std::string(",") + name;
  for (const char* name : traj::kFeatureNames)
    h += std::string(",flag_") + name;
  return h;
}

inline std::string model_label(const ConditionSpec& c) {
  if (c.model_assignment.empty()) return "";
  for (const auto& m : c.model_assignment)
    if (m != c.model_assignment[0]) return "mixed";
  return c.model_assignment[0];
}

struct AnalyzeResult {
  int analyzed = 0;
  int skipped = 0;
};

inline AnalyzeResult analyze(const fs::path& transcripts_dir,
                             const EmbeddingSpec& spec,
                             const fs::path& features_out,
                             const std::optional<fs::path>& projections_out,
                             std::ostream& log = std::cerr) {
  std::vector<fs::path> files;
  if (!fs::is_directory(transcripts_dir))
    throw ConfigError("not a directory: " + transcripts_dir.string());
  for (const auto& e : fs::directory_iterator(transcripts_dir))
    if (e.path().extension() == ".jsonl") files.push_back(e.path());
  std::sort(files.begin(), files.end());

  std::unique_ptr<embed::EmbeddingProvider> provider;
  if (spec.mode == "mock") {
    provider =
        std::make_unique<embed::MockEmbeddingProvider>(spec.dim, spec.mock_seed);
  } else if (spec.mode == "live") {
    if (!spec.endpoint)
      throw ConfigError("live embeddings need an endpoint config");
    provider = std::make_unique<embed::HttpEmbeddingProvider>(*spec.endpoint,
                                                              spec.model_id);
  } else {
    throw ConfigError("embedding mode must be 'mock' or 'live'");
  }
  std::optional<fs::path> cache;
  if (spec.cache_dir) cache = fs::path(*spec.cache_dir);
  embed::EmbeddingService service(provider.get(), spec.model_id, spec.dim, cache);

  std::ostringstream feat;
  feat << feature_csv_header() << "\n";
  std::ostringstream proj;
  proj << "conversation_id,turn_index,x,y\n";

  AnalyzeResult res;
  for (const fs::path& file : files) {
    std::ifstream f(file);
    for (ConversationTranscript& t : load_transcripts(f)) {
      const Discussion d = t.condition.discussion;
      if (d == Discussion::progressive || d == Discussion::none) {
        log << "excluded from trajectory feature analysis: " << t.conversation_id
            << " ("
            << (d == Discussion::progressive ? "progressive structure"
                                             : "no discussion phase")
            << ")\n";
        ++res.skipped;
        continue;
      }
      std::vector<std::string> texts;
      for (const Turn& turn : t.turns) {
        if (turn.phase != Phase::discussion) continue;
        texts.push_back(spec.prefix_roles
                            ? "Agent " + std::to_string(turn.agent_index + 1) +
                                  ": " + turn.content
                            : turn.content);
      }
      if (texts.empty()) {
        log << "excluded from trajectory feature analysis: " << t.conversation_id
            << " (no discussion turns)\n";
        ++res.skipped;
        continue;
      }
      traj::Trajectory trajectory;
      for (auto& ev : service.embed_batch(texts))
        trajectory.embeddings.push_back(std::move(ev.values));
      const traj::TrajectoryFeatures features =
          traj::compute_features(trajectory, t.seed);

      feat << csv_escape(t.conversation_id) << ',' << t.condition.condition_id
           << ',' << csv_escape(t.task.task_id) << ','
           << csv_escape(model_label(t.condition)) << ','
           << enum_name(t.condition.discussion);
      for (const auto& v : features.values)
        feat << ',' << (std::isfinite(v.value) ? fmt_double(v.value) : "");
      for (const auto& v : features.values) feat << ',' << flag_name(v.flag);
      feat << '\n';
      ++res.analyzed;

      if (projections_out && trajectory.n() >= 3) {
        const auto p = traj::pca_project_2d(trajectory);
        for (size_t i = 0; i < p.points.size(); ++i)
          proj << csv_escape(t.conversation_id) << ',' << i << ','
               << fmt_double(p.points[i][0]) << ',' << fmt_double(p.points[i][1])
               << '\n';
      }
    }
  }

  write_file_atomic(features_out, feat.str());
  if (projections_out) write_file_atomic(*projections_out, proj.str());
  return res;
}

// ---------------------------------------------------------------------------
// Scoring: ideas + ratings -> score table CSV

inline std::string score_csv_header() {
  return "idea_id,task_id,source,novelty,usefulness,creativity,creativity_additive";
}

inline std::vector<stats::ScoreRow> score_rows(
    const std::vector<Idea>& ideas, const std::vector<JudgeRatingRow>& ratings,
    stats::JudgeAggregation agg = stats::JudgeAggregation::mean_then_minmax) {
  std::set<std::string> known;
  for (const auto& idea : ideas) known.insert(idea.idea_id);
  std::set<std::string> orphans;
  for (const auto& r : ratings)
    if (!known.count(r.idea_id)) orphans.insert(r.idea_id);
  if (!orphans.empty()) {
    std::string msg = "ratings reference unknown idea ids:";
    for (const auto& id : orphans) msg += " " + id;
    throw SchemaError(msg);
  }

  const ExclusionResult filtered = exclude_invalid_ideas(ideas, ratings);
  std::vector<stats::ScoreRow> rows =
      stats::minmax_normalize(filtered.kept, ratings, agg);
  stats::creativity_scores(rows, stats::CreativityMode::product);
  stats::creativity_scores(rows, stats::CreativityMode::additive);
  return rows;
}

inline void write_score_csv(const std::vector<stats::ScoreRow>& rows,
                            bool additive, std::ostream& os) {
  os << score_csv_header() << "\n";
  for (const auto& r : rows) {
    os << csv_escape(r.idea_id) << ',' << csv_escape(r.task_id) << ','
       << csv_escape(r.source) << ',' << fmt_double(r.novelty) << ','
       << fmt_double(r.usefulness) << ',' << fmt_double(r.creativity) << ',';
    if (additive) os << fmt_double(r.creativity_additive);
    os << '\n';
  }
}

inline std::vector<stats::ScoreRow> read_score_csv(std::istream& is) {
  std::vector<stats::ScoreRow> rows;
  std::string line;
  size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    if (line_no == 1) {
      if (line.rfind("idea_id,", 0) != 0)
        throw SchemaError("score CSV: unexpected header");
      continue;
    }
    const auto f = csv_split(line);
    if (f.size() != 7)
      throw SchemaError("score CSV line " + std::to_string(line_no) +
                        ": expected 7 fields");
    stats::ScoreRow r;
    r.idea_id = f[0];
    r.task_id = f[1];
    r.source = f[2];
    try {
      r.novelty = std::stod(f[3]);
      r.usefulness = std::stod(f[4]);
      r.creativity = std::stod(f[5]);
      r.creativity_additive = f[6].empty() ? std::numeric_limits<double>::quiet_NaN()
                                           : std::stod(f[6]);
    } catch (const std::exception&) {
      throw SchemaError("score CSV line " + std::to_string(line_no) +
                        ": bad number");
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Reporting

struct FeatureRow {
  std::string conversation_id;
  std::array<double, 9> values;
  bool complete = false;  // all nine finite
};

inline std::vector<FeatureRow> read_feature_csv(std::istream& is) {
  std::vector<FeatureRow> rows;
  std::string line;
  size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    if (line_no == 1) {
      if (line.rfind("conversation_id,", 0) != 0)
        throw SchemaError("feature CSV: unexpected header");
      continue;
    }
    const auto f = csv_split(line);
    if (f.size() < 14)
      throw SchemaError("feature CSV line " + std::to_string(line_no) +
                        ": too few fields");
    FeatureRow r;
    r.conversation_id = f[0];
    r.complete = true;
    for (size_t i = 0; i < 9; ++i) {
      const std::string& cell = f[5 + i];
      if (cell.empty()) {
        r.values[i] = std::numeric_limits<double>::quiet_NaN();
        r.complete = false;
      } else {
        r.values[i] = std::stod(cell);
      }
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

struct ReportResult {
  std::vector<std::string> files_written;
  int joined_rows = 0;
};

// Emits descriptives, pairwise group comparisons (d, t, df, p, p95, top-5%
// means), a standardized-beta table with HC3 SEs, VIF diagnostics, and
// plot-ready long tables.
inline ReportResult report(const std::vector<stats::ScoreRow>& scores,
                           const std::vector<FeatureRow>* features,
                           const fs::path& out_dir) {
  if (scores.empty()) throw ConfigError("report: empty score table");
  fs::create_directories(out_dir);
  ReportResult result;

  auto write = [&](const std::string& name, const std::string& content) {
    write_file_atomic(out_dir / name, content);
    result.files_written.push_back(name);
  };

  std::set<std::string> groups, tasks;
  for (const auto& r : scores) {
    groups.insert(r.source);
    tasks.insert(r.task_id);
  }
  const bool has_additive = std::any_of(
      scores.begin(), scores.end(),
      [](const stats::ScoreRow& r) { return std::isfinite(r.creativity_additive); });

  struct Dim {
    const char* name;
    std::function<double(const stats::ScoreRow&)> get;
  };
  std::vector<Dim> dims{
      {"novelty", [](const stats::ScoreRow& r) { return r.novelty; }},
      {"usefulness", [](const stats::ScoreRow& r) { return r.usefulness; }},
      {"creativity", [](const stats::ScoreRow& r) { return r.creativity; }},
  };
  if (has_additive)
    dims.push_back({"creativity_additive",
                    [](const stats::ScoreRow& r) { return r.creativity_additive; }});

  auto values_of = [&](const std::string& group, const std::string& task,
                       const Dim& dim) {
    std::vector<double> v;
    for (const auto& r : scores) {
      if (r.source != group) continue;
      if (!task.empty() && r.task_id != task) continue;
      const double x = dim.get(r);
      if (std::isfinite(x)) v.push_back(x);
    }
    return v;
  };

  // (a) descriptives: overall and per task, mean and sample SD per dimension
  {
    std::ostringstream os;
    os << "group,task,dimension,n,mean,sd\n";
    for (const auto& g : groups) {
      for (const auto& dim : dims) {
        auto all = values_of(g, "", dim);
        if (all.empty()) continue;
        os << csv_escape(g) << ",ALL," << dim.name << ',' << all.size() << ','
           << fmt_double(stats::mean(all)) << ','
           << (all.size() > 1 ? fmt_double(std::sqrt(stats::sample_variance(all)))
                              : "")
           << '\n';
      }
      for (const auto& task : tasks) {
        for (const auto& dim : dims) {
          auto v = values_of(g, task, dim);
          if (v.empty()) continue;
          os << csv_escape(g) << ',' << csv_escape(task) << ',' << dim.name
             << ',' << v.size() << ',' << fmt_double(stats::mean(v)) << ','
             << (v.size() > 1 ? fmt_double(std::sqrt(stats::sample_variance(v)))
                              : "")
             << '\n';
        }
      }
    }
    write("descriptives.csv", os.str());
  }

  // (b) pairwise group comparisons; omitted for a single group
  if (groups.size() >= 2) {
    std::ostringstream os;
    os << "dimension,group_a,group_b,n_a,n_b,cohens_d,t,df,p,p95_a,p95_b,"
          "top5_mean_a,top5_mean_b\n";
    std::vector<std::string> gl(groups.begin(), groups.end());
    for (size_t a = 0; a < gl.size(); ++a) {
      for (size_t b = a + 1; b < gl.size(); ++b) {
        for (const auto& dim : dims) {
          auto va = values_of(gl[a], "", dim);
          auto vb = values_of(gl[b], "", dim);
          if (va.size() < 2 || vb.size() < 2) continue;
          os << dim.name << ',' << csv_escape(gl[a]) << ',' << csv_escape(gl[b])
             << ',' << va.size() << ',' << vb.size() << ',';
          try {
            const double d = stats::cohens_d(va, vb);
            const auto tt = stats::t_test_independent(va, vb);
            os << fmt_double(d) << ',' << fmt_double(tt.t) << ','
               << fmt_double(tt.df) << ',' << fmt_double(tt.p);
          } catch (const stats::StatsError&) {
            os << ",,,";
          }
          os << ',' << fmt_double(stats::percentile(va, 95.0)) << ','
             << fmt_double(stats::percentile(vb, 95.0)) << ','
             << fmt_double(stats::top_fraction_mean(va)) << ','
             << fmt_double(stats::top_fraction_mean(vb)) << '\n';
        }
      }
    }
    write("comparisons.csv", os.str());
  }

  // (c)+(d) trajectory-feature regression and VIF, when features are joined
  if (features) {
    std::map<std::string, const FeatureRow*> by_conv;
    for (const auto& f : *features)
      if (f.complete) by_conv[f.conversation_id] = &f;

    std::vector<const stats::ScoreRow*> joined_scores;
    std::vector<const FeatureRow*> joined_features;
    for (const auto& r : scores) {
      auto it = by_conv.find(r.idea_id);  // final ideas carry the conversation id
      if (it == by_conv.end()) continue;
      joined_scores.push_back(&r);
      joined_features.push_back(it->second);
    }
    result.joined_rows = static_cast<int>(joined_scores.size());
    if (joined_scores.empty())
      throw ConfigError("report: feature/score join is empty");

    const auto n = static_cast<Eigen::Index>(joined_scores.size());
    Eigen::MatrixXd F(n, 9);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      y(i) = joined_scores[static_cast<size_t>(i)]->creativity;
      for (int j = 0; j < 9; ++j)
        F(i, j) = joined_features[static_cast<size_t>(i)]->values[static_cast<size_t>(j)];
    }

    const traj::ZScoreResult z = traj::zscore_features(F);
    std::ostringstream betas;
    betas << "feature,beta,se_plain,se_hc3,status\n";
    const bool estimable =
        !z.kept.empty() && n > static_cast<Eigen::Index>(z.kept.size()) + 1;
    if (estimable) {
      std::vector<std::string> kept_names;
      for (int j : z.kept)
        kept_names.push_back(traj::kFeatureNames[static_cast<size_t>(j)]);
      Eigen::MatrixXd kept_raw(n, static_cast<Eigen::Index>(z.kept.size()));
      for (size_t jj = 0; jj < z.kept.size(); ++jj)
        kept_raw.col(static_cast<Eigen::Index>(jj)) = F.col(z.kept[jj]);
      const stats::RegressionResult reg =
          stats::standardized_betas(y, kept_raw, kept_names, /*hc3=*/true);
      size_t kk = 0;
      for (int j = 0; j < 9; ++j) {
        const bool kept =
            std::find(z.kept.begin(), z.kept.end(), j) != z.kept.end();
        betas << traj::kFeatureNames[static_cast<size_t>(j)] << ',';
        if (kept) {
          betas << fmt_double(reg.coefficients(static_cast<Eigen::Index>(kk))) << ','
                << fmt_double(reg.se_plain(static_cast<Eigen::Index>(kk))) << ','
                << fmt_double(reg.se_hc3(static_cast<Eigen::Index>(kk))) << ",ok\n";
          ++kk;
        } else {
          betas << ",,,dropped_zero_variance\n";
        }
      }
    } else {
      // too few joined conversations for a nine-predictor fit
      for (int j = 0; j < 9; ++j)
        betas << traj::kFeatureNames[static_cast<size_t>(j)]
              << ",,,,insufficient_rows\n";
    }
    write("betas.csv", betas.str());

    std::ostringstream vif_os;
    vif_os << "feature,vif\n";
    if (z.kept.size() >= 2 && n > static_cast<Eigen::Index>(z.kept.size())) {
      const std::vector<double> vifs = traj::compute_vif(z.z);
      for (size_t jj = 0; jj < z.kept.size(); ++jj)
        vif_os << traj::kFeatureNames[static_cast<size_t>(z.kept[jj])] << ','
               << (std::isinf(vifs[jj]) ? "inf" : fmt_double(vifs[jj])) << '\n';
    }
    write("vif.csv", vif_os.str());
  }

  // (e) plot-ready long tables
  {
    std::ostringstream os;
    os << "idea_id,source,task_id,novelty,usefulness,creativity\n";
    for (const auto& r : scores)
      os << csv_escape(r.idea_id) << ',' << csv_escape(r.source) << ','
         << csv_escape(r.task_id) << ',' << fmt_double(r.novelty) << ','
         << fmt_double(r.usefulness) << ',' << fmt_double(r.creativity) << '\n';
    write("plot_distribution.csv", os.str());
  }
  {
    std::ostringstream os;
    os << "idea_id,source,novelty,usefulness\n";
    for (const auto& r : scores)
      os << csv_escape(r.idea_id) << ',' << csv_escape(r.source) << ','
         << fmt_double(r.novelty) << ',' << fmt_double(r.usefulness) << '\n';
    write("plot_scatter.csv", os.str());
  }

  return result;
}

}  // namespace ideaforge::runner
