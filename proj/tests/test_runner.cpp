#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "ideaforge/runner.hpp"
#include "oracles.hpp"

using namespace ideaforge;
using namespace ideaforge::runner;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("ideaforge-runner-" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  REQUIRE(f);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

RunConfig small_mock_config(const fs::path& out, std::vector<int> conditions,
                            int reps = 1) {
  RunConfig cfg;
  cfg.run_id = "t";
  cfg.mode = "mock";
  cfg.master_seed = 42;
  cfg.output_dir = out.string();
  cfg.repetitions = reps;
  cfg.tasks = {prompts::builtin_task("plastic_waste")};
  cfg.condition_selectors = std::move(conditions);
  return cfg;
}

}  // namespace

// ---------------------------------------------------------------------------
// condition matrix

TEST_CASE("shipped matrix round-trips against the transcribed fixture") {
  std::ifstream f(fs::path(IDEAFORGE_TEST_DATA_DIR) / "condition_matrix.csv");
  REQUIRE(f);
  std::string line;
  std::getline(f, line);  // header
  std::vector<MatrixRow> fixture;
  while (std::getline(f, line)) {
    if (trim(line).empty()) continue;
    const auto fields = csv_split(line);
    REQUIRE(fields.size() == 8);
    MatrixRow r;
    r.cond = std::stoi(fields[0]);
    r.agents = std::stoi(fields[1]);
    r.persona = fields[2];
    r.generation = fields[3];
    r.discussion = fields[4];
    r.pool = fields[5];
    r.length = fields[6];
    r.order = fields[7];
    fixture.push_back(std::move(r));
  }
  const auto& shipped = builtin_condition_matrix();
  REQUIRE(fixture.size() == 71);
  REQUIRE(shipped.size() == 71);
  for (size_t i = 0; i < 71; ++i) {
    CHECK(shipped[i].cond == fixture[i].cond);
    CHECK(shipped[i].agents == fixture[i].agents);
    CHECK(shipped[i].persona == fixture[i].persona);
    CHECK(shipped[i].generation == fixture[i].generation);
    CHECK(shipped[i].discussion == fixture[i].discussion);
    CHECK(shipped[i].pool == fixture[i].pool);
    CHECK(shipped[i].length == fixture[i].length);
    CHECK(shipped[i].order == fixture[i].order);
  }
  // every row parses into a valid condition
  for (const auto& row : shipped) CHECK_NOTHROW(condition_from_row(row));
}

TEST_CASE("expansion: gpt plan covers all 71, reasoning plans narrow") {
  CHECK(expand_condition_matrix({}, "gpt-4.1").size() == 71);
  const auto o3 = expand_condition_matrix({}, "o3-high");
  CHECK(o3.size() == 27);
  for (const auto& cell : o3) {
    CHECK(cell.condition.team_size == 3);
    CHECK(cell.condition.persona_plan == PersonaPlan::different);
    for (const auto& agent : cell.agents) {
      CHECK(agent.model_name == "o3-high");
      CHECK(!agent.temperature.has_value());  // o3 takes no temperature
    }
  }
  CHECK_THROWS_AS(expand_condition_matrix({1}, "o3-high"), ConfigError);
  CHECK_THROWS_AS(expand_condition_matrix({999}, "gpt-4.1"), ConfigError);
}

TEST_CASE("mixed plan interleaves three distinct model names") {
  const auto cells = expand_condition_matrix({3}, "mixed");
  REQUIRE(cells.size() == 1);
  const auto& agents = cells[0].agents;
  REQUIRE(agents.size() == 3);
  std::set<std::string> models;
  for (const auto& a : agents) models.insert(a.model_name);
  CHECK(models == std::set<std::string>{"deepseek-r1", "gemini-2.5-pro",
                                        "o3-default"});
  CHECK(agents[0].temperature.has_value());   // deepseek takes temperature
  CHECK(!agents[2].temperature.has_value());  // o3-default does not
}

TEST_CASE("persona plans build the right rosters") {
  const auto none = expand_condition_matrix({1}, "gpt-4.1")[0];
  CHECK(none.agents[0].persona.description == "You are Agent 1.");
  CHECK(none.agents[0].persona.source == PersonaSource::generic);
  const auto same = expand_condition_matrix({2}, "gpt-4.1")[0];
  CHECK(same.agents[0].persona.description == same.agents[1].persona.description);
  const auto diff = expand_condition_matrix({3}, "gpt-4.1")[0];
  CHECK(diff.agents[0].persona.description != diff.agents[1].persona.description);
  CHECK(diff.agents[0].persona.source == PersonaSource::human_derived);
}

// ---------------------------------------------------------------------------
// run_experiment

TEST_CASE("mock run: deterministic outputs and resumability") {
  TempDir a, b;
  RunConfig cfg_a = small_mock_config(a.path / "out", {1, 9}, 2);
  const auto res_a = run_experiment(cfg_a, std::cerr);
  CHECK(res_a.completed == 4);
  CHECK(res_a.failures == 0);

  RunConfig cfg_b = small_mock_config(b.path / "out", {1, 9}, 2);
  run_experiment(cfg_b, std::cerr);

  for (const auto& entry : res_a.manifest.conversations) {
    const auto rel = fs::path("transcripts") / (entry.conversation_id + ".jsonl");
    CHECK(slurp(a.path / "out" / rel) == slurp(b.path / "out" / rel));
  }
  CHECK(slurp(a.path / "out" / "ideas.jsonl") == slurp(b.path / "out" / "ideas.jsonl"));

  // resume: drop one transcript, re-run, everything else untouched
  const auto victim = a.path / "out" / "transcripts" /
                      (res_a.manifest.conversations[0].conversation_id + ".jsonl");
  const std::string original = slurp(victim);
  fs::remove(victim);
  const auto res_resume = run_experiment(cfg_a, std::cerr);
  CHECK(res_resume.skipped == 3);
  CHECK(res_resume.completed == 4);
  CHECK(slurp(victim) == original);

  // no duplicate conversation ids
  std::set<std::string> ids;
  for (const auto& e : res_resume.manifest.conversations)
    CHECK(ids.insert(e.conversation_id).second);
}

TEST_CASE("parallel execution does not change outputs") {
  TempDir a, b;
  RunConfig serial = small_mock_config(a.path / "out", {9, 27, 64});
  serial.parallelism = 1;
  run_experiment(serial, std::cerr);
  RunConfig parallel = small_mock_config(b.path / "out", {9, 27, 64});
  parallel.parallelism = 4;
  run_experiment(parallel, std::cerr);
  for (const auto& e : fs::directory_iterator(a.path / "out" / "transcripts")) {
    const auto name = e.path().filename();
    CHECK(slurp(e.path()) == slurp(b.path / "out" / "transcripts" / name));
  }
}

TEST_CASE("live mode without credentials names the missing variable") {
  TempDir tmp;
  RunConfig cfg = small_mock_config(tmp.path / "out", {1});
  cfg.mode = "live";
  chat::EndpointConfig ep;
  ep.provider = "contoso";
  ep.base_url = "http://127.0.0.1:1";
  cfg.endpoints["gpt-4.1"] = ep;
  CHECK_THROWS_WITH_AS(run_experiment(cfg, std::cerr),
                       doctest::Contains("IDEAFORGE_API_KEY_CONTOSO"),
                       ConfigError);
}

TEST_CASE("per-role mock script files drive conversations") {
  TempDir tmp;
  // each agent replays this queue: one proposal, then three ratings
  const fs::path script = tmp.path / "agent.jsonl";
  {
    std::ofstream f(script);
    f << json{{"match", "Propose one new idea"}, {"reply", "alpha"}}.dump()
      << "\n";
    for (int i = 0; i < 3; ++i) f << json{{"reply", "5"}}.dump() << "\n";
  }
  RunConfig cfg = small_mock_config(tmp.path / "out", {1});
  cfg.mock_scripts["*"] = script.string();
  const auto res = run_experiment(cfg, std::cerr);
  CHECK(res.completed == 1);
  std::ifstream f(tmp.path / "out" / "transcripts" /
                  (res.manifest.conversations[0].conversation_id + ".jsonl"));
  const auto loaded = load_transcripts(f);
  REQUIRE(loaded.size() == 1);
  CHECK(loaded[0].final_idea->raw_text == "alpha");
}

// ---------------------------------------------------------------------------
// replay

TEST_CASE("replay verifies, detects tampering, refuses live manifests") {
  TempDir tmp;
  RunConfig cfg = small_mock_config(tmp.path / "out", {1, 9});
  const auto res = run_experiment(cfg, std::cerr);

  const fs::path manifest = tmp.path / "out" / "manifest.json";
  const fs::path transcripts = tmp.path / "out" / "transcripts";

  const auto ok = replay(manifest, transcripts, tmp.path / "scratch1");
  CHECK(ok.pass);

  // flip one byte in one transcript
  const fs::path victim =
      transcripts / (res.manifest.conversations[0].conversation_id + ".jsonl");
  std::string text = slurp(victim);
  const size_t at = text.find("\"content\":\"");
  REQUIRE(at != std::string::npos);
  text[at + 11] = text[at + 11] == 'Z' ? 'Y' : 'Z';
  {
    std::ofstream f(victim, std::ios::binary | std::ios::trunc);
    f << text;
  }
  const auto bad = replay(manifest, transcripts, tmp.path / "scratch2");
  CHECK(!bad.pass);
  CHECK(bad.detail.find(res.manifest.conversations[0].conversation_id) !=
        std::string::npos);

  // live manifests are refused outright
  json mj = json::parse(slurp(manifest));
  mj["mode"] = "live";
  {
    std::ofstream f(tmp.path / "live_manifest.json");
    f << mj.dump();
  }
  CHECK_THROWS_WITH_AS(
      replay(tmp.path / "live_manifest.json", transcripts, tmp.path / "scratch3"),
      doctest::Contains("live"), ConfigError);

  // version mismatches are refused too
  mj["mode"] = "mock";
  mj["software_version"] = "0.0.0-other";
  {
    std::ofstream f(tmp.path / "old_manifest.json");
    f << mj.dump();
  }
  CHECK_THROWS_AS(
      replay(tmp.path / "old_manifest.json", transcripts, tmp.path / "scratch4"),
      ConfigError);
}

TEST_CASE("replay reconstructs runs that used a custom condition matrix") {
  TempDir tmp;
  RunConfig cfg = small_mock_config(tmp.path / "out", {});
  cfg.matrix = {{1, 3, "different", "interactive", "-", "-", "-", "-"},
                {2, 3, "different", "-", "open", "-", "30", "random"}};
  const auto res = run_experiment(cfg, std::cerr);
  CHECK(res.completed == 2);
  const auto verdict = replay(tmp.path / "out" / "manifest.json",
                              tmp.path / "out" / "transcripts",
                              tmp.path / "scratch");
  CHECK(verdict.pass);
}

// ---------------------------------------------------------------------------
// analyze

TEST_CASE("analyze skips progressive and no-discussion transcripts with reasons") {
  TempDir tmp;
  RunConfig cfg = small_mock_config(tmp.path / "out", {1, 9, 64});
  run_experiment(cfg, std::cerr);

  EmbeddingSpec spec;
  spec.mode = "mock";
  spec.model_id = "m16";
  spec.dim = 16;
  spec.cache_dir = (tmp.path / "cache").string();

  std::ostringstream log;
  const auto res = analyze(tmp.path / "out" / "transcripts", spec,
                           tmp.path / "features.csv", std::nullopt, log);
  CHECK(res.analyzed == 1);  // only the open-discussion conversation
  CHECK(res.skipped == 2);
  CHECK(log.str().find("progressive structure") != std::string::npos);
  CHECK(log.str().find("no discussion phase") != std::string::npos);

  const std::string csv = slurp(tmp.path / "features.csv");
  CHECK(csv.rfind(feature_csv_header(), 0) == 0);
  CHECK(csv.find("-c09-") != std::string::npos);
  CHECK(csv.find("-c64-") == std::string::npos);

  // rerun over the unchanged corpus + cache: byte-identical output
  std::ostringstream log2;
  analyze(tmp.path / "out" / "transcripts", spec, tmp.path / "features2.csv",
          std::nullopt, log2);
  CHECK(slurp(tmp.path / "features.csv") == slurp(tmp.path / "features2.csv"));
}

TEST_CASE("analyze can embed role-prefixed turn content instead of raw") {
  TempDir tmp;
  RunConfig cfg = small_mock_config(tmp.path / "out", {9});
  run_experiment(cfg, std::cerr);
  EmbeddingSpec raw;
  raw.mode = "mock";
  raw.dim = 8;
  std::ostringstream log;
  analyze(tmp.path / "out" / "transcripts", raw, tmp.path / "raw.csv",
          std::nullopt, log);
  EmbeddingSpec prefixed = raw;
  prefixed.prefix_roles = true;
  analyze(tmp.path / "out" / "transcripts", prefixed, tmp.path / "prefixed.csv",
          std::nullopt, log);
  CHECK(slurp(tmp.path / "raw.csv") != slurp(tmp.path / "prefixed.csv"));
}

TEST_CASE("analyze emits per-turn 2-D projections on request") {
  TempDir tmp;
  RunConfig cfg = small_mock_config(tmp.path / "out", {9});
  run_experiment(cfg, std::cerr);
  EmbeddingSpec spec;
  spec.mode = "mock";
  spec.dim = 8;
  std::ostringstream log;
  analyze(tmp.path / "out" / "transcripts", spec, tmp.path / "f.csv",
          tmp.path / "p.csv", log);
  const std::string proj = slurp(tmp.path / "p.csv");
  CHECK(proj.rfind("conversation_id,turn_index,x,y", 0) == 0);
  // 30 discussion turns -> 30 projection rows + header
  CHECK(std::count(proj.begin(), proj.end(), '\n') == 31);
}

// ---------------------------------------------------------------------------
// score

namespace {
Idea fixture_idea(const std::string& id, const std::string& task,
                  IdeaSource source = IdeaSource::llm_team) {
  Idea i;
  i.idea_id = id;
  i.raw_text = "text of " + id;
  i.provenance.task_id = task;
  i.provenance.source = source;
  return i;
}
}  // namespace

TEST_CASE("score pipeline: hand-computed fixture") {
  std::vector<Idea> ideas{fixture_idea("a", "t1"), fixture_idea("b", "t1"),
                          fixture_idea("c", "t1")};
  std::vector<JudgeRatingRow> ratings;
  // idea a: novelty mean 2, usefulness mean 10
  // idea b: novelty mean 6, usefulness mean 5
  // idea c: novelty mean 10, usefulness mean 0 -> but 0s drop it? only 2 zeros
  for (int j = 0; j < 5; ++j) {
    ratings.push_back({"a", "j" + std::to_string(j), 2, 10});
    ratings.push_back({"b", "j" + std::to_string(j), 6, 5});
    ratings.push_back({"c", "j" + std::to_string(j), 10, j < 2 ? 0 : 5});
  }
  const auto rows = score_rows(ideas, ratings);
  REQUIRE(rows.size() == 3);
  // novelty raws {2,6,10} -> {0, 0.5, 1}
  CHECK(rows[0].novelty == doctest::Approx(0.0));
  CHECK(rows[1].novelty == doctest::Approx(0.5));
  CHECK(rows[2].novelty == doctest::Approx(1.0));
  // usefulness means {10, 5, 3} -> {1, 2/7, 0}
  CHECK(rows[0].usefulness == doctest::Approx(1.0));
  CHECK(rows[1].usefulness == doctest::Approx(2.0 / 7.0));
  CHECK(rows[2].usefulness == doctest::Approx(0.0));
  for (const auto& r : rows) {
    CHECK(r.creativity == doctest::Approx(r.novelty * r.usefulness));
    CHECK(r.creativity_additive == doctest::Approx(r.novelty + r.usefulness));
  }
}

TEST_CASE("score CSV: additive column only with the flag") {
  std::vector<stats::ScoreRow> rows(1);
  rows[0].idea_id = "a";
  rows[0].task_id = "t";
  rows[0].source = "llm_team";
  rows[0].novelty = 0.25;
  rows[0].usefulness = 0.5;
  rows[0].creativity = 0.125;
  rows[0].creativity_additive = 0.75;
  std::ostringstream off, on;
  write_score_csv(rows, false, off);
  write_score_csv(rows, true, on);
  CHECK(off.str().find("0.125,\n") != std::string::npos);
  CHECK(on.str().find("0.125,0.75\n") != std::string::npos);
  // and the reader round-trips both forms
  std::istringstream off_in(off.str()), on_in(on.str());
  CHECK(!std::isfinite(read_score_csv(off_in)[0].creativity_additive));
  CHECK(read_score_csv(on_in)[0].creativity_additive == doctest::Approx(0.75));
}

TEST_CASE("orphan rating rows are a hard error listing the ids") {
  std::vector<Idea> ideas{fixture_idea("a", "t1")};
  std::vector<JudgeRatingRow> ratings;
  for (int j = 0; j < 5; ++j) {
    ratings.push_back({"a", "j", 5, 5});
    ratings.push_back({"ghost", "j", 5, 5});
  }
  CHECK_THROWS_WITH_AS(score_rows(ideas, ratings), doctest::Contains("ghost"),
                       SchemaError);
}

TEST_CASE("score pipeline drops planted zero-rated and duplicate rows") {
  std::vector<Idea> ideas{fixture_idea("a", "t1"), fixture_idea("zz", "t1"),
                          fixture_idea("dup", "t1")};
  ideas[2].raw_text = ideas[0].raw_text;  // duplicate text
  std::vector<JudgeRatingRow> ratings;
  for (int j = 0; j < 5; ++j) {
    ratings.push_back({"a", "j" + std::to_string(j), 5, 5});
    ratings.push_back({"zz", "j" + std::to_string(j), j < 3 ? 0 : 5, 5});
    ratings.push_back({"dup", "j" + std::to_string(j), 7, 7});
  }
  const auto rows = score_rows(ideas, ratings);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].idea_id == "a");
}

// ---------------------------------------------------------------------------
// report

TEST_CASE("report: two planted groups reproduce d, t, percentiles, top-5%") {
  std::vector<stats::ScoreRow> scores;
  std::vector<double> ga, gb;
  std::mt19937_64 eng(1);
  std::normal_distribution<double> gauss;
  for (int i = 0; i < 40; ++i) {
    stats::ScoreRow r;
    r.task_id = "t";
    r.novelty = 0.5;
    r.usefulness = 0.5;
    r.creativity = 0.2 + 0.05 * gauss(eng);
    r.creativity_additive = std::numeric_limits<double>::quiet_NaN();
    r.idea_id = "h" + std::to_string(i);
    r.source = "human_team";
    ga.push_back(r.creativity);
    scores.push_back(r);
  }
  for (int i = 0; i < 60; ++i) {
    stats::ScoreRow r;
    r.task_id = "t";
    r.novelty = 0.6;
    r.usefulness = 0.4;
    r.creativity = 0.35 + 0.04 * gauss(eng);
    r.creativity_additive = std::numeric_limits<double>::quiet_NaN();
    r.idea_id = "l" + std::to_string(i);
    r.source = "llm_team";
    gb.push_back(r.creativity);
    scores.push_back(r);
  }
  TempDir tmp;
  const auto res = report(scores, nullptr, tmp.path / "rep");
  CHECK(res.files_written.size() >= 3);
  const std::string comp = slurp(tmp.path / "rep" / "comparisons.csv");

  // planted values recomputed with the independent oracle
  const auto tt = oracle::pooled_t(ga, gb);
  std::istringstream is(comp);
  std::string line;
  std::getline(is, line);  // header
  bool found = false;
  while (std::getline(is, line)) {
    const auto f = csv_split(line);
    if (f[0] != "creativity") continue;
    found = true;
    CHECK(std::stod(f[6]) == doctest::Approx(tt.t).epsilon(1e-9));
    CHECK(std::stod(f[7]) == doctest::Approx(tt.df));
  }
  CHECK(found);
}

TEST_CASE("report is idempotent over the same inputs") {
  std::vector<stats::ScoreRow> scores;
  std::mt19937_64 eng(12);
  std::normal_distribution<double> gauss;
  for (int i = 0; i < 20; ++i) {
    stats::ScoreRow r;
    r.idea_id = "x" + std::to_string(i);
    r.task_id = i % 2 ? "t1" : "t2";
    r.source = i % 3 ? "llm_team" : "human_team";
    r.novelty = 0.5 + 0.1 * gauss(eng);
    r.usefulness = 0.5 + 0.1 * gauss(eng);
    r.creativity = r.novelty * r.usefulness;
    r.creativity_additive = std::numeric_limits<double>::quiet_NaN();
    scores.push_back(r);
  }
  TempDir tmp;
  report(scores, nullptr, tmp.path / "a");
  report(scores, nullptr, tmp.path / "b");
  for (const auto& e : fs::directory_iterator(tmp.path / "a"))
    CHECK(slurp(e.path()) == slurp(tmp.path / "b" / e.path().filename()));
}

TEST_CASE("live mode defaults to 10 repetitions, mock to 1") {
  CHECK(parse_run_config(json{{"mode", "mock"}}).repetitions == 1);
  CHECK(parse_run_config(json{{"mode", "live"}}).repetitions == 10);
  CHECK(parse_run_config(json{{"mode", "live"}, {"repetitions", 3}}).repetitions == 3);
}

TEST_CASE("report: single group omits the comparison section") {
  std::vector<stats::ScoreRow> scores;
  for (int i = 0; i < 10; ++i) {
    stats::ScoreRow r;
    r.idea_id = "x" + std::to_string(i);
    r.task_id = "t";
    r.source = "llm_team";
    r.novelty = 0.1 * i;
    r.usefulness = 0.05 * i;
    r.creativity = r.novelty * r.usefulness;
    r.creativity_additive = std::numeric_limits<double>::quiet_NaN();
    scores.push_back(r);
  }
  TempDir tmp;
  report(scores, nullptr, tmp.path / "rep");
  CHECK(fs::exists(tmp.path / "rep" / "descriptives.csv"));
  CHECK(!fs::exists(tmp.path / "rep" / "comparisons.csv"));
}

TEST_CASE("report: feature join produces betas and VIF; empty join errors") {
  std::vector<stats::ScoreRow> scores;
  std::vector<FeatureRow> features;
  std::mt19937_64 eng(3);
  std::normal_distribution<double> gauss;
  for (int i = 0; i < 50; ++i) {
    FeatureRow f;
    f.conversation_id = "conv" + std::to_string(i);
    f.complete = true;
    for (int j = 0; j < 9; ++j) f.values[static_cast<size_t>(j)] = gauss(eng);
    features.push_back(f);

    stats::ScoreRow r;
    r.idea_id = f.conversation_id;  // final ideas carry the conversation id
    r.task_id = "t";
    r.source = "llm_team";
    r.novelty = 0.5;
    r.usefulness = 0.5;
    r.creativity = 0.3 + 0.1 * f.values[1] + 0.02 * gauss(eng);
    r.creativity_additive = std::numeric_limits<double>::quiet_NaN();
    scores.push_back(r);
  }
  TempDir tmp;
  const auto res = report(scores, &features, tmp.path / "rep");
  CHECK(res.joined_rows == 50);
  const std::string betas = slurp(tmp.path / "rep" / "betas.csv");
  CHECK(std::count(betas.begin(), betas.end(), '\n') == 10);  // header + 9
  CHECK(betas.find("global_coherence") != std::string::npos);
  const std::string vif = slurp(tmp.path / "rep" / "vif.csv");
  CHECK(std::count(vif.begin(), vif.end(), '\n') == 10);

  for (auto& f : features) f.conversation_id = "other-" + f.conversation_id;
  CHECK_THROWS_WITH_AS(report(scores, &features, tmp.path / "rep2"),
                       doctest::Contains("join"), ConfigError);
}

TEST_CASE("feature CSV reader tolerates flagged empty cells") {
  std::string csv = feature_csv_header() + "\n";
  csv += "conv1,9,t,gpt-4.1,open,0.5,0.25,3.5,,1.2,0.7,0.4,0.9,0.1,ok,ok,ok,"
         "degenerate,ok,ok,ok,ok,ok\n";
  std::istringstream is(csv);
  const auto rows = read_feature_csv(is);
  REQUIRE(rows.size() == 1);
  CHECK(!rows[0].complete);
  CHECK(rows[0].values[0] == doctest::Approx(0.5));
  CHECK(std::isnan(rows[0].values[3]));
}

// ---------------------------------------------------------------------------
// config parsing

TEST_CASE("run config: bad values raise ConfigError") {
  CHECK_THROWS_AS(parse_run_config(json{{"mode", "other"}}), ConfigError);
  CHECK_THROWS_AS(parse_run_config(json{{"repetitions", 0}}), ConfigError);
  CHECK_THROWS_AS(parse_run_config(json{{"tasks", json::array({"nope"})}}),
                  ConfigError);
  const RunConfig cfg = parse_run_config(json{
      {"mode", "mock"},
      {"conditions", json::array({1, 2, 3})},
      {"tasks", json::array({"plastic_waste"})},
  });
  CHECK(cfg.condition_selectors == std::vector<int>{1, 2, 3});
  CHECK(cfg.tasks.size() == 1);
}

TEST_CASE("config can override the condition matrix with the same columns") {
  json j{{"mode", "mock"},
         {"condition_matrix",
          json::array({json{{"cond", 1},
                            {"agents", 3},
                            {"persona", "none"},
                            {"generation", "interactive"},
                            {"discussion", "-"},
                            {"pool", "-"},
                            {"length", "-"},
                            {"order", "-"}}})}};
  const RunConfig cfg = parse_run_config(j);
  REQUIRE(cfg.matrix.size() == 1);
  CHECK(cfg.matrix[0].cond == 1);
  CHECK_NOTHROW(condition_from_row(cfg.matrix[0]));
}
