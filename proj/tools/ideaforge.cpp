// ideaforge CLI: run the experiment matrix, analyze transcripts, score ideas,
// harmonize idea text, build report tables, and replay-verify mock runs.
//
// Exit codes: 0 success, 2 config error, 3 run finished with partial
// failures, 1 any other error (including a failed replay verification).

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ideaforge/chat.hpp"
#include "ideaforge/runner.hpp"
#include "ideaforge/version.hpp"

namespace fs = std::filesystem;
using namespace ideaforge;

namespace {

// Offline stand-in for the harmonization endpoint: returns the idea text
// verbatim (the user prompt has a fixed prefix, so stripping it is exact).
class EchoHarmonizeGateway : public chat::ChatGateway {
 public:
  chat::ChatReply complete(const chat::ChatRequest& req) override {
    chat::validate_request(req);
    const std::string prefix = prompts::harmonization_user_prompt("");
    std::string text = req.messages.back().content;
    if (text.rfind(prefix, 0) == 0) text = text.substr(prefix.size());
    chat::ChatReply r;
    r.content = text;
    r.token_usage.completion = static_cast<long long>(word_count(text));
    return r;
  }
};

runner::EmbeddingSpec load_embedding_spec(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open embeddings config: " + path);
  json j;
  try {
    j = json::parse(f);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("embeddings config parse error: ") + e.what());
  }
  runner::EmbeddingSpec spec;
  spec.mode = j.value("mode", spec.mode);
  spec.model_id = j.value("model_id", spec.model_id);
  spec.dim = j.value("dim", spec.dim);
  spec.mock_seed = j.value("mock_seed", spec.mock_seed);
  spec.prefix_roles = j.value("prefix_roles", spec.prefix_roles);
  if (j.contains("cache_dir")) spec.cache_dir = j.at("cache_dir").get<std::string>();
  if (j.contains("endpoint"))
    spec.endpoint = runner::endpoint_from_json(j.at("endpoint"));
  return spec;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ideaforge: multi-agent ideation experiments and semantic "
               "trajectory analytics"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  // --- run ---------------------------------------------------------------
  auto* cmd_run = app.add_subcommand("run", "Execute the experiment matrix");
  std::string run_config;
  bool run_mock = false;
  cmd_run->add_option("--config", run_config, "Run config JSON file")->required();
  cmd_run->add_flag("--mock", run_mock, "Force mock mode");

  // --- analyze -----------------------------------------------------------
  auto* cmd_analyze =
      app.add_subcommand("analyze", "Compute trajectory features for transcripts");
  std::string an_transcripts, an_embeddings, an_out = "features.csv";
  std::string an_projections;
  cmd_analyze->add_option("--transcripts", an_transcripts, "Transcript directory")
      ->required();
  cmd_analyze->add_option("--embeddings", an_embeddings,
                          "Embedding config JSON file")
      ->required();
  cmd_analyze->add_option("--out", an_out, "Feature CSV output path");
  cmd_analyze->add_option("--projections", an_projections,
                          "Optional 2-D projection CSV output path");

  // --- score ---------------------------------------------------------------
  auto* cmd_score = app.add_subcommand("score", "Normalize ratings into scores");
  std::string sc_ideas, sc_ratings, sc_out = "scores.csv";
  bool sc_additive = false;
  bool sc_per_judge = false;
  cmd_score->add_option("--ideas", sc_ideas, "Ideas JSONL file")->required();
  cmd_score->add_option("--ratings", sc_ratings, "Ratings CSV file")->required();
  cmd_score->add_flag("--additive", sc_additive,
                      "Populate the additive creativity column");
  cmd_score->add_flag("--per-judge-normalization", sc_per_judge,
                      "Min-max each judge before averaging");
  cmd_score->add_option("--out", sc_out, "Score CSV output path");

  // --- harmonize -----------------------------------------------------------
  auto* cmd_harm = app.add_subcommand("harmonize", "Paraphrase ideas uniformly");
  std::string hz_ideas, hz_out = "ideas_harmonized.jsonl", hz_endpoint, hz_model =
      "gpt-4.1";
  bool hz_mock = false;
  cmd_harm->add_option("--ideas", hz_ideas, "Ideas JSONL file")->required();
  cmd_harm->add_option("--out", hz_out, "Output JSONL path");
  cmd_harm->add_option("--endpoint-config", hz_endpoint,
                       "Endpoint config JSON for the paraphrasing model");
  cmd_harm->add_option("--model", hz_model, "Paraphrasing model name");
  cmd_harm->add_flag("--mock", hz_mock, "Echo ideas instead of calling a model");

  // --- report ----------------------------------------------------------------
  auto* cmd_report = app.add_subcommand("report", "Summary tables from scores");
  std::string rp_scores, rp_features, rp_out = "report";
  cmd_report->add_option("--scores", rp_scores, "Score CSV file")->required();
  cmd_report->add_option("--features", rp_features, "Feature CSV file");
  cmd_report->add_option("--out", rp_out, "Output directory");

  // --- replay -----------------------------------------------------------------
  auto* cmd_replay = app.add_subcommand("replay", "Verify a mock run manifest");
  std::string rl_manifest, rl_transcripts, rl_scratch;
  cmd_replay->add_option("--manifest", rl_manifest, "Manifest JSON file")
      ->required();
  cmd_replay->add_option("--transcripts", rl_transcripts,
                         "Transcript directory (default: alongside manifest)");
  cmd_replay->add_option("--scratch", rl_scratch,
                         "Scratch directory for the re-run");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*cmd_run) {
      runner::RunConfig cfg = runner::load_run_config(run_config);
      if (run_mock) cfg.mode = "mock";
      const runner::RunResult res = runner::run_experiment(cfg);
      std::cout << "run " << res.manifest.run_id << ": " << res.completed
                << " completed, " << res.failures << " failed, " << res.skipped
                << " resumed\n"
                << "outputs in " << cfg.output_dir << "\n";
      return res.failures > 0 ? 3 : 0;
    }

    if (*cmd_analyze) {
      const auto spec = load_embedding_spec(an_embeddings);
      std::optional<fs::path> proj;
      if (!an_projections.empty()) proj = fs::path(an_projections);
      const auto res = runner::analyze(an_transcripts, spec, an_out, proj);
      std::cout << "analyzed " << res.analyzed << " conversations, skipped "
                << res.skipped << "; features in " << an_out << "\n";
      return 0;
    }

    if (*cmd_score) {
      std::ifstream fi(sc_ideas);
      if (!fi) throw ConfigError("cannot open ideas file: " + sc_ideas);
      std::ifstream fr(sc_ratings);
      if (!fr) throw ConfigError("cannot open ratings file: " + sc_ratings);
      const auto ideas = load_ideas(fi);
      const auto ratings = load_ratings_csv(fr);
      const auto rows = runner::score_rows(
          ideas, ratings,
          sc_per_judge ? stats::JudgeAggregation::minmax_then_mean
                       : stats::JudgeAggregation::mean_then_minmax);
      std::ofstream out(sc_out);
      if (!out) throw ConfigError("cannot write " + sc_out);
      runner::write_score_csv(rows, sc_additive, out);
      std::cout << "scored " << rows.size() << " ideas -> " << sc_out << "\n";
      return 0;
    }

    if (*cmd_harm) {
      std::ifstream fi(hz_ideas);
      if (!fi) throw ConfigError("cannot open ideas file: " + hz_ideas);
      const auto ideas = load_ideas(fi);

      std::unique_ptr<chat::ChatGateway> gateway;
      if (hz_mock) {
        gateway = std::make_unique<EchoHarmonizeGateway>();
      } else if (!hz_endpoint.empty()) {
        std::ifstream fe(hz_endpoint);
        if (!fe) throw ConfigError("cannot open endpoint config: " + hz_endpoint);
        gateway = std::make_unique<chat::HttpChatGateway>(
            runner::endpoint_from_json(json::parse(fe)));
      } else {
        throw ConfigError("harmonize needs --endpoint-config or --mock");
      }

      std::vector<Idea> out_ideas;
      int style = 0, length = 0;
      for (const Idea& idea : ideas) {
        const auto res = chat::harmonize_idea(idea, *gateway, hz_model);
        style += res.style_violation;
        length += res.length_violation;
        out_ideas.push_back(res.idea);
      }
      std::ofstream out(hz_out);
      if (!out) throw ConfigError("cannot write " + hz_out);
      save_ideas(out_ideas, out);
      std::cout << "harmonized " << out_ideas.size() << " ideas -> " << hz_out
                << " (style violations: " << style
                << ", length violations: " << length << ")\n";
      return 0;
    }

    if (*cmd_report) {
      std::ifstream fs_scores(rp_scores);
      if (!fs_scores) throw ConfigError("cannot open scores file: " + rp_scores);
      const auto scores = runner::read_score_csv(fs_scores);
      std::optional<std::vector<runner::FeatureRow>> features;
      if (!rp_features.empty()) {
        std::ifstream ff(rp_features);
        if (!ff) throw ConfigError("cannot open features file: " + rp_features);
        features = runner::read_feature_csv(ff);
      }
      const auto res = runner::report(
          scores, features ? &*features : nullptr, rp_out);
      std::cout << "report written to " << rp_out << "/ (";
      for (size_t i = 0; i < res.files_written.size(); ++i)
        std::cout << (i ? ", " : "") << res.files_written[i];
      std::cout << ")\n";
      return 0;
    }

    if (*cmd_replay) {
      const fs::path manifest(rl_manifest);
      fs::path transcripts = rl_transcripts.empty()
                                 ? manifest.parent_path() / "transcripts"
                                 : fs::path(rl_transcripts);
      fs::path scratch =
          rl_scratch.empty()
              ? fs::temp_directory_path() /
                    ("ideaforge-replay-" + std::to_string(::getpid()))
              : fs::path(rl_scratch);
      const auto verdict = runner::replay(manifest, transcripts, scratch);
      std::cout << (verdict.pass ? "PASS" : "FAIL") << ": " << verdict.detail
                << "\n";
      if (verdict.pass && rl_scratch.empty()) fs::remove_all(scratch);
      return verdict.pass ? 0 : 1;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
