#pragma once

// Domain types shared by every other module, plus their file formats:
//   - transcript files: JSON Lines; line 1 is a header object with the
//     flattened condition fields, following lines are one turn each
//   - ideas files: JSON Lines of idea records
//   - ratings files: CSV `idea_id,judge_id,novelty_raw,usefulness_raw`
// Values are immutable after construction and safe to share across threads.

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ideaforge/util.hpp"

namespace ideaforge {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Enums

enum class PersonaPlan { none, same, different };
enum class GenerationMode { absent, interactive, nominal };
enum class Discussion { none, open, instructed, iterative, progressive };
enum class LengthPlan { absent, fixed30, fixed60, cap60_min30 };
enum class OrderPlan { absent, fix, random, raise };
enum class Phase { generation, rating, discussion, synthesis, divergent, convergent };
enum class Action { propose, agree, modify, replace, rate, speak, synthesize, raise_hand };
enum class TranscriptStatus { completed, protocol_failure };
enum class IdeaSource { llm_team, llm_single, human_team };
enum class PersonaSource { generic, human_derived };

namespace detail {

template <typename E>
struct EnumNames;

#define IDEAFORGE_ENUM_NAMES(E, ...)                                   \
  template <>                                                          \
  struct EnumNames<E> {                                                \
    static const std::vector<std::pair<E, const char*>>& table() {     \
      static const std::vector<std::pair<E, const char*>> t{__VA_ARGS__}; \
      return t;                                                        \
    }                                                                  \
  };

IDEAFORGE_ENUM_NAMES(PersonaPlan, {PersonaPlan::none, "none"},
                     {PersonaPlan::same, "same"},
                     {PersonaPlan::different, "different"})
IDEAFORGE_ENUM_NAMES(GenerationMode, {GenerationMode::absent, "absent"},
                     {GenerationMode::interactive, "interactive"},
                     {GenerationMode::nominal, "nominal"})
IDEAFORGE_ENUM_NAMES(Discussion, {Discussion::none, "none"},
                     {Discussion::open, "open"},
                     {Discussion::instructed, "instructed"},
                     {Discussion::iterative, "iterative"},
                     {Discussion::progressive, "progressive"})
IDEAFORGE_ENUM_NAMES(LengthPlan, {LengthPlan::absent, "absent"},
                     {LengthPlan::fixed30, "fixed30"},
                     {LengthPlan::fixed60, "fixed60"},
                     {LengthPlan::cap60_min30, "cap60_min30"})
IDEAFORGE_ENUM_NAMES(OrderPlan, {OrderPlan::absent, "absent"},
                     {OrderPlan::fix, "fix"}, {OrderPlan::random, "random"},
                     {OrderPlan::raise, "raise"})
IDEAFORGE_ENUM_NAMES(Phase, {Phase::generation, "generation"},
                     {Phase::rating, "rating"},
                     {Phase::discussion, "discussion"},
                     {Phase::synthesis, "synthesis"},
                     {Phase::divergent, "divergent"},
                     {Phase::convergent, "convergent"})
IDEAFORGE_ENUM_NAMES(Action, {Action::propose, "propose"},
                     {Action::agree, "agree"}, {Action::modify, "modify"},
                     {Action::replace, "replace"}, {Action::rate, "rate"},
                     {Action::speak, "speak"},
                     {Action::synthesize, "synthesize"},
                     {Action::raise_hand, "raise_hand"})
IDEAFORGE_ENUM_NAMES(TranscriptStatus, {TranscriptStatus::completed, "completed"},
                     {TranscriptStatus::protocol_failure, "protocol_failure"})
IDEAFORGE_ENUM_NAMES(IdeaSource, {IdeaSource::llm_team, "llm_team"},
                     {IdeaSource::llm_single, "llm_single"},
                     {IdeaSource::human_team, "human_team"})
IDEAFORGE_ENUM_NAMES(PersonaSource, {PersonaSource::generic, "generic"},
                     {PersonaSource::human_derived, "human_derived"})

#undef IDEAFORGE_ENUM_NAMES

}  // namespace detail

template <typename E>
const char* enum_name(E v) {
  for (const auto& [e, n] : detail::EnumNames<E>::table())
    if (e == v) return n;
  throw Error("enum_name: unknown enum value");
}

template <typename E>
E enum_from(std::string_view name) {
  for (const auto& [e, n] : detail::EnumNames<E>::table())
    if (name == n) return e;
  throw SchemaError("unknown enum value: " + std::string(name));
}

// ---------------------------------------------------------------------------
// Core records

struct TaskPrompt {
  std::string task_id;
  std::string premise;
  std::string shared_instruction;
};

struct Persona {
  std::string persona_id;
  std::string description;
  PersonaSource source = PersonaSource::generic;
};

struct AgentProfile {
  int agent_index = 0;
  std::string model_name;
  std::optional<double> temperature;  // only for models that accept it
  Persona persona;
};

struct ConditionSpec {
  int condition_id = 0;
  int team_size = 3;  // 3 or 6
  PersonaPlan persona_plan = PersonaPlan::none;
  GenerationMode generation_mode = GenerationMode::absent;
  Discussion discussion = Discussion::none;
  int pool_size = 0;  // 0 or 5
  LengthPlan length_plan = LengthPlan::absent;
  OrderPlan order_plan = OrderPlan::absent;
  std::vector<std::string> model_assignment;

  bool operator==(const ConditionSpec&) const = default;
};

inline void validate_condition(const ConditionSpec& c) {
  if (c.team_size != 3 && c.team_size != 6)
    throw SchemaError("condition " + std::to_string(c.condition_id) +
                      ": team_size must be 3 or 6");
  if (c.pool_size != 0 && c.pool_size != 5)
    throw SchemaError("condition: pool_size must be 0 or 5");
  if (c.pool_size == 5 && c.discussion != Discussion::instructed)
    throw SchemaError("condition: pool_size=5 only valid with instructed discussion");
  if (c.discussion == Discussion::none &&
      c.generation_mode == GenerationMode::absent)
    throw SchemaError("condition: discussion=none requires a generation mode");
  if (c.discussion == Discussion::none && c.order_plan != OrderPlan::absent)
    throw SchemaError("condition: order_plan must be absent without discussion");
  const bool turnwise = c.discussion == Discussion::open ||
                        c.discussion == Discussion::instructed ||
                        c.discussion == Discussion::iterative;
  if (turnwise && c.order_plan == OrderPlan::absent)
    throw SchemaError("condition: turn-based discussion requires an order plan");
  if (turnwise && c.length_plan == LengthPlan::absent)
    throw SchemaError("condition: turn-based discussion requires a length plan");
  if (!turnwise && c.length_plan != LengthPlan::absent)
    throw SchemaError("condition: length plan only valid for turn-based discussion");
}

struct IdeaProvenance {
  std::string conversation_id;
  int condition_id = 0;
  std::string task_id;
  IdeaSource source = IdeaSource::llm_team;

  bool operator==(const IdeaProvenance&) const = default;
};

struct Idea {
  std::string idea_id;
  std::string raw_text;
  std::optional<std::string> harmonized_text;
  IdeaProvenance provenance;

  bool operator==(const Idea&) const = default;
};

struct JudgeRatingRow {
  std::string idea_id;
  std::string judge_id;
  int novelty_raw = 0;     // 0..10, 0 = irrelevant to the task
  int usefulness_raw = 0;  // 0..10
};

struct Turn {
  int turn_index = 0;
  int agent_index = 0;
  Phase phase = Phase::discussion;
  Action action = Action::speak;
  std::string content;
  std::optional<json> structured_payload;
  std::optional<int> token_count;

  bool operator==(const Turn& o) const {
    return turn_index == o.turn_index && agent_index == o.agent_index &&
           phase == o.phase && action == o.action && content == o.content &&
           structured_payload == o.structured_payload &&
           token_count == o.token_count;
  }
};

struct ConversationTranscript {
  std::string conversation_id;
  ConditionSpec condition;
  TaskPrompt task;
  std::uint64_t seed = 0;
  std::vector<Turn> turns;
  std::optional<Idea> final_idea;  // exactly one when status == completed
  TranscriptStatus status = TranscriptStatus::completed;
};

inline bool transcript_equal(const ConversationTranscript& a,
                             const ConversationTranscript& b) {
  return a.conversation_id == b.conversation_id && a.condition == b.condition &&
         a.task.task_id == b.task.task_id && a.task.premise == b.task.premise &&
         a.task.shared_instruction == b.task.shared_instruction &&
         a.seed == b.seed && a.turns == b.turns &&
         a.final_idea == b.final_idea && a.status == b.status;
}

struct RunManifest {
  std::string run_id;
  std::string created_at;
  std::string software_version;
  std::string mode;  // "live" | "mock"
  std::uint64_t master_seed = 0;
  std::string model_plan;
  int repetitions = 1;
  std::vector<int> condition_ids;
  std::vector<TaskPrompt> tasks;
  std::string embedding_model_id;
  json endpoints;  // provider config snapshot (no secrets)
  struct Entry {
    std::string conversation_id;
    int condition_id = 0;
    std::string task_id;
    int repetition = 0;
    std::uint64_t seed = 0;
    std::string status;
  };
  std::vector<Entry> conversations;
};

// ---------------------------------------------------------------------------
// Transcript validation

inline void validate_transcript(const ConversationTranscript& t) {
  if (t.turns.empty()) throw SchemaError("transcript has no turns");
  for (size_t i = 0; i < t.turns.size(); ++i) {
    if (t.turns[i].turn_index != static_cast<int>(i))
      throw SchemaError("turn_index not contiguous at position " +
                        std::to_string(i));
    if (t.turns[i].phase != Phase::rating && t.turns[i].content.empty())
      throw SchemaError("empty content in non-rating turn " +
                        std::to_string(i));
  }
  if (t.status == TranscriptStatus::completed && !t.final_idea.has_value())
    throw SchemaError("completed transcript lacks a final idea");

  // Phase vocabulary check per protocol family.
  std::set<Phase> allowed;
  switch (t.condition.discussion) {
    case Discussion::none:
      allowed = {Phase::generation, Phase::rating};
      break;
    case Discussion::open:
      allowed = {Phase::discussion, Phase::synthesis};
      break;
    case Discussion::instructed:
    case Discussion::iterative:
      allowed = {Phase::generation, Phase::rating, Phase::discussion};
      break;
    case Discussion::progressive:
      allowed = {Phase::generation, Phase::rating, Phase::divergent,
                 Phase::convergent};
      break;
  }
  for (const auto& turn : t.turns) {
    if (!allowed.count(turn.phase))
      throw SchemaError(std::string("phase '") + enum_name(turn.phase) +
                        "' not allowed under discussion '" +
                        enum_name(t.condition.discussion) + "'");
  }
}

// ---------------------------------------------------------------------------
// JSON mapping

inline json condition_to_json(const ConditionSpec& c) {
  return json{{"condition_id", c.condition_id},
              {"team_size", c.team_size},
              {"persona_plan", enum_name(c.persona_plan)},
              {"generation_mode", enum_name(c.generation_mode)},
              {"discussion", enum_name(c.discussion)},
              {"pool_size", c.pool_size},
              {"length_plan", enum_name(c.length_plan)},
              {"order_plan", enum_name(c.order_plan)},
              {"model_assignment", c.model_assignment}};
}

inline ConditionSpec condition_from_json(const json& j) {
  ConditionSpec c;
  c.condition_id = j.at("condition_id").get<int>();
  c.team_size = j.at("team_size").get<int>();
  c.persona_plan = enum_from<PersonaPlan>(j.at("persona_plan").get<std::string>());
  c.generation_mode =
      enum_from<GenerationMode>(j.at("generation_mode").get<std::string>());
  c.discussion = enum_from<Discussion>(j.at("discussion").get<std::string>());
  c.pool_size = j.at("pool_size").get<int>();
  c.length_plan = enum_from<LengthPlan>(j.at("length_plan").get<std::string>());
  c.order_plan = enum_from<OrderPlan>(j.at("order_plan").get<std::string>());
  if (j.contains("model_assignment"))
    c.model_assignment = j.at("model_assignment").get<std::vector<std::string>>();
  return c;
}

inline json idea_to_json(const Idea& idea) {
  json j{{"idea_id", idea.idea_id},
         {"raw_text", idea.raw_text},
         {"provenance",
          {{"conversation_id", idea.provenance.conversation_id},
           {"condition_id", idea.provenance.condition_id},
           {"task_id", idea.provenance.task_id},
           {"source", enum_name(idea.provenance.source)}}}};
  j["harmonized_text"] =
      idea.harmonized_text ? json(*idea.harmonized_text) : json(nullptr);
  return j;
}

inline Idea idea_from_json(const json& j) {
  Idea idea;
  idea.idea_id = j.at("idea_id").get<std::string>();
  idea.raw_text = j.at("raw_text").get<std::string>();
  if (j.contains("harmonized_text") && !j.at("harmonized_text").is_null())
    idea.harmonized_text = j.at("harmonized_text").get<std::string>();
  if (j.contains("provenance")) {
    const json& p = j.at("provenance");
    idea.provenance.conversation_id =
        p.value("conversation_id", std::string());
    idea.provenance.condition_id = p.value("condition_id", 0);
    idea.provenance.task_id = p.value("task_id", std::string());
    idea.provenance.source =
        enum_from<IdeaSource>(p.value("source", std::string("llm_team")));
  }
  return idea;
}

inline json turn_to_json(const Turn& t) {
  json j{{"turn_index", t.turn_index},
         {"agent_index", t.agent_index},
         {"phase", enum_name(t.phase)},
         {"action", enum_name(t.action)},
         {"content", t.content}};
  j["payload"] = t.structured_payload ? *t.structured_payload : json(nullptr);
  j["token_count"] = t.token_count ? json(*t.token_count) : json(nullptr);
  return j;
}

inline Turn turn_from_json(const json& j) {
  Turn t;
  t.turn_index = j.at("turn_index").get<int>();
  t.agent_index = j.at("agent_index").get<int>();
  t.phase = enum_from<Phase>(j.at("phase").get<std::string>());
  t.action = enum_from<Action>(j.at("action").get<std::string>());
  t.content = j.at("content").get<std::string>();
  if (j.contains("payload") && !j.at("payload").is_null())
    t.structured_payload = j.at("payload");
  if (j.contains("token_count") && !j.at("token_count").is_null())
    t.token_count = j.at("token_count").get<int>();
  return t;
}

// ---------------------------------------------------------------------------
// Transcript persistence (JSON Lines)
//
// Line 1 header: flattened condition fields + conversation_id, task_id, seed,
// status, final_idea_id. The full task and final idea objects ride along so a
// transcript file round-trips without side tables; the loader tolerates their
// absence.

inline void save_transcript(const ConversationTranscript& t, std::ostream& os) {
  validate_transcript(t);
  json header = condition_to_json(t.condition);
  header["conversation_id"] = t.conversation_id;
  header["task_id"] = t.task.task_id;
  header["seed"] = t.seed;
  header["status"] = enum_name(t.status);
  header["final_idea_id"] =
      t.final_idea ? json(t.final_idea->idea_id) : json(nullptr);
  header["final_idea"] =
      t.final_idea ? idea_to_json(*t.final_idea) : json(nullptr);
  header["task"] = json{{"task_id", t.task.task_id},
                        {"premise", t.task.premise},
                        {"shared_instruction", t.task.shared_instruction}};
  os << header.dump() << '\n';
  for (const Turn& turn : t.turns) os << turn_to_json(turn).dump() << '\n';
  if (!os) throw Error("transcript write failed");
}

inline std::string transcript_to_string(const ConversationTranscript& t) {
  std::ostringstream os;
  save_transcript(t, os);
  return os.str();
}

inline std::vector<ConversationTranscript> load_transcripts(std::istream& is) {
  std::vector<ConversationTranscript> out;
  ConversationTranscript cur;
  bool in_record = false;
  std::string line;
  size_t line_no = 0;

  auto flush = [&]() {
    if (!in_record) return;
    validate_transcript(cur);
    out.push_back(std::move(cur));
    cur = ConversationTranscript();
    in_record = false;
  };

  while (std::getline(is, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw SchemaError("line " + std::to_string(line_no) +
                        ": malformed JSON: " + e.what());
    }
    try {
      if (j.contains("conversation_id")) {  // header starts a new record
        flush();
        in_record = true;
        cur.conversation_id = j.at("conversation_id").get<std::string>();
        cur.condition = condition_from_json(j);
        cur.seed = j.at("seed").get<std::uint64_t>();
        cur.status = enum_from<TranscriptStatus>(j.at("status").get<std::string>());
        if (j.contains("task") && !j.at("task").is_null()) {
          cur.task.task_id = j["task"].value("task_id", std::string());
          cur.task.premise = j["task"].value("premise", std::string());
          cur.task.shared_instruction =
              j["task"].value("shared_instruction", std::string());
        } else {
          cur.task.task_id = j.value("task_id", std::string());
        }
        if (j.contains("final_idea") && !j.at("final_idea").is_null()) {
          cur.final_idea = idea_from_json(j.at("final_idea"));
        } else if (j.contains("final_idea_id") && !j.at("final_idea_id").is_null()) {
          Idea stub;
          stub.idea_id = j.at("final_idea_id").get<std::string>();
          cur.final_idea = stub;
        }
      } else {
        if (!in_record)
          throw SchemaError("turn record before any header");
        cur.turns.push_back(turn_from_json(j));
      }
    } catch (const json::exception& e) {
      throw SchemaError("line " + std::to_string(line_no) + ": " + e.what());
    } catch (const SchemaError& e) {
      throw SchemaError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  flush();
  return out;
}

// ---------------------------------------------------------------------------
// Ideas / ratings files

inline void save_ideas(const std::vector<Idea>& ideas, std::ostream& os) {
  for (const Idea& idea : ideas) os << idea_to_json(idea).dump() << '\n';
  if (!os) throw Error("ideas write failed");
}

inline std::vector<Idea> load_ideas(std::istream& is) {
  std::vector<Idea> out;
  std::string line;
  size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      out.push_back(idea_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw SchemaError("ideas line " + std::to_string(line_no) + ": " +
                        e.what());
    }
  }
  return out;
}

inline void save_ratings_csv(const std::vector<JudgeRatingRow>& rows,
                             std::ostream& os) {
  os << "idea_id,judge_id,novelty_raw,usefulness_raw\n";
  for (const auto& r : rows)
    os << csv_escape(r.idea_id) << ',' << csv_escape(r.judge_id) << ','
       << r.novelty_raw << ',' << r.usefulness_raw << '\n';
}

inline std::vector<JudgeRatingRow> load_ratings_csv(std::istream& is) {
  std::vector<JudgeRatingRow> out;
  std::string line;
  size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto f = csv_split(line);
    if (line_no == 1 && !f.empty() && f[0] == "idea_id") continue;  // header
    if (f.size() != 4)
      throw SchemaError("ratings line " + std::to_string(line_no) +
                        ": expected 4 fields, got " + std::to_string(f.size()));
    JudgeRatingRow r;
    r.idea_id = f[0];
    r.judge_id = f[1];
    try {
      r.novelty_raw = std::stoi(f[2]);
      r.usefulness_raw = std::stoi(f[3]);
    } catch (const std::exception&) {
      throw SchemaError("ratings line " + std::to_string(line_no) +
                        ": non-integer rating");
    }
    if (r.novelty_raw < 0 || r.novelty_raw > 10 || r.usefulness_raw < 0 ||
        r.usefulness_raw > 10)
      throw SchemaError("ratings line " + std::to_string(line_no) +
                        ": rating outside 0..10");
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Validity filtering

struct DroppedIdea {
  Idea idea;
  std::string reason;  // "zero-rated" | "duplicate"
};

struct ExclusionResult {
  std::vector<Idea> kept;
  std::vector<DroppedIdea> dropped;
};

// Drops ideas with >=3 zero ratings on either dimension among the judges and
// exact duplicates (normalized text equality, earliest occurrence kept).
// kept + dropped always partitions the input.
inline ExclusionResult exclude_invalid_ideas(
    const std::vector<Idea>& ideas, const std::vector<JudgeRatingRow>& ratings) {
  std::map<std::string, std::pair<int, int>> zero_counts;  // idea -> (nov, use)
  std::set<std::string> rated;
  for (const auto& r : ratings) {
    rated.insert(r.idea_id);
    auto& zc = zero_counts[r.idea_id];
    if (r.novelty_raw == 0) ++zc.first;
    if (r.usefulness_raw == 0) ++zc.second;
  }
  for (const auto& idea : ideas)
    if (!rated.count(idea.idea_id))
      throw SchemaError("idea without ratings: " + idea.idea_id);

  ExclusionResult res;
  std::set<std::string> seen_norm;
  for (const auto& idea : ideas) {
    const auto& zc = zero_counts[idea.idea_id];
    if (zc.first >= 3 || zc.second >= 3) {
      res.dropped.push_back({idea, "zero-rated"});
      continue;
    }
    std::string norm = normalize_for_dedup(idea.raw_text);
    if (!seen_norm.insert(norm).second) {
      res.dropped.push_back({idea, "duplicate"});
      continue;
    }
    res.kept.push_back(idea);
  }
  return res;
}

}  // namespace ideaforge
