#pragma once

// Deterministic state machines for the generation phase and the five
// discussion structures. Every conversation is strictly sequential inside;
// all randomness comes from the DetRng handed in, so identical seeds and
// scripted gateways reproduce transcripts byte for byte.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ideaforge/chat.hpp"
#include "ideaforge/corpus.hpp"
#include "ideaforge/prompts.hpp"
#include "ideaforge/util.hpp"

namespace ideaforge::proto {

// Reply did not match a required action/idea format; the engine re-prompts
// a bounded number of times before declaring protocol failure.
struct ActionParseError : Error {
  using Error::Error;
};

struct LengthPolicy {
  int max_turns = 30;
  int min_rounds_before_agree = 0;
};

inline LengthPolicy length_policy_for(LengthPlan plan) {
  switch (plan) {
    case LengthPlan::fixed30: return {30, 0};
    case LengthPlan::fixed60: return {60, 0};
    case LengthPlan::cap60_min30: return {60, 30};
    case LengthPlan::absent: break;
  }
  throw Error("length policy requested for a condition without one");
}

struct AgentAction {
  enum class Kind { agree, modify, replace };
  Kind kind = Kind::agree;
  std::string idea_text;  // empty for agree
  std::string reason;
};

// Case-insensitive leading keyword Agree/Modify/Replace; Modify/Replace split
// on the last " - Reason:" marker; everything trimmed.
inline AgentAction parse_agent_action(const std::string& text) {
  const std::string t = trim(text);
  AgentAction a;
  size_t body_at = 0;
  if (ifind(t, "agree") == 0) {
    a.kind = AgentAction::Kind::agree;
    return a;
  } else if (ifind(t, "modify") == 0) {
    a.kind = AgentAction::Kind::modify;
    body_at = 6;
  } else if (ifind(t, "replace") == 0) {
    a.kind = AgentAction::Kind::replace;
    body_at = 7;
  } else {
    throw ActionParseError("no recognized action keyword in reply");
  }
  std::string body = trim(t.substr(body_at));
  if (!body.empty() && body[0] == ':') body = trim(body.substr(1));
  // split on the last "- Reason:" marker at a word boundary; the idea text
  // itself may contain hyphens
  size_t last = std::string::npos;
  for (size_t at = ifind(body, "- reason:"); at != std::string::npos;
       at = ifind(body, "- reason:", at + 1)) {
    if (at == 0 || std::isspace(static_cast<unsigned char>(body[at - 1])))
      last = at;
  }
  if (last != std::string::npos) {
    a.reason = trim(body.substr(last + 9));
    body = trim(body.substr(0, last));
  }
  a.idea_text = body;
  if (a.idea_text.empty())
    throw ActionParseError("modify/replace without idea text");
  return a;
}

// ---------------------------------------------------------------------------
// Team wiring

struct Team {
  ConditionSpec condition;
  TaskPrompt task;
  std::vector<AgentProfile> agents;
  std::vector<chat::ChatGateway*> gateways;  // one shared, or one per agent

  chat::ChatGateway& gateway_for(int agent_index) const {
    if (gateways.empty()) throw Error("team has no gateways");
    return *gateways[static_cast<size_t>(agent_index) % gateways.size()];
  }
  int size() const { return static_cast<int>(agents.size()); }
};

class TranscriptBuilder {
 public:
  TranscriptBuilder(std::string conversation_id, const Team& team,
                    std::uint64_t seed) {
    t_.conversation_id = std::move(conversation_id);
    t_.condition = team.condition;
    t_.task = team.task;
    t_.seed = seed;
  }

  void add(int agent_index, Phase phase, Action action, std::string content,
           std::optional<json> payload = std::nullopt,
           std::optional<int> token_count = std::nullopt) {
    Turn turn;
    turn.turn_index = static_cast<int>(t_.turns.size());
    turn.agent_index = agent_index;
    turn.phase = phase;
    turn.action = action;
    turn.content = std::move(content);
    turn.structured_payload = std::move(payload);
    turn.token_count = token_count;
    t_.turns.push_back(std::move(turn));
  }

  const std::vector<Turn>& turns() const { return t_.turns; }
  const std::string& conversation_id() const { return t_.conversation_id; }

  std::string next_idea_id() {
    return t_.conversation_id + "-i" + std::to_string(idea_seq_++);
  }

  // The team's final idea takes the conversation id as its idea id, which is
  // what score tables later join against feature rows on. In-discussion ids
  // (referenced from turn payloads) stay as minted.
  ConversationTranscript finish(std::optional<Idea> final_idea,
                                TranscriptStatus status) {
    if (final_idea) final_idea->idea_id = t_.conversation_id;
    t_.final_idea = std::move(final_idea);
    t_.status = status;
    return std::move(t_);
  }

 private:
  ConversationTranscript t_;
  int idea_seq_ = 0;
};

namespace detail {

inline chat::ChatReply ask(const Team& team, int agent_index,
                           const std::string& user_prompt) {
  const AgentProfile& profile = team.agents[static_cast<size_t>(agent_index)];
  chat::ChatRequest req;
  req.model_name = profile.model_name;
  req.temperature = profile.temperature;
  req.messages.push_back({"system", profile.persona.description});
  req.messages.push_back({"user", user_prompt});
  return team.gateway_for(agent_index).complete(req);
}

// Rating with up to two format-reminder re-prompts, then protocol failure.
struct RatedReply {
  int value = 0;
  chat::ChatReply reply;
};

inline RatedReply rate_with_retry(const Team& team, int agent_index,
                                  std::string prompt, int lo, int hi) {
  for (int attempt = 0; attempt < 3; ++attempt) {
    chat::ChatReply reply = ask(team, agent_index, prompt);
    try {
      return {chat::parse_scalar_rating(reply.content, lo, hi), reply};
    } catch (const GatewayError&) {
      prompt += "\n\nReminder: reply with a single integer between " +
                std::to_string(lo) + " and " + std::to_string(hi) +
                " and nothing else.";
    }
  }
  throw ProtocolFailure("agent " + std::to_string(agent_index) +
                        " produced no parseable rating after retries");
}

inline std::string discussion_digest(const TranscriptBuilder& tb) {
  std::string d;
  for (const Turn& t : tb.turns()) {
    if (t.phase != Phase::discussion) continue;
    d += "Agent " + std::to_string(t.agent_index + 1) + ": " + t.content + "\n";
  }
  return d;
}

inline Idea make_idea(TranscriptBuilder& tb, const Team& team, std::string text) {
  Idea idea;
  idea.idea_id = tb.next_idea_id();
  idea.raw_text = std::move(text);
  idea.provenance.conversation_id = tb.conversation_id();
  idea.provenance.condition_id = team.condition.condition_id;
  idea.provenance.task_id = team.task.task_id;
  idea.provenance.source = IdeaSource::llm_team;
  return idea;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Speaker selection

// fix: round-robin from the previous speaker, skipping ineligible agents.
// random: uniform over eligible agents. raise: every eligible agent rates its
// desire to speak 1-7, highest wins, ties to the lowest agent index; the
// scores are returned through `desires_out` for the caller to log.
inline int next_speaker(OrderPlan plan, const std::vector<int>& eligible,
                        int prev_speaker, const Team& team, DetRng& rng,
                        const std::string& current_idea_text,
                        json* desires_out = nullptr) {
  if (eligible.empty()) throw Error("next_speaker: no eligible agents");
  switch (plan) {
    case OrderPlan::absent:
    case OrderPlan::fix: {
      const int n = team.size();
      for (int step = 1; step <= n; ++step) {
        const int cand = (prev_speaker + step) % n;
        if (std::find(eligible.begin(), eligible.end(), cand) != eligible.end())
          return cand;
      }
      throw Error("next_speaker: rotation found no eligible agent");
    }
    case OrderPlan::random:
      return eligible[rng.uniform_index(eligible.size())];
    case OrderPlan::raise: {
      json desires = json::object();
      int best = eligible.front();
      int best_score = -1;
      for (int a : eligible) {
        const auto rated = detail::rate_with_retry(
            team, a, prompts::desire_prompt(current_idea_text), 1, 7);
        desires[std::to_string(a)] = rated.value;
        if (rated.value > best_score) {  // strict: ties keep the lowest index
          best_score = rated.value;
          best = a;
        }
      }
      if (desires_out) *desires_out = desires;
      return best;
    }
  }
  throw Error("next_speaker: bad order plan");
}

// ---------------------------------------------------------------------------
// Generation-and-selection phase

struct GenerationOutcome {
  std::vector<Idea> ideas;                      // proposal order
  std::vector<std::vector<int>> rating_matrix;  // [agent][idea], 1-10
  std::vector<double> means;                    // per idea
  std::vector<size_t> ranking;  // idea indices, best first, ties earliest
};

// Interactive mode shows each agent all earlier proposals with an instruction
// to differ; nominal mode shows none. Every agent then rates every idea on a
// 1-10 creativity scale and the ranking orders column means (ties keep the
// earliest proposal).
inline GenerationOutcome run_generation_phase(const Team& team,
                                              TranscriptBuilder& tb,
                                              DetRng& rng) {
  (void)rng;
  const GenerationMode mode = team.condition.generation_mode;
  if (mode == GenerationMode::absent)
    throw Error("generation phase requested without a generation mode");
  const bool interactive = mode == GenerationMode::interactive;

  // Enough proposals to cover the initial idea plus any replacement pool.
  const int needed = team.condition.pool_size + 1;
  const int per_agent = std::max(1, (needed + team.size() - 1) / team.size());

  GenerationOutcome out;
  for (int round = 0; round < per_agent; ++round) {
    for (int a = 0; a < team.size(); ++a) {
      std::vector<std::string> earlier;
      for (const Idea& idea : out.ideas) earlier.push_back(idea.raw_text);
      const std::string prompt =
          prompts::generation_prompt(team.task, earlier, interactive);
      chat::ChatReply reply = detail::ask(team, a, prompt);
      std::string text = trim(reply.content);
      if (text.empty()) throw ProtocolFailure("empty generation reply");
      Idea idea = detail::make_idea(tb, team, text);
      tb.add(a, Phase::generation, Action::propose, text,
             json{{"idea_id", idea.idea_id}},
             static_cast<int>(reply.token_usage.completion));
      out.ideas.push_back(std::move(idea));
    }
  }

  out.rating_matrix.assign(static_cast<size_t>(team.size()),
                           std::vector<int>(out.ideas.size(), 0));
  for (int a = 0; a < team.size(); ++a) {
    for (size_t i = 0; i < out.ideas.size(); ++i) {
      const auto rated = detail::rate_with_retry(
          team, a, prompts::rating_prompt(out.ideas[i].raw_text, "creativity"),
          1, 10);
      out.rating_matrix[static_cast<size_t>(a)][i] = rated.value;
      tb.add(a, Phase::rating, Action::rate, rated.reply.content,
             json{{"idea_id", out.ideas[i].idea_id},
                  {"idea_index", i},
                  {"rating", rated.value},
                  {"dimension", "creativity"}},
             static_cast<int>(rated.reply.token_usage.completion));
    }
  }

  out.means.resize(out.ideas.size(), 0.0);
  for (size_t i = 0; i < out.ideas.size(); ++i) {
    double s = 0.0;
    for (int a = 0; a < team.size(); ++a)
      s += out.rating_matrix[static_cast<size_t>(a)][i];
    out.means[i] = s / static_cast<double>(team.size());
  }
  out.ranking.resize(out.ideas.size());
  for (size_t i = 0; i < out.ranking.size(); ++i) out.ranking[i] = i;
  std::stable_sort(out.ranking.begin(), out.ranking.end(),
                   [&](size_t x, size_t y) { return out.means[x] > out.means[y]; });
  return out;
}

inline const Idea& generation_selected(const GenerationOutcome& g) {
  if (g.ranking.empty()) throw Error("generation produced no ideas");
  return g.ideas[g.ranking[0]];
}

// ---------------------------------------------------------------------------
// Discussion state shared by instructed/iterative

struct DiscussionState {
  Idea current_idea;
  int round = 0;
  std::set<int> agreed_agents;
  std::vector<Idea> pool;  // consumed from the front, never refilled
  std::vector<std::pair<int, std::string>> history;  // (round, idea_id)
  int consecutive_same_selection = 0;
};

namespace detail {

// Parse an action reply with up to two format-reminder re-prompts.
struct ParsedAction {
  AgentAction action;
  chat::ChatReply reply;
};

inline ParsedAction action_with_retry(const Team& team, int agent_index,
                                      const std::string& base_prompt) {
  std::string prompt = base_prompt;
  for (int attempt = 0; attempt < 3; ++attempt) {
    chat::ChatReply reply = ask(team, agent_index, prompt);
    try {
      return {parse_agent_action(reply.content), reply};
    } catch (const ActionParseError&) {
      prompt = base_prompt + "\n\n" + prompts::instructed_format_reminder();
    }
  }
  throw ProtocolFailure("agent " + std::to_string(agent_index) +
                        " failed the action format three times");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Instructed discussion: agree / modify / replace over a current idea.

inline ConversationTranscript run_instructed_discussion(
    const Team& team, TranscriptBuilder& tb, Idea initial,
    std::vector<Idea> pool, const LengthPolicy& policy, DetRng& rng) {
  if (initial.raw_text.empty())
    throw Error("instructed discussion needs a non-empty initial idea");
  if (static_cast<int>(pool.size()) != team.condition.pool_size)
    throw Error("pool size does not match the condition");

  DiscussionState st;
  st.current_idea = std::move(initial);
  st.pool = std::move(pool);
  int prev_speaker = -1;

  try {
    for (st.round = 0; st.round < policy.max_turns; ++st.round) {
      if (static_cast<int>(st.agreed_agents.size()) == team.size()) break;

      std::vector<int> eligible;
      for (int a = 0; a < team.size(); ++a)
        if (!st.agreed_agents.count(a)) eligible.push_back(a);

      json desires;
      const int speaker =
          next_speaker(team.condition.order_plan, eligible, prev_speaker, team,
                       rng, st.current_idea.raw_text,
                       team.condition.order_plan == OrderPlan::raise ? &desires
                                                                     : nullptr);
      prev_speaker = speaker;

      const bool agree_enabled = st.round >= policy.min_rounds_before_agree;
      const std::string prompt = prompts::instructed_action_prompt(
          team.task, st.current_idea.raw_text, detail::discussion_digest(tb),
          agree_enabled, !st.pool.empty());
      auto parsed = detail::action_with_retry(team, speaker, prompt);

      // An early Agree is rejected with one re-prompt; if the agent insists,
      // the turn is recorded but has no effect on the agreement set.
      bool rejected_agree = false;
      if (parsed.action.kind == AgentAction::Kind::agree && !agree_enabled) {
        auto second = detail::action_with_retry(
            team, speaker,
            prompt + "\n\n" + prompts::kMarkerAgreeDisabled +
                " until the minimum number of discussion rounds has elapsed; "
                "choose Modify or Replace.");
        if (second.action.kind == AgentAction::Kind::agree) {
          rejected_agree = true;
        }
        parsed = std::move(second);
      }

      json payload;
      if (!desires.is_null() && !desires.empty()) payload["desires"] = desires;

      switch (parsed.action.kind) {
        case AgentAction::Kind::agree: {
          payload["action"] = "agree";
          payload["accepted"] = !rejected_agree;
          if (!rejected_agree) st.agreed_agents.insert(speaker);
          tb.add(speaker, Phase::discussion, Action::agree,
                 trim(parsed.reply.content), payload,
                 static_cast<int>(parsed.reply.token_usage.completion));
          break;
        }
        case AgentAction::Kind::modify: {
          Idea revised = detail::make_idea(tb, team, parsed.action.idea_text);
          payload["action"] = "modify";
          payload["idea_id"] = revised.idea_id;
          if (!parsed.action.reason.empty())
            payload["reason"] = parsed.action.reason;
          st.current_idea = std::move(revised);
          st.agreed_agents.clear();
          tb.add(speaker, Phase::discussion, Action::modify,
                 trim(parsed.reply.content), payload,
                 static_cast<int>(parsed.reply.token_usage.completion));
          break;
        }
        case AgentAction::Kind::replace: {
          Idea replacement;
          if (!st.pool.empty()) {
            replacement = st.pool.front();
            st.pool.erase(st.pool.begin());
            payload["pool_used"] = true;
          } else {
            replacement = detail::make_idea(tb, team, parsed.action.idea_text);
            payload["pool_used"] = false;
          }
          payload["action"] = "replace";
          payload["idea_id"] = replacement.idea_id;
          if (!parsed.action.reason.empty())
            payload["reason"] = parsed.action.reason;
          st.current_idea = std::move(replacement);
          st.agreed_agents.clear();
          tb.add(speaker, Phase::discussion, Action::replace,
                 trim(parsed.reply.content), payload,
                 static_cast<int>(parsed.reply.token_usage.completion));
          break;
        }
      }
      st.history.emplace_back(st.round, st.current_idea.idea_id);
    }
  } catch (const ProtocolFailure&) {
    return tb.finish(std::nullopt, TranscriptStatus::protocol_failure);
  }
  return tb.finish(st.current_idea, TranscriptStatus::completed);
}

// ---------------------------------------------------------------------------
// Iterative refinement: propose, rate {candidate, current, recent}, select.

inline ConversationTranscript run_iterative_refinement(const Team& team,
                                                       TranscriptBuilder& tb,
                                                       Idea initial,
                                                       const LengthPolicy& policy,
                                                       DetRng& rng) {
  if (initial.raw_text.empty())
    throw Error("iterative refinement needs a non-empty initial idea");

  const int stop_after = team.size();  // consecutive identical top selections
  Idea current = std::move(initial);
  std::deque<Idea> recent;  // most recent first, <= 3 distinct, not current
  std::map<std::string, int> proposal_order{{current.idea_id, 0}};
  int next_order = 1;
  int consecutive = 0;
  int prev_speaker = -1;

  std::vector<int> everyone;
  for (int a = 0; a < team.size(); ++a) everyone.push_back(a);

  try {
    for (int round = 1; round <= policy.max_turns; ++round) {
      const int proposer =
          next_speaker(team.condition.order_plan, everyone, prev_speaker, team,
                       rng, current.raw_text, nullptr);
      prev_speaker = proposer;

      std::vector<std::string> recent_texts;
      for (const Idea& r : recent) recent_texts.push_back(r.raw_text);
      chat::ChatReply reply = detail::ask(
          team, proposer,
          prompts::iterative_propose_prompt(team.task, current.raw_text,
                                            recent_texts));
      const std::string text = trim(reply.content);
      if (text.empty()) throw ProtocolFailure("empty candidate idea");
      Idea candidate = detail::make_idea(tb, team, text);
      proposal_order[candidate.idea_id] = next_order++;
      tb.add(proposer, Phase::discussion, Action::propose, text,
             json{{"idea_id", candidate.idea_id}, {"round", round}},
             static_cast<int>(reply.token_usage.completion));

      // Rating set: candidate, current, then the recency window.
      std::vector<const Idea*> slate{&candidate, &current};
      for (const Idea& r : recent) slate.push_back(&r);

      std::vector<double> means(slate.size(), 0.0);
      for (int a = 0; a < team.size(); ++a) {
        for (size_t i = 0; i < slate.size(); ++i) {
          const auto rated = detail::rate_with_retry(
              team, a, prompts::rating_prompt(slate[i]->raw_text, "creativity"),
              1, 10);
          means[i] += rated.value;
          tb.add(a, Phase::rating, Action::rate, rated.reply.content,
                 json{{"idea_id", slate[i]->idea_id},
                      {"rating", rated.value},
                      {"round", round},
                      {"dimension", "creativity"}},
                 static_cast<int>(rated.reply.token_usage.completion));
        }
      }
      for (double& m : means) m /= static_cast<double>(team.size());

      // Highest mean wins; the current idea survives ties, otherwise the
      // earliest-proposed idea among the tied leaders.
      const double best = *std::max_element(means.begin(), means.end());
      size_t winner = 1;  // index of current in the slate
      if (means[1] < best) {
        int best_order = std::numeric_limits<int>::max();
        for (size_t i = 0; i < slate.size(); ++i) {
          if (means[i] < best) continue;
          const int ord = proposal_order.at(slate[i]->idea_id);
          if (ord < best_order) {
            best_order = ord;
            winner = i;
          }
        }
      }

      const Idea selected = *slate[winner];
      if (selected.idea_id == current.idea_id) {
        ++consecutive;
      } else {
        consecutive = 1;
      }

      // Everything rated but not selected flows into the recency window,
      // candidate first, then the old current, then older entries.
      std::deque<Idea> new_recent;
      auto push_distinct = [&](const Idea& idea) {
        if (idea.idea_id == selected.idea_id) return;
        for (const Idea& r : new_recent)
          if (r.idea_id == idea.idea_id) return;
        if (new_recent.size() < 3) new_recent.push_back(idea);
      };
      push_distinct(candidate);
      push_distinct(current);
      for (const Idea& r : recent) push_distinct(r);
      recent = std::move(new_recent);
      current = selected;

      tb.add(proposer, Phase::rating, Action::rate,
             "selection: " + current.idea_id,
             json{{"selected_idea_id", current.idea_id},
                  {"round", round},
                  {"consecutive_same_selection", consecutive},
                  {"selection", true}},
             0);

      if (consecutive >= stop_after) break;
    }
  } catch (const ProtocolFailure&) {
    return tb.finish(std::nullopt, TranscriptStatus::protocol_failure);
  }
  return tb.finish(current, TranscriptStatus::completed);
}

// ---------------------------------------------------------------------------
// Open discussion: free-form turns, then one rng-selected agent synthesizes.

inline ConversationTranscript run_open_discussion(const Team& team,
                                                  TranscriptBuilder& tb,
                                                  const LengthPolicy& policy,
                                                  DetRng& rng) {
  std::vector<int> everyone;
  for (int a = 0; a < team.size(); ++a) everyone.push_back(a);
  int prev_speaker = -1;

  try {
    for (int turn = 0; turn < policy.max_turns; ++turn) {
      const int speaker =
          next_speaker(team.condition.order_plan, everyone, prev_speaker, team,
                       rng, "", nullptr);
      prev_speaker = speaker;
      chat::ChatReply reply = detail::ask(
          team, speaker,
          prompts::open_speak_prompt(team.task, detail::discussion_digest(tb)));
      const std::string text = trim(reply.content);
      if (text.empty()) throw ProtocolFailure("empty discussion reply");
      tb.add(speaker, Phase::discussion, Action::speak, text, std::nullopt,
             static_cast<int>(reply.token_usage.completion));
    }

    const int synthesizer = static_cast<int>(rng.uniform_index(
        static_cast<size_t>(team.size())));
    chat::ChatReply reply = detail::ask(
        team, synthesizer,
        prompts::synthesis_prompt(team.task, detail::discussion_digest(tb)));
    const std::string text = trim(reply.content);
    if (text.empty()) throw ProtocolFailure("empty synthesis");
    json payload{{"synthesizer", synthesizer}};
    if (word_count(text) > 120) payload["length_violation"] = true;
    tb.add(synthesizer, Phase::synthesis, Action::synthesize, text, payload,
           static_cast<int>(reply.token_usage.completion));

    Idea final = detail::make_idea(tb, team, text);
    return tb.finish(final, TranscriptStatus::completed);
  } catch (const ProtocolFailure&) {
    return tb.finish(std::nullopt, TranscriptStatus::protocol_failure);
  }
}

// ---------------------------------------------------------------------------
// Progressive improvement: divergent 5-idea generation, novelty ranking,
// convergent refinement, creativity vote.

namespace detail {

// Exactly five numbered lines ("1. idea"), or throws.
inline std::vector<std::string> parse_five_ideas(const std::string& reply) {
  std::vector<std::string> ideas;
  std::string line;
  std::istringstream is(reply);
  while (std::getline(is, line)) {
    std::string t = trim(line);
    size_t i = 0;
    while (i < t.size() && std::isdigit(static_cast<unsigned char>(t[i]))) ++i;
    if (i == 0 || i > 2) continue;
    if (i >= t.size() || (t[i] != '.' && t[i] != ')' && t[i] != ':' && t[i] != '-'))
      continue;
    std::string body = trim(t.substr(i + 1));
    if (!body.empty()) ideas.push_back(std::move(body));
  }
  if (ideas.size() != 5)
    throw ActionParseError("expected exactly 5 numbered ideas, got " +
                           std::to_string(ideas.size()));
  return ideas;
}

// Agent visit order for a whole phase (everyone exactly once).
inline std::vector<int> phase_order(const Team& team, DetRng& rng) {
  std::vector<int> order;
  if (team.condition.order_plan == OrderPlan::random) {
    std::vector<int> remaining;
    for (int a = 0; a < team.size(); ++a) remaining.push_back(a);
    while (!remaining.empty()) {
      const size_t pick = rng.uniform_index(remaining.size());
      order.push_back(remaining[pick]);
      remaining.erase(remaining.begin() + static_cast<long>(pick));
    }
  } else {
    for (int a = 0; a < team.size(); ++a) order.push_back(a);
  }
  return order;
}

}  // namespace detail

inline ConversationTranscript run_progressive(const Team& team,
                                              TranscriptBuilder& tb,
                                              const std::vector<Idea>& prior_top_ideas,
                                              DetRng& rng) {
  if (prior_top_ideas.empty())
    throw Error("progressive improvement needs prior top ideas");

  try {
    std::vector<std::string> top_texts;
    for (const Idea& idea : prior_top_ideas) top_texts.push_back(idea.raw_text);

    // Phase 1: five radically novel ideas per agent.
    std::vector<Idea> candidates;
    for (int a : detail::phase_order(team, rng)) {
      const std::string base =
          prompts::progressive_divergent_prompt(team.task, top_texts);
      std::vector<std::string> five;
      chat::ChatReply reply;
      std::string prompt = base;
      bool ok = false;
      for (int attempt = 0; attempt < 2; ++attempt) {  // one retry
        reply = detail::ask(team, a, prompt);
        try {
          five = detail::parse_five_ideas(reply.content);
          ok = true;
          break;
        } catch (const ActionParseError&) {
          prompt = base + "\n\n" + prompts::progressive_divergent_reminder();
        }
      }
      if (!ok)
        throw ProtocolFailure("agent " + std::to_string(a) +
                              " did not return exactly 5 ideas");
      json ids = json::array();
      for (const std::string& text : five) {
        Idea idea = detail::make_idea(tb, team, text);
        ids.push_back(idea.idea_id);
        candidates.push_back(std::move(idea));
      }
      tb.add(a, Phase::divergent, Action::propose, trim(reply.content),
             json{{"idea_ids", ids}},
             static_cast<int>(reply.token_usage.completion));
    }

    // Phase 2a: everyone rates every candidate on novelty.
    std::vector<double> novelty_means(candidates.size(), 0.0);
    for (int a = 0; a < team.size(); ++a) {
      for (size_t i = 0; i < candidates.size(); ++i) {
        const auto rated = detail::rate_with_retry(
            team, a, prompts::rating_prompt(candidates[i].raw_text, "novelty"),
            1, 10);
        novelty_means[i] += rated.value;
        tb.add(a, Phase::rating, Action::rate, rated.reply.content,
               json{{"idea_id", candidates[i].idea_id},
                    {"rating", rated.value},
                    {"dimension", "novelty"}},
               static_cast<int>(rated.reply.token_usage.completion));
      }
    }
    for (double& m : novelty_means) m /= static_cast<double>(team.size());

    // Top team_size advance (ties keep the earlier candidate).
    std::vector<size_t> order(candidates.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](size_t x, size_t y) {
      return novelty_means[x] > novelty_means[y];
    });
    const size_t advance_n =
        std::min<size_t>(static_cast<size_t>(team.size()), candidates.size());

    // Phase 2b: agent i refines advanced idea i.
    std::vector<Idea> refined;
    const std::vector<int> refine_order = detail::phase_order(team, rng);
    for (size_t i = 0; i < advance_n; ++i) {
      const int a = refine_order[i % refine_order.size()];
      const Idea& src = candidates[order[i]];
      chat::ChatReply reply = detail::ask(
          team, a, prompts::progressive_refine_prompt(team.task, src.raw_text));
      const std::string text = trim(reply.content);
      if (text.empty()) throw ProtocolFailure("empty refinement");
      Idea idea = detail::make_idea(tb, team, text);
      tb.add(a, Phase::convergent, Action::modify, text,
             json{{"idea_id", idea.idea_id}, {"refines", src.idea_id}},
             static_cast<int>(reply.token_usage.completion));
      refined.push_back(std::move(idea));
    }

    // Phase 2c: everyone rates the refined ideas on creativity.
    std::vector<double> final_means(refined.size(), 0.0);
    for (int a = 0; a < team.size(); ++a) {
      for (size_t i = 0; i < refined.size(); ++i) {
        const auto rated = detail::rate_with_retry(
            team, a, prompts::rating_prompt(refined[i].raw_text, "creativity"),
            1, 10);
        final_means[i] += rated.value;
        tb.add(a, Phase::rating, Action::rate, rated.reply.content,
               json{{"idea_id", refined[i].idea_id},
                    {"rating", rated.value},
                    {"dimension", "creativity"}},
               static_cast<int>(rated.reply.token_usage.completion));
      }
    }
    size_t winner = 0;
    for (size_t i = 1; i < refined.size(); ++i)
      if (final_means[i] > final_means[winner]) winner = i;  // earliest on ties

    return tb.finish(refined[winner], TranscriptStatus::completed);
  } catch (const ProtocolFailure&) {
    return tb.finish(std::nullopt, TranscriptStatus::protocol_failure);
  }
}

// ---------------------------------------------------------------------------
// Condition dispatch

// Runs the full conversation for one condition: optional generation phase,
// then the configured discussion structure. Protocol failures yield a
// transcript with status=protocol_failure and no final idea.
inline ConversationTranscript run_condition(const Team& team,
                                            const std::string& conversation_id,
                                            std::uint64_t seed) {
  validate_condition(team.condition);
  if (team.size() != team.condition.team_size)
    throw Error("agent roster does not match condition team size");
  DetRng rng(seed);
  TranscriptBuilder tb(conversation_id, team, seed);

  std::optional<GenerationOutcome> gen;
  if (team.condition.generation_mode != GenerationMode::absent) {
    try {
      gen = run_generation_phase(team, tb, rng);
    } catch (const ProtocolFailure&) {
      return tb.finish(std::nullopt, TranscriptStatus::protocol_failure);
    }
  }

  // When there is no generation phase, turn-based structures start from an
  // idea the first speaker produces at the top of the discussion.
  auto bootstrap_initial = [&](DetRng& r) -> Idea {
    std::vector<int> everyone;
    for (int a = 0; a < team.size(); ++a) everyone.push_back(a);
    json desires;
    const int speaker = next_speaker(
        team.condition.order_plan, everyone, -1, team, r, "",
        team.condition.order_plan == OrderPlan::raise ? &desires : nullptr);
    chat::ChatReply reply = detail::ask(
        team, speaker, prompts::generation_prompt(team.task, {}, false));
    const std::string text = trim(reply.content);
    if (text.empty()) throw ProtocolFailure("empty initial idea");
    Idea idea = detail::make_idea(tb, team, text);
    json payload{{"idea_id", idea.idea_id}};
    if (!desires.is_null() && !desires.empty()) payload["desires"] = desires;
    tb.add(speaker, Phase::discussion, Action::propose, text, payload,
           static_cast<int>(reply.token_usage.completion));
    return idea;
  };

  switch (team.condition.discussion) {
    case Discussion::none:
      return tb.finish(generation_selected(*gen), TranscriptStatus::completed);
    case Discussion::open:
      return run_open_discussion(
          team, tb, length_policy_for(team.condition.length_plan), rng);
    case Discussion::instructed: {
      const LengthPolicy policy = length_policy_for(team.condition.length_plan);
      Idea initial;
      std::vector<Idea> pool;
      try {
        if (gen) {
          initial = generation_selected(*gen);
          for (int r = 1; r <= team.condition.pool_size; ++r)
            pool.push_back(gen->ideas[gen->ranking[static_cast<size_t>(r)]]);
        } else {
          initial = bootstrap_initial(rng);
        }
      } catch (const ProtocolFailure&) {
        return tb.finish(std::nullopt, TranscriptStatus::protocol_failure);
      }
      return run_instructed_discussion(team, tb, std::move(initial),
                                       std::move(pool), policy, rng);
    }
    case Discussion::iterative: {
      const LengthPolicy policy = length_policy_for(team.condition.length_plan);
      Idea initial;
      try {
        initial = gen ? generation_selected(*gen) : bootstrap_initial(rng);
      } catch (const ProtocolFailure&) {
        return tb.finish(std::nullopt, TranscriptStatus::protocol_failure);
      }
      return run_iterative_refinement(team, tb, std::move(initial), policy, rng);
    }
    case Discussion::progressive: {
      if (!gen) throw Error("progressive needs a generation phase");
      std::vector<Idea> ranked;
      for (size_t r : gen->ranking) ranked.push_back(gen->ideas[r]);
      return run_progressive(team, tb, ranked, rng);
    }
  }
  throw Error("run_condition: bad discussion value");
}

}  // namespace ideaforge::proto
