#pragma once

// Versioned prompt assets. Everything the engine ever says to an agent is
// built here so the text can be audited and checksum-pinned in tests. The
// marker phrases (kMarker*) double as the routing keys the procedural mock
// responder matches on; change them only together with a version bump.

#include <string>
#include <vector>

#include "ideaforge/corpus.hpp"

namespace ideaforge::prompts {

inline constexpr const char* kPromptsVersion = "1";

// ---------------------------------------------------------------------------
// Idea harmonization. The system prompt is a pinned asset; tests assert its
// SHA-256 so accidental edits are caught.

inline constexpr const char* kHarmonizationSystemPrompt =
    R"(You are an AI assistant that rephrases ideas. Your main goal is to accurately convey the core meaning of the provided text in a natural, accessible way.

**Text Processing Instructions:**
- If the text contains "evolve [X] into [Y]" or similar transformation language, focus only on the final concept (Y) and ignore the initial concept (X).
- If the text contains multiple ideas with clear section headers (like "---Final Idea---" or "---One Creative Idea---"), focus only on the content under the final/main idea section.
- If the text contains multiple ideas without clear hierarchy, treat the entire content as one comprehensive idea.
- Remove any brainstorming artifacts, transitional phrases, or development language that doesn't contribute to the core concept.

**Writing Style Requirements:**
- Use a **clear, neutral, and straightforward writing style** regardless of the original text's style.
- Simplify complex or technical language while preserving core meaning - choose everyday words over specialized terminology when possible.
- Remove branded terms, metaphorical names in quotes, and elaborate descriptive phrases that don't add essential information.
- Break down dense technical concepts into simpler, more digestible explanations.
- Be concise: If the original idea is lengthy, shorten it. If it's already brief, rewrite while preserving its essence and approximate length.
- Stick to the original meaning: Do not add new information, context, or opinions.
- Direct output: Provide only the rephrased idea, without introductory or concluding phrases.
- Use THIRD-PERSON perspective only. Never use "we", "I", "you", "us", or "our" but maintain natural language.
- Use active voice when possible and replace overly formal or technical language with clear, accessible alternatives.
- Reduce technical density: If the original lists many technical specifications or components, focus on the main mechanism and primary benefits.
- Use conversational sentence structure rather than academic or highly technical phrasing.)";

inline std::string harmonization_user_prompt(const std::string& idea_text) {
  return "Paraphrase this idea in under 100 words using simple, clear language "
         "that anyone can understand: " +
         idea_text;
}

// ---------------------------------------------------------------------------
// Mock-recognizable markers

inline constexpr const char* kMarkerProposeIdea = "Propose one new idea";
inline constexpr const char* kMarkerRate1to10 = "single integer between 1 and 10";
inline constexpr const char* kMarkerDesire1to7 = "single integer between 1 and 7";
inline constexpr const char* kMarkerInstructedAction = "choose exactly one of three actions";
inline constexpr const char* kMarkerAgreeDisabled = "Agreement is currently disabled";
inline constexpr const char* kMarkerIterativeCandidate = "propose one new candidate idea";
inline constexpr const char* kMarkerOpenSpeak = "Continue the brainstorming discussion";
inline constexpr const char* kMarkerSynthesis = "synthesize the entire discussion";
inline constexpr const char* kMarkerFiveIdeas = "exactly 5 radically novel ideas";
inline constexpr const char* kMarkerRefine = "enhance its usefulness";

// ---------------------------------------------------------------------------
// Builders

inline std::string task_header(const TaskPrompt& task) {
  return task.premise + "\n\n" + task.shared_instruction;
}

inline std::string generation_prompt(const TaskPrompt& task,
                                     const std::vector<std::string>& earlier_ideas,
                                     bool interactive) {
  std::string p = task_header(task);
  if (interactive && !earlier_ideas.empty()) {
    p += "\n\nIdeas proposed by your team so far:\n";
    for (size_t i = 0; i < earlier_ideas.size(); ++i)
      p += std::to_string(i + 1) + ". " + earlier_ideas[i] + "\n";
    p += "\nRead them carefully and produce different ideas: your proposal "
         "must differ substantively from every idea listed above.";
  }
  p += "\n\nPropose one new idea for this task. Reply with the idea text only.";
  return p;
}

inline std::string rating_prompt(const std::string& idea_text,
                                 const std::string& dimension) {
  std::string what;
  if (dimension == "creativity")
    what = "creativity, explicitly considering both novelty and usefulness";
  else if (dimension == "novelty")
    what = "novelty (not overall creativity)";
  else
    what = dimension;
  return "Rate the following idea for " + what +
         " on a 1-10 scale.\n\nIdea: " + idea_text +
         "\n\nReply with a single integer between 1 and 10 and nothing else.";
}

inline std::string desire_prompt(const std::string& current_idea) {
  return "The team is discussing the current idea:\n\n" + current_idea +
         "\n\nRate your desire to speak next according to how much value your "
         "potential contribution would add, on a 1-7 scale. Reply with a "
         "single integer between 1 and 7 and nothing else.";
}

inline std::string instructed_action_prompt(const TaskPrompt& task,
                                            const std::string& current_idea,
                                            const std::string& history_digest,
                                            bool agree_enabled,
                                            bool pool_available) {
  std::string p = task_header(task);
  p += "\n\nCurrent idea under discussion:\n" + current_idea;
  if (!history_digest.empty()) p += "\n\nDiscussion so far:\n" + history_digest;
  p += "\n\nEvaluate the current idea and choose exactly one of three actions:\n"
       "- Agree: No changes needed\n"
       "- Modify: [full revised idea] - Reason: [justification] (propose major "
       "improvements, not minor edits)\n"
       "- Replace: [full replacement idea] - Reason: [justification]";
  if (pool_available)
    p += "\nIf you Replace, a pre-generated alternative from the team's shared "
         "pool will be substituted.";
  if (!agree_enabled)
    p += "\n\nAgreement is currently disabled until the minimum number of "
         "discussion rounds has elapsed; choose Modify or Replace.";
  p += "\n\nReply in exactly one of the three formats above.";
  return p;
}

inline std::string instructed_format_reminder() {
  return "Your previous reply did not match the required format. Reply with "
         "exactly one of:\n"
         "Agree: No changes needed\n"
         "Modify: [full revised idea] - Reason: [justification]\n"
         "Replace: [full replacement idea] - Reason: [justification]";
}

inline std::string iterative_propose_prompt(const TaskPrompt& task,
                                            const std::string& current_idea,
                                            const std::vector<std::string>& recent) {
  std::string p = task_header(task);
  p += "\n\nCurrent idea:\n" + current_idea;
  if (!recent.empty()) {
    p += "\n\nRecently explored ideas:\n";
    for (size_t i = 0; i < recent.size(); ++i)
      p += std::to_string(i + 1) + ". " + recent[i] + "\n";
  }
  p += "\nNow propose one new candidate idea intended to be more creative than "
       "the ideas above. Reply with the idea text only.";
  return p;
}

inline std::string open_speak_prompt(const TaskPrompt& task,
                                     const std::string& history_digest) {
  std::string p = task_header(task);
  if (!history_digest.empty()) p += "\n\nDiscussion so far:\n" + history_digest;
  p += "\n\nContinue the brainstorming discussion in your own words. Build on, "
       "question, or depart from what has been said.";
  return p;
}

inline std::string synthesis_prompt(const TaskPrompt& task,
                                    const std::string& history_digest) {
  std::string p = task_header(task);
  p += "\n\nDiscussion transcript:\n" + history_digest;
  p += "\n\nNow synthesize the entire discussion history into a single coherent "
       "final idea of 80-100 words. Reply with the final idea text only.";
  return p;
}

inline std::string progressive_divergent_prompt(
    const TaskPrompt& task, const std::vector<std::string>& top_ideas) {
  std::string p = task_header(task);
  p += "\n\nTop-ranked ideas from the team's first round:\n";
  for (size_t i = 0; i < top_ideas.size(); ++i)
    p += std::to_string(i + 1) + ". " + top_ideas[i] + "\n";
  p += "\nGenerate exactly 5 radically novel ideas inspired by, but distinct "
       "from, the ideas above. Prioritize novelty over usefulness. Think "
       "transformatively about fundamental shifts in approach rather than "
       "simply combining existing ideas.\n\n"
       "Reply with exactly five lines, numbered 1. to 5., one idea per line.";
  return p;
}

inline std::string progressive_divergent_reminder() {
  return "Your previous reply was not in the required format. Reply with "
         "exactly five lines, numbered 1. to 5., one idea per line.";
}

inline std::string progressive_refine_prompt(const TaskPrompt& task,
                                             const std::string& idea_text) {
  std::string p = task_header(task);
  p += "\n\nRefine the following idea to enhance its usefulness while "
       "carefully preserving its core novelty:\n\n" +
       idea_text + "\n\nReply with the refined idea text only.";
  return p;
}

// ---------------------------------------------------------------------------
// Personas

inline Persona generic_persona(int agent_index) {
  Persona p;
  p.persona_id = "generic-" + std::to_string(agent_index + 1);
  p.description = "You are Agent " + std::to_string(agent_index + 1) + ".";
  p.source = PersonaSource::generic;
  return p;
}

// Stand-in creative-style personas for the same/different plans. These are
// artifact assets, not survey data.
inline const std::vector<std::string>& persona_pool() {
  static const std::vector<std::string> pool{
      "You are a lateral thinker who approaches problems sideways, looking "
      "for analogies in unrelated fields before settling on a direction.",
      "You are a pragmatic builder who grounds every idea in cost, logistics, "
      "and what could ship within a year.",
      "You are a provocateur who deliberately challenges the team's framing "
      "and proposes inversions of the obvious approach.",
      "You are a synthesizer who listens for fragments of value in others' "
      "ideas and recombines them into stronger wholes.",
      "You are a storyteller who evaluates ideas by the human narrative they "
      "create and pushes for emotionally resonant solutions.",
      "You are a systems analyst who maps second-order effects and looks for "
      "leverage points where a small change cascades.",
  };
  return pool;
}

inline Persona human_derived_persona(int index) {
  const auto& pool = persona_pool();
  Persona p;
  p.persona_id = "human-" + std::to_string(index % pool.size());
  p.description = pool[static_cast<size_t>(index) % pool.size()];
  p.source = PersonaSource::human_derived;
  return p;
}

// ---------------------------------------------------------------------------
// Built-in task set

inline const std::vector<TaskPrompt>& builtin_tasks() {
  static const std::string shared =
      "You are collaborating with other team members to come up with one "
      "creative idea to solve the problem. The idea will be evaluated on its "
      "creativity (i.e., it should be both novel and useful).";
  static const std::vector<TaskPrompt> tasks{
      {"plastic_waste",
       "Plastic waste is one of the biggest environmental problems of our "
       "lifetime.",
       shared},
      {"supply_chain",
       "Vulnerabilities within a supply chain could lead to uncontrolled "
       "costs and inefficient delivery schedules.",
       shared},
      {"sorry_pandemic",
       "Imagine a new pandemic has emerged that is transmitted by saying the "
       "word \"sorry\".",
       shared},
      {"education_inequality",
       "Educational inequality is the unequal distribution of academic "
       "resources to disadvantaged and marginalised groups.",
       shared},
      {"employee_attrition",
       "Voluntary attrition happens when an employee decides to leave the "
       "company, resulting in the reduction of valued talent in the "
       "workforce.",
       shared},
      {"singing_shower",
       "Imagine a new research study discovers that singing in the shower for "
       "20 minutes or more is good for health.",
       shared},
  };
  return tasks;
}

inline const TaskPrompt& builtin_task(const std::string& task_id) {
  for (const auto& t : builtin_tasks())
    if (t.task_id == task_id) return t;
  throw ConfigError("unknown task id: " + task_id);
}

}  // namespace ideaforge::prompts
