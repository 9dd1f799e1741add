#pragma once

// Deterministic procedural agent used by mock runs: replies are a pure
// function of (conversation seed, model name, request text), routed on the
// marker phrases from prompts.hpp. No wall clock, no global state, so a
// rerun with the same seed reproduces every conversation byte for byte.

#include <cstdint>
#include <string>
#include <vector>

#include "ideaforge/chat.hpp"
#include "ideaforge/prompts.hpp"
#include "ideaforge/util.hpp"

namespace ideaforge::chat {

namespace detail {

inline const std::vector<std::string>& synth_lexicon() {
  static const std::vector<std::string> words{
      "modular",     "compost",   "exchange",  "network",   "credits",
      "repair",      "floating",  "orchard",   "sensor",    "cooperative",
      "mentorship",  "archive",   "festival",  "microbial", "voucher",
      "workshop",    "courier",   "greenhouse", "ledger",   "beacon",
      "commons",     "relay",     "studio",    "harvest",   "toolkit",
      "village",     "subscription", "atlas",  "garden",    "circuit",
      "library",     "barter",    "canopy",    "mosaic",    "pipeline",
      "lantern",     "habitat",   "bridge",    "catalyst",  "reservoir"};
  return words;
}

inline std::string synth_sentence(DetRng& rng, size_t min_words, size_t max_words) {
  const auto& lex = synth_lexicon();
  const size_t n = min_words + rng.uniform_index(max_words - min_words + 1);
  std::string out;
  for (size_t i = 0; i < n; ++i) {
    if (i) out += ' ';
    out += lex[rng.uniform_index(lex.size())];
  }
  if (!out.empty()) out[0] = static_cast<char>(std::toupper(out[0]));
  out += '.';
  return out;
}

}  // namespace detail

class SyntheticChatGateway : public ChatGateway {
 public:
  explicit SyntheticChatGateway(std::uint64_t seed) : seed_(seed) {}

  ChatReply complete(const ChatRequest& req) override {
    validate_request(req);
    const std::string text = request_text(req);
    DetRng rng(sha256_seed64(std::to_string(seed_) + "|" + req.model_name +
                             "|" + text));

    std::string reply;
    if (icontains(text, prompts::kMarkerFiveIdeas)) {
      for (int i = 1; i <= 5; ++i) {
        reply += std::to_string(i) + ". " +
                 detail::synth_sentence(rng, 8, 14) + "\n";
      }
    } else if (icontains(text, prompts::kMarkerDesire1to7)) {
      reply = std::to_string(1 + rng.uniform_index(7));
    } else if (icontains(text, prompts::kMarkerRate1to10)) {
      reply = std::to_string(1 + rng.uniform_index(10));
    } else if (icontains(text, prompts::kMarkerInstructedAction)) {
      const bool agree_disabled = icontains(text, prompts::kMarkerAgreeDisabled);
      size_t pick = rng.uniform_index(5);  // 0,1 agree; 2,3 modify; 4 replace
      if (agree_disabled && pick < 2) pick = 2;
      if (pick < 2) {
        reply = "Agree: No changes needed";
      } else if (pick < 4) {
        reply = "Modify: " + detail::synth_sentence(rng, 10, 16) +
                " - Reason: " + detail::synth_sentence(rng, 4, 7);
      } else {
        reply = "Replace: " + detail::synth_sentence(rng, 10, 16) +
                " - Reason: " + detail::synth_sentence(rng, 4, 7);
      }
    } else if (icontains(text, prompts::kMarkerSynthesis)) {
      while (word_count(reply) < 85) reply += detail::synth_sentence(rng, 9, 13) + " ";
      reply = trim(reply);
    } else if (icontains(text, prompts::kMarkerRefine) ||
               icontains(text, prompts::kMarkerIterativeCandidate) ||
               icontains(text, prompts::kMarkerProposeIdea)) {
      reply = detail::synth_sentence(rng, 10, 18);
    } else if (icontains(text, prompts::kMarkerOpenSpeak)) {
      reply = detail::synth_sentence(rng, 18, 28);
    } else {
      reply = detail::synth_sentence(rng, 8, 14);
    }

    ChatReply out;
    out.content = std::move(reply);
    long long prompt_tokens = 0;
    for (const auto& m : req.messages)
      prompt_tokens += static_cast<long long>(word_count(m.content));
    out.token_usage.prompt = prompt_tokens;
    out.token_usage.completion = static_cast<long long>(word_count(out.content));
    return out;
  }

 private:
  std::uint64_t seed_;
};

}  // namespace ideaforge::chat
