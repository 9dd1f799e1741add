#pragma once

// The shipped 71-row experimental design matrix and its expansion into
// (condition, agent roster) cells under a model plan. The raw rows keep the
// design-table column vocabulary verbatim ("-", "no", "top5", "60 (min 30)")
// so the shipped matrix can be audited field-by-field against a fixture.

#include <string>
#include <vector>

#include "ideaforge/corpus.hpp"
#include "ideaforge/prompts.hpp"
#include "ideaforge/util.hpp"

namespace ideaforge::runner {

struct MatrixRow {
  int cond;
  int agents;
  std::string persona;
  std::string generation;
  std::string discussion;
  std::string pool;
  std::string length;
  std::string order;
};

inline const std::vector<MatrixRow>& builtin_condition_matrix() {
  static const std::vector<MatrixRow> rows{
      {1, 3, "none", "interactive", "-", "-", "-", "-"},
      {2, 3, "same", "interactive", "-", "-", "-", "-"},
      {3, 3, "different", "interactive", "-", "-", "-", "-"},
      {4, 6, "none", "interactive", "-", "-", "-", "-"},
      {5, 6, "same", "interactive", "-", "-", "-", "-"},
      {6, 6, "different", "interactive", "-", "-", "-", "-"},
      {7, 3, "different", "nominal", "-", "-", "-", "-"},
      {8, 6, "different", "nominal", "-", "-", "-", "-"},
      {9, 3, "none", "-", "open", "-", "30", "fix"},
      {10, 3, "same", "-", "open", "-", "30", "fix"},
      {11, 3, "different", "-", "open", "-", "30", "fix"},
      {12, 3, "different", "-", "open", "-", "30", "random"},
      {13, 3, "none", "-", "open", "-", "60", "fix"},
      {14, 3, "same", "-", "open", "-", "60", "fix"},
      {15, 3, "different", "-", "open", "-", "60", "fix"},
      {16, 3, "different", "-", "open", "-", "60", "random"},
      {17, 3, "none", "-", "instructed", "no", "30", "fix"},
      {18, 3, "same", "-", "instructed", "no", "30", "fix"},
      {19, 3, "different", "-", "instructed", "no", "30", "fix"},
      {20, 3, "different", "-", "instructed", "no", "30", "raise"},
      {21, 3, "different", "-", "instructed", "no", "30", "random"},
      {22, 3, "none", "-", "instructed", "no", "60 (min 30)", "fix"},
      {23, 3, "same", "-", "instructed", "no", "60 (min 30)", "fix"},
      {24, 3, "different", "-", "instructed", "no", "60 (min 30)", "fix"},
      {25, 3, "different", "-", "instructed", "no", "60 (min 30)", "raise"},
      {26, 3, "different", "-", "instructed", "no", "60 (min 30)", "random"},
      {27, 3, "none", "-", "iterative", "-", "30", "fix"},
      {28, 3, "same", "-", "iterative", "-", "30", "fix"},
      {29, 3, "different", "-", "iterative", "-", "30", "fix"},
      {30, 3, "different", "-", "iterative", "-", "30", "random"},
      {31, 3, "none", "interactive", "instructed", "no", "30", "fix"},
      {32, 3, "same", "interactive", "instructed", "no", "30", "fix"},
      {33, 3, "different", "interactive", "instructed", "no", "30", "fix"},
      {34, 3, "different", "interactive", "instructed", "no", "30", "raise"},
      {35, 3, "different", "interactive", "instructed", "no", "30", "random"},
      {36, 3, "none", "interactive", "instructed", "no", "60 (min 30)", "fix"},
      {37, 3, "same", "interactive", "instructed", "no", "60 (min 30)", "fix"},
      {38, 3, "different", "interactive", "instructed", "no", "60 (min 30)", "fix"},
      {39, 3, "different", "interactive", "instructed", "no", "60 (min 30)", "raise"},
      {40, 3, "different", "interactive", "instructed", "no", "60 (min 30)", "random"},
      {41, 3, "none", "interactive", "instructed", "top5", "30", "fix"},
      {42, 3, "same", "interactive", "instructed", "top5", "30", "fix"},
      {43, 3, "different", "interactive", "instructed", "top5", "30", "fix"},
      {44, 3, "different", "interactive", "instructed", "top5", "30", "raise"},
      {45, 3, "different", "interactive", "instructed", "top5", "30", "random"},
      {46, 6, "none", "interactive", "instructed", "no", "30", "fix"},
      {47, 6, "same", "interactive", "instructed", "no", "30", "fix"},
      {48, 6, "different", "interactive", "instructed", "no", "30", "fix"},
      {49, 6, "different", "interactive", "instructed", "no", "30", "raise"},
      {50, 6, "different", "interactive", "instructed", "no", "30", "random"},
      {51, 6, "none", "interactive", "instructed", "no", "60 (min 30)", "fix"},
      {52, 6, "same", "interactive", "instructed", "no", "60 (min 30)", "fix"},
      {53, 6, "different", "interactive", "instructed", "no", "60 (min 30)", "fix"},
      {54, 6, "different", "interactive", "instructed", "no", "60 (min 30)", "raise"},
      {55, 6, "different", "interactive", "instructed", "no", "60 (min 30)", "random"},
      {56, 3, "none", "interactive", "iterative", "-", "30", "fix"},
      {57, 3, "same", "interactive", "iterative", "-", "30", "fix"},
      {58, 3, "different", "interactive", "iterative", "-", "30", "fix"},
      {59, 3, "different", "interactive", "iterative", "-", "30", "random"},
      {60, 6, "none", "interactive", "iterative", "-", "30", "fix"},
      {61, 6, "same", "interactive", "iterative", "-", "30", "fix"},
      {62, 6, "different", "interactive", "iterative", "-", "30", "fix"},
      {63, 6, "different", "interactive", "iterative", "-", "30", "random"},
      {64, 3, "none", "interactive", "progressive", "-", "-", "fix"},
      {65, 3, "same", "interactive", "progressive", "-", "-", "fix"},
      {66, 3, "different", "interactive", "progressive", "-", "-", "fix"},
      {67, 3, "different", "interactive", "progressive", "-", "-", "random"},
      {68, 6, "none", "interactive", "progressive", "-", "-", "fix"},
      {69, 6, "same", "interactive", "progressive", "-", "-", "fix"},
      {70, 6, "different", "interactive", "progressive", "-", "-", "fix"},
      {71, 6, "different", "interactive", "progressive", "-", "-", "random"},
  };
  return rows;
}

inline ConditionSpec condition_from_row(const MatrixRow& r) {
  ConditionSpec c;
  c.condition_id = r.cond;
  c.team_size = r.agents;
  c.persona_plan = enum_from<PersonaPlan>(r.persona);
  c.generation_mode = r.generation == "-"
                          ? GenerationMode::absent
                          : enum_from<GenerationMode>(r.generation);
  c.discussion =
      r.discussion == "-" ? Discussion::none : enum_from<Discussion>(r.discussion);
  if (r.pool == "-" || r.pool == "no")
    c.pool_size = 0;
  else if (r.pool == "top5")
    c.pool_size = 5;
  else
    throw SchemaError("matrix row " + std::to_string(r.cond) +
                      ": bad pool value '" + r.pool + "'");
  if (r.length == "-")
    c.length_plan = LengthPlan::absent;
  else if (r.length == "30")
    c.length_plan = LengthPlan::fixed30;
  else if (r.length == "60")
    c.length_plan = LengthPlan::fixed60;
  else if (r.length == "60 (min 30)")
    c.length_plan = LengthPlan::cap60_min30;
  else
    throw SchemaError("matrix row " + std::to_string(r.cond) +
                      ": bad length value '" + r.length + "'");
  c.order_plan =
      r.order == "-" ? OrderPlan::absent : enum_from<OrderPlan>(r.order);
  validate_condition(c);
  return c;
}

// ---------------------------------------------------------------------------
// Model plans

inline bool model_supports_temperature(const std::string& model) {
  // Reasoning-class models take a reasoning-effort knob instead.
  return model.rfind("o3", 0) != 0;
}

inline std::vector<std::string> plan_model_assignment(const std::string& plan,
                                                      int team_size) {
  std::vector<std::string> out;
  if (plan == "mixed") {
    static const std::vector<std::string> trio{"deepseek-r1", "gemini-2.5-pro",
                                               "o3-default"};
    for (int i = 0; i < team_size; ++i) out.push_back(trio[i % trio.size()]);
  } else {
    for (int i = 0; i < team_size; ++i) out.push_back(plan);
  }
  return out;
}

inline bool plan_allows_row(const std::string& plan, const MatrixRow& row) {
  if (plan == "gpt-4.1") return true;
  // reasoning and mixed ensembles only ran three-agent different-persona cells
  return row.agents == 3 && row.persona == "different";
}

struct ExpandedCell {
  ConditionSpec condition;
  std::vector<AgentProfile> agents;
};

// Resolves selectors ("all" or explicit ids) against the matrix under a model
// plan, building each cell's agent roster (personas + per-model temperature).
inline std::vector<ExpandedCell> expand_condition_matrix(
    const std::vector<int>& selectors /* empty = all */,
    const std::string& plan,
    const std::vector<MatrixRow>& matrix = builtin_condition_matrix()) {
  if (plan != "gpt-4.1" && plan != "o3-high" && plan != "o3-low" &&
      plan != "mixed")
    throw ConfigError("unknown model plan: " + plan);

  std::vector<ExpandedCell> cells;
  for (const MatrixRow& row : matrix) {
    const bool selected =
        selectors.empty() ||
        std::find(selectors.begin(), selectors.end(), row.cond) != selectors.end();
    if (!selected) continue;
    if (!plan_allows_row(plan, row)) {
      if (!selectors.empty())
        throw ConfigError("condition " + std::to_string(row.cond) +
                          " is not available under model plan '" + plan +
                          "' (requires 3-agent different-persona rows)");
      continue;  // "all" quietly narrows to the plan's rows
    }
    ExpandedCell cell;
    cell.condition = condition_from_row(row);
    cell.condition.model_assignment =
        plan_model_assignment(plan, cell.condition.team_size);
    for (int i = 0; i < cell.condition.team_size; ++i) {
      AgentProfile profile;
      profile.agent_index = i;
      profile.model_name = cell.condition.model_assignment[static_cast<size_t>(i)];
      if (model_supports_temperature(profile.model_name))
        profile.temperature = 1.0;
      switch (cell.condition.persona_plan) {
        case PersonaPlan::none:
          profile.persona = prompts::generic_persona(i);
          break;
        case PersonaPlan::same:
          profile.persona = prompts::human_derived_persona(0);
          break;
        case PersonaPlan::different:
          profile.persona = prompts::human_derived_persona(i);
          break;
      }
      cell.agents.push_back(std::move(profile));
    }
    cells.push_back(std::move(cell));
  }
  if (!selectors.empty() && cells.size() != selectors.size()) {
    // some selector did not resolve to a row
    for (int id : selectors) {
      bool found = false;
      for (const auto& row : matrix)
        if (row.cond == id) found = true;
      if (!found)
        throw ConfigError("unknown condition id: " + std::to_string(id));
    }
  }
  return cells;
}

}  // namespace ideaforge::runner
