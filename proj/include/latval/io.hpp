#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "latval/game.hpp"
#include "latval/info.hpp"
#include "latval/value.hpp"

namespace latval {

inline constexpr const char* kVersion = "0.1.0";

// Game files: { "rank": n, "worth": { "<antichain-key>": number, ... } }.
// Every nonempty coalition must be covered; the empty one is implicit.
Game game_from_json(const nlohmann::json& doc, int max_rank = 5);
nlohmann::json game_to_json(const Game& v);

// Coalition key, worth and dividend per row, in the canonical order.
std::string game_csv(const Game& v, const DividendTable* dividends = nullptr);

// Sharing systems: { "rank": n, "q": { "<antichain-key>": { "<element-key>":
// weight, ... }, ... } }.
SharingSystem sharing_from_json(const nlohmann::json& doc, int max_rank = 5);
nlohmann::json sharing_to_json(const SharingSystem& q);

// Allocation reports:
// { "value": name, "method": ..., "allocation": { "<element-key>": x },
//   "efficiency_residual": r, "stderr": {...}? }.
nlohmann::json allocation_to_json(const std::string& value_name,
                                  const std::string& method,
                                  const Game& v, const Allocation& phi,
                                  const Vector* stderrs = nullptr);

nlohmann::json axiom_report_to_json(const AxiomReport& report);

// Distributions:
// { "inputs": [{"name": ..., "states": [...]}, ...],
//   "target": {"name": ..., "states": [...]},
//   "mass": { "x1,...,xn|y": number, ... } }.
// Missing cells are zero; mass within 1e-9 of one is rescaled. States with
// zero marginal mass are pruned and noted.
struct DistributionMeta {
  std::vector<std::string> input_names;
  std::vector<std::vector<std::string>> input_states;
  std::string target_name;
  std::vector<std::string> target_states;
  bool pruned = false;
  std::string pruning_note;
};

JointDistribution distribution_from_json(const nlohmann::json& doc,
                                         DistributionMeta* meta = nullptr);

nlohmann::json decomposition_to_json(const Decomposition& d,
                                     const DistributionMeta& meta,
                                     const IpfOptions& ipf);

// The information game keyed by antichains of predictors.
std::string information_game_csv(const InformationGame& info);

}  // namespace latval
