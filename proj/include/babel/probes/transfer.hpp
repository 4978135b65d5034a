// Knowledge-transfer proportion |P ∩ C| / |C|.
#pragma once

#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "babel/common.hpp"

namespace babel::probes {

struct TransferReport {
  std::size_t p_size = 0;
  std::size_t c_size = 0;
  std::size_t intersection = 0;
  double proportion = 0.0;
  std::string mode;  // "by-construction" or "empirical"

  nlohmann::ordered_json to_json() const {
    return nlohmann::ordered_json{{"schema_version", 1},
                                  {"p_size", p_size},
                                  {"c_size", c_size},
                                  {"intersection", intersection},
                                  {"proportion", proportion},
                                  {"mode", mode}};
  }

  static TransferReport from_json(const nlohmann::json& j) {
    TransferReport r;
    r.p_size = j.at("p_size");
    r.c_size = j.at("c_size");
    r.intersection = j.at("intersection");
    r.proportion = j.at("proportion");
    r.mode = j.value("mode", "");
    return r;
  }
};

// |C| = 0 is an error, never reported as 0.
inline TransferReport knowledge_transfer_proportion(
    const std::set<int>& subset_p, const std::set<int>& solved_c,
    const std::string& mode = "by-construction") {
  if (solved_c.empty())
    throw Error("knowledge_transfer_proportion: |C| = 0, proportion undefined");
  TransferReport r;
  r.mode = mode;
  r.p_size = subset_p.size();
  r.c_size = solved_c.size();
  for (int id : solved_c)
    if (subset_p.count(id)) ++r.intersection;
  r.proportion = (double)r.intersection / (double)r.c_size;
  return r;
}

// Empirical subset construction: tasks the dominant-monolingual model
// solves that the new-language monolingual model does not.
inline std::set<int> empirical_subset(const std::set<int>& solved_by_dominant,
                                      const std::set<int>& solved_by_new) {
  std::set<int> p;
  for (int id : solved_by_dominant)
    if (!solved_by_new.count(id)) p.insert(id);
  return p;
}

}  // namespace babel::probes
