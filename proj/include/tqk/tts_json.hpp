#pragma once

#include "tqk/tts.hpp"

#include <json.hpp>

namespace tqk {

// Audit-grade traces: every state carries its full step/score lineage.
nlohmann::json state_to_json(const SearchState & s);
nlohmann::json trace_to_json(const BestOfNResult & r);
nlohmann::json trace_to_json(const MajorityVoteResult & r);
nlohmann::json trace_to_json(const BeamResult & r);
nlohmann::json sweep_to_json(std::span<const SweepRow> rows);

} // namespace tqk
