#include "tqk/tts_json.hpp"

namespace tqk {

using nlohmann::json;

json state_to_json(const SearchState & s) {
    return json{
        {"steps", s.steps},
        {"step_scores", s.step_scores},
        {"cumulative", s.cumulative},
        {"terminal", s.terminal},
        {"seed", s.seed},
    };
}

static json sample_to_json(const SampleTrace & s) {
    return json{
        {"state", state_to_json(s.state)},
        {"answer", s.answer},
        {"outcome_score", s.outcome_score},
    };
}

json trace_to_json(const BestOfNResult & r) {
    json samples = json::array();
    for (const auto & s : r.samples) samples.push_back(sample_to_json(s));
    return json{
        {"method", "bon"},
        {"answer", r.answer},
        {"winner_index", r.winner_index},
        {"samples", samples},
    };
}

json trace_to_json(const MajorityVoteResult & r) {
    json samples = json::array();
    for (const auto & s : r.samples) samples.push_back(sample_to_json(s));
    json counts = json::array();
    for (const auto & [answer, count] : r.counts) {
        counts.push_back(json{{"answer", answer}, {"count", count}});
    }
    return json{
        {"method", "vote"},
        {"answer", r.answer},
        {"counts", counts},
        {"samples", samples},
    };
}

json trace_to_json(const BeamResult & r) {
    json rounds = json::array();
    for (const auto & round : r.rounds) {
        json frontier = json::array();
        for (const auto & b : round.frontier) {
            frontier.push_back(json{
                {"state", state_to_json(b.state)},
                {"parent", b.parent},
                {"expansion", b.expansion},
            });
        }
        rounds.push_back(json{{"frontier", frontier}});
    }
    return json{
        {"method", "beam"},
        {"answer", r.answer},
        {"found_terminal", r.found_terminal},
        {"best", state_to_json(r.best)},
        {"rounds", rounds},
    };
}

json sweep_to_json(std::span<const SweepRow> rows) {
    json out = json::array();
    for (const SweepRow & r : rows) {
        out.push_back(json{
            {"method", r.method},
            {"budget", r.budget},
            {"accuracy", r.accuracy},
            {"ci_low", r.ci_low},
            {"ci_high", r.ci_high},
            {"seeds", r.trials},
        });
    }
    return out;
}

} // namespace tqk
