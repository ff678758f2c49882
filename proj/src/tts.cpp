#include "tqk/tts.hpp"

#include "tqk/errors.hpp"
#include "tqk/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace tqk {

namespace {

uint64_t splitmix64(uint64_t & x) {
    x += 0x9E3779B97F4A7C15ull;
    uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

double uniform01(uint64_t & x) {
    return static_cast<double>(splitmix64(x) >> 11) * 0x1.0p-53;
}

} // namespace

uint64_t mix_seed(uint64_t seed, uint64_t salt) {
    uint64_t x = seed ^ (salt * 0xD1B54A32D192ED03ull + 0x2545F4914F6CDD1Dull);
    return splitmix64(x);
}

SearchState Generator::root(uint64_t seed) const {
    SearchState s;
    s.seed = seed;
    return s;
}

// -- toy answer task -----------------------------------------------------

SearchState ToyAnswerGenerator::expand(const SearchState & parent, int expansion_index) const {
    SearchState child = parent;
    uint64_t rng = mix_seed(parent.seed, static_cast<uint64_t>(expansion_index));
    child.seed = rng;

    const double u = uniform01(rng);
    int step;
    if (u < task_.p_correct) {
        step = 0; // ground truth
    } else {
        const double w = uniform01(rng);
        int idx = static_cast<int>(w * task_.num_wrong);
        if (idx >= task_.num_wrong) idx = task_.num_wrong - 1;
        step = 1 + idx;
    }
    child.steps.push_back(step);
    child.terminal = true;
    return child;
}

std::string ToyAnswerGenerator::answer(const SearchState & state) const {
    if (state.steps.empty()) return "";
    const int id = state.steps.back();
    return id == 0 ? task_.truth : "w" + std::to_string(id - 1);
}

// -- toy tree ------------------------------------------------------------

int64_t ToyTree::node_count() const {
    int64_t count = 1, level = 1;
    for (int lvl = 0; lvl < depth; ++lvl) {
        level *= branching;
        count += level;
    }
    return count;
}

int64_t ToyTree::node_of(std::span<const int> path) const {
    int64_t node = 0;
    for (int step : path) node = child_id(node, step);
    return node;
}

double ToyTree::path_value(std::span<const int> path) const {
    int64_t node = 0;
    double sum = 0.0;
    for (int step : path) {
        node = child_id(node, step);
        sum += edge_values[static_cast<size_t>(node)];
    }
    return sum;
}

std::string ToyTree::path_answer(std::span<const int> path) const {
    std::string s;
    for (int step : path) s += static_cast<char>('0' + step);
    return s;
}

ToyTree make_fixed_toy_tree(int depth) {
    if (depth < 1 || depth > 3) throw validation_error("fixed toy tree supports depth 1..3");
    ToyTree t;
    t.branching = 2;
    t.depth = depth;
    // the greedy first step (0.6 > 0.5) leads away from the best leaf, which
    // sits below node 6 on the weaker branch
    static const double values[15] = {
        0.0,                    // root, unused
        0.6, 0.5,               // depth 1
        0.3, 0.1, 0.2, 0.9,     // depth 2
        0.1, 0.2, 0.8, 0.1, 0.3, 0.2, 0.7, 0.95, // depth 3
    };
    t.edge_values.assign(values, values + t.node_count());
    return t;
}

ToyTree make_fixed_toy_tree() { return make_fixed_toy_tree(3); }

SearchState ToyTreeGenerator::expand(const SearchState & parent, int expansion_index) const {
    if (parent.terminal) throw validation_error("toy tree: cannot expand a terminal state");
    SearchState child = parent;
    child.seed = mix_seed(parent.seed, static_cast<uint64_t>(expansion_index));
    child.steps.push_back(expansion_index % tree_.branching);
    child.terminal = static_cast<int>(child.steps.size()) >= tree_.depth;
    return child;
}

std::string ToyTreeGenerator::answer(const SearchState & state) const {
    return tree_.path_answer(state.steps);
}

double ToyTreeStepScorer::score_step(const SearchState & partial) const {
    if (partial.steps.empty()) return 0.0;
    return tree_.edge_values[static_cast<size_t>(tree_.node_of(partial.steps))];
}

// -- sampling helpers ----------------------------------------------------

namespace {

std::vector<SampleTrace> draw_samples(const Generator & gen, int n, uint64_t seed, int max_steps) {
    if (n < 1) throw validation_error("sample budget must be >= 1");

    std::vector<SampleTrace> samples(static_cast<size_t>(n));
    std::vector<std::exception_ptr> errors(static_cast<size_t>(n));
    std::vector<char> done(static_cast<size_t>(n), 0);

    parallel_for(n, [&](int64_t i) {
        try {
            SearchState state = gen.root(mix_seed(seed, static_cast<uint64_t>(i)));
            int steps = 0;
            while (!state.terminal && steps < max_steps) {
                state = gen.expand(state, 0);
                ++steps;
            }
            samples[static_cast<size_t>(i)].state = std::move(state);
            samples[static_cast<size_t>(i)].answer = gen.answer(samples[static_cast<size_t>(i)].state);
            done[static_cast<size_t>(i)] = 1;
        } catch (...) {
            errors[static_cast<size_t>(i)] = std::current_exception();
        }
    });

    for (size_t i = 0; i < errors.size(); ++i) {
        if (!errors[i]) continue;
        std::vector<SampleTrace> partial;
        for (size_t j = 0; j < done.size(); ++j) {
            if (done[j]) partial.push_back(samples[j]);
        }
        try {
            std::rethrow_exception(errors[i]);
        } catch (const std::exception & e) {
            throw generation_error(std::string("generator failed: ") + e.what(), std::move(partial));
        }
    }
    return samples;
}

} // namespace

// -- best-of-n -----------------------------------------------------------

BestOfNResult best_of_n(const Generator & gen, const Scorer & scorer, int n, uint64_t seed,
                        int max_steps) {
    BestOfNResult res;
    res.samples = draw_samples(gen, n, seed, max_steps);

    for (size_t i = 0; i < res.samples.size(); ++i) {
        res.samples[i].outcome_score = scorer.score_outcome(res.samples[i].state, res.samples[i].answer);
    }
    int best = 0;
    for (int i = 1; i < n; ++i) {
        if (res.samples[static_cast<size_t>(i)].outcome_score >
            res.samples[static_cast<size_t>(best)].outcome_score) {
            best = i; // strict: ties keep the lowest index
        }
    }
    res.winner_index = best;
    res.answer = res.samples[static_cast<size_t>(best)].answer;
    return res;
}

// -- majority vote -------------------------------------------------------

MajorityVoteResult majority_vote(const Generator & gen, int n, uint64_t seed, int max_steps) {
    MajorityVoteResult res;
    res.samples = draw_samples(gen, n, seed, max_steps);

    for (const SampleTrace & s : res.samples) {
        auto it = std::find_if(res.counts.begin(), res.counts.end(),
                               [&](const auto & kv) { return kv.first == s.answer; });
        if (it == res.counts.end()) {
            res.counts.emplace_back(s.answer, 1);
        } else {
            ++it->second;
        }
    }
    int best = 0;
    for (size_t i = 1; i < res.counts.size(); ++i) {
        if (res.counts[i].second > res.counts[static_cast<size_t>(best)].second) {
            best = static_cast<int>(i); // ties keep the first-seen answer
        }
    }
    res.answer = res.counts[static_cast<size_t>(best)].first;
    return res;
}

// -- beam search ---------------------------------------------------------

BeamResult beam_search(const Generator & gen, const Scorer & scorer, int beam_width,
                       int expansions, int max_steps, uint64_t seed) {
    if (beam_width < 1 || expansions < 1) {
        throw validation_error("beam_search: width and expansions must be >= 1");
    }

    BeamResult res;
    std::vector<BeamCandidate> frontier;
    frontier.push_back(BeamCandidate{gen.root(seed), 0, -1});

    for (int round = 0; round < max_steps; ++round) {
        bool all_terminal = true;
        for (const BeamCandidate & b : frontier) all_terminal &= b.state.terminal;
        if (all_terminal) break;

        std::vector<BeamCandidate> candidates;
        candidates.reserve(frontier.size() * static_cast<size_t>(expansions));
        for (size_t i = 0; i < frontier.size(); ++i) {
            if (frontier[i].state.terminal) {
                // frozen: carried forward, still competes for width
                candidates.push_back(BeamCandidate{frontier[i].state, static_cast<int>(i), -1});
                continue;
            }
            for (int j = 0; j < expansions; ++j) {
                BeamCandidate c;
                c.state = gen.expand(frontier[i].state, j);
                const double s = scorer.score_step(c.state);
                c.state.step_scores.push_back(s);
                c.state.cumulative += s;
                c.parent = static_cast<int>(i);
                c.expansion = j;
                candidates.push_back(std::move(c));
            }
        }

        // candidates arrive in (parent asc, expansion asc) order, so a stable
        // sort on the score implements the tie rule
        std::stable_sort(candidates.begin(), candidates.end(),
                         [](const BeamCandidate & a, const BeamCandidate & b) {
                             return a.state.cumulative > b.state.cumulative;
                         });
        if (static_cast<int>(candidates.size()) > beam_width) {
            candidates.resize(static_cast<size_t>(beam_width));
        }
        frontier = candidates;
        res.rounds.push_back(BeamRound{frontier});
    }

    // frontier is rank-ordered; the first terminal is the best terminal
    for (const BeamCandidate & b : frontier) {
        if (b.state.terminal) {
            res.found_terminal = true;
            res.best = b.state;
            res.answer = gen.answer(b.state);
            return res;
        }
    }
    res.found_terminal = false;
    res.best = frontier.front().state;
    res.answer = gen.answer(res.best);
    return res;
}

// -- scaling sweeps ------------------------------------------------------

const char * method_name(Method m) {
    switch (m) {
        case Method::best_of_n: return "bon";
        case Method::majority_vote: return "vote";
        case Method::beam_search: return "beam";
    }
    return "?";
}

Method method_from_name(const std::string & name) {
    if (name == "bon") return Method::best_of_n;
    if (name == "vote") return Method::majority_vote;
    if (name == "beam") return Method::beam_search;
    throw validation_error("unknown tts method: " + name);
}

namespace {

std::pair<double, double> wilson99(double p_hat, int n) {
    const double z = 2.5758293035489004; // 99% two-sided normal quantile
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = (p_hat + z2 / (2.0 * n)) / denom;
    const double half = z * std::sqrt(p_hat * (1.0 - p_hat) / n + z2 / (4.0 * n * n)) / denom;
    return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

} // namespace

std::vector<SweepRow> run_scaling_sweep(std::span<const TaskInstance> tasks, const SweepConfig & cfg) {
    if (tasks.empty()) throw validation_error("run_scaling_sweep: no tasks");
    if (cfg.budgets.empty()) throw validation_error("run_scaling_sweep: no budgets");
    if (cfg.trials < 1) throw validation_error("run_scaling_sweep: trials must be >= 1");

    std::vector<SweepRow> rows;
    rows.reserve(cfg.budgets.size());

    for (int budget : cfg.budgets) {
        if (budget < 1) throw validation_error("run_scaling_sweep: budgets must be >= 1");
        int beam_width = 0;
        if (cfg.method == Method::beam_search) {
            if (budget % cfg.beam_expansions != 0) {
                throw validation_error("run_scaling_sweep: budget not divisible by beam expansions");
            }
            beam_width = budget / cfg.beam_expansions;
        }

        int64_t correct = 0;
        const int64_t runs = static_cast<int64_t>(cfg.trials) * static_cast<int64_t>(tasks.size());
        for (int trial = 0; trial < cfg.trials; ++trial) {
            for (size_t ti = 0; ti < tasks.size(); ++ti) {
                const TaskInstance & task = tasks[ti];
                const uint64_t seed =
                    mix_seed(mix_seed(cfg.seed, static_cast<uint64_t>(budget)),
                             static_cast<uint64_t>(trial) * tasks.size() + ti);
                std::string answer;
                switch (cfg.method) {
                    case Method::best_of_n:
                        answer = best_of_n(*task.gen, *task.scorer, budget, seed, cfg.max_steps).answer;
                        break;
                    case Method::majority_vote:
                        answer = majority_vote(*task.gen, budget, seed, cfg.max_steps).answer;
                        break;
                    case Method::beam_search:
                        answer = beam_search(*task.gen, *task.scorer, beam_width, cfg.beam_expansions,
                                             cfg.max_steps, seed)
                                     .answer;
                        break;
                }
                if (answer == task.truth) ++correct;
            }
        }

        SweepRow row;
        row.method = method_name(cfg.method);
        row.budget = budget;
        row.trials = static_cast<int>(runs);
        row.accuracy = static_cast<double>(correct) / static_cast<double>(runs);
        const auto ci = wilson99(row.accuracy, static_cast<int>(runs));
        row.ci_low = ci.first;
        row.ci_high = ci.second;
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string sweep_to_csv(std::span<const SweepRow> rows) {
    std::ostringstream os;
    os << "method,budget,accuracy,ci_low,ci_high,seeds\n";
    os.precision(6);
    os.setf(std::ios::fixed);
    for (const SweepRow & r : rows) {
        os << r.method << ',' << r.budget << ',' << r.accuracy << ',' << r.ci_low << ','
           << r.ci_high << ',' << r.trials << '\n';
    }
    return os.str();
}

} // namespace tqk
