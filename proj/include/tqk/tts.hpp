#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tqk {

// splitmix64; used to derive per-sample and per-expansion rng streams
uint64_t mix_seed(uint64_t seed, uint64_t salt);

// A partial or complete generation candidate.
struct SearchState {
    std::vector<int> steps;          // step/token ids, append-only
    std::vector<double> step_scores; // one entry per scored step
    double cumulative = 0.0;         // running sum of step_scores
    bool terminal = false;
    uint64_t seed = 0;               // rng lineage for the next expansion
};

// One decoding step at a time over batched candidates. Implementations must
// be pure: the same parent state and expansion index always produce the same
// child. Randomness comes only from the state's seed lineage.
class Generator {
public:
    virtual ~Generator() = default;

    virtual SearchState root(uint64_t seed) const;

    // produce the child of `parent` for sibling slot `expansion_index`
    virtual SearchState expand(const SearchState & parent, int expansion_index) const = 0;

    // answer extracted from a completed sequence
    virtual std::string answer(const SearchState & state) const = 0;
};

class Scorer {
public:
    virtual ~Scorer() = default;

    // outcome score of a completed sample (ORM role)
    virtual double score_outcome(const SearchState & state, const std::string & answer) const = 0;

    // score of the latest step of a partial sequence (PRM role)
    virtual double score_step(const SearchState & partial) const = 0;
};

// Single-step stochastic answer task: a sample is correct with probability
// p_correct, otherwise one of num_wrong distractors uniformly. Makes
// pass@N exactly 1 - (1-p)^N under an oracle verifier.
struct ToyTask {
    std::string truth = "42";
    double p_correct = 0.3;
    int num_wrong = 4;
};

class ToyAnswerGenerator : public Generator {
public:
    explicit ToyAnswerGenerator(ToyTask task) : task_(task) {}
    SearchState expand(const SearchState & parent, int expansion_index) const override;
    std::string answer(const SearchState & state) const override;
    const ToyTask & task() const { return task_; }

private:
    ToyTask task_;
};

// Oracle outcome verifier: 1 for the ground-truth answer, 0 otherwise.
class OracleVerifier : public Scorer {
public:
    explicit OracleVerifier(std::string truth) : truth_(std::move(truth)) {}
    double score_outcome(const SearchState &, const std::string & answer) const override {
        return answer == truth_ ? 1.0 : 0.0;
    }
    double score_step(const SearchState &) const override { return 0.0; }

private:
    std::string truth_;
};

// Complete b-ary tree with a known value on every edge; expansion j from a
// node deterministically takes child j mod b. Terminal at `depth` steps.
// Node ids are heap order: root 0, children of n are n*b+1+j.
struct ToyTree {
    int branching = 2;
    int depth = 3;
    std::vector<double> edge_values; // indexed by node id, root entry unused

    int64_t node_count() const;
    int64_t child_id(int64_t node, int step) const { return node * branching + 1 + step; }
    int64_t node_of(std::span<const int> path) const;
    double path_value(std::span<const int> path) const;
    std::string path_answer(std::span<const int> path) const;
};

// The fixed demonstration tree used by tests and the CLI: binary, depth 3,
// with the best leaf hidden behind the weaker first step.
ToyTree make_fixed_toy_tree();
// Same values truncated to the given depth.
ToyTree make_fixed_toy_tree(int depth);

class ToyTreeGenerator : public Generator {
public:
    explicit ToyTreeGenerator(ToyTree tree) : tree_(std::move(tree)) {}
    SearchState expand(const SearchState & parent, int expansion_index) const override;
    std::string answer(const SearchState & state) const override;
    const ToyTree & tree() const { return tree_; }

private:
    ToyTree tree_;
};

class ToyTreeStepScorer : public Scorer {
public:
    explicit ToyTreeStepScorer(ToyTree tree) : tree_(std::move(tree)) {}
    double score_outcome(const SearchState & state, const std::string &) const override {
        return state.cumulative;
    }
    double score_step(const SearchState & partial) const override;

private:
    ToyTree tree_;
};

// -- search procedures -------------------------------------------------

struct SampleTrace {
    SearchState state;
    std::string answer;
    double outcome_score = 0.0;
};

// thrown when a generator fails mid-run; carries the samples finished so far
struct generation_error : std::runtime_error {
    generation_error(const std::string & msg, std::vector<SampleTrace> partial)
        : std::runtime_error(msg), partial_trace(std::move(partial)) {}
    std::vector<SampleTrace> partial_trace;
};

struct BestOfNResult {
    std::string answer;
    int winner_index = -1;
    std::vector<SampleTrace> samples;
};

// n independent complete samples; returns the argmax outcome score, ties
// broken by lowest sample index.
BestOfNResult best_of_n(const Generator & gen, const Scorer & scorer, int n, uint64_t seed,
                        int max_steps = 64);

struct MajorityVoteResult {
    std::string answer;
    std::vector<std::pair<std::string, int>> counts; // first-seen order
    std::vector<SampleTrace> samples;
};

// most frequent extracted answer; ties go to the first-seen answer
MajorityVoteResult majority_vote(const Generator & gen, int n, uint64_t seed, int max_steps = 64);

struct BeamCandidate {
    SearchState state;
    int parent = 0;    // frontier index in the previous round
    int expansion = -1; // -1 marks a frozen terminal carried forward
};

struct BeamRound {
    std::vector<BeamCandidate> frontier; // the kept top-m, in rank order
};

struct BeamResult {
    std::string answer;
    bool found_terminal = false;
    SearchState best;
    std::vector<BeamRound> rounds;
};

// Step-level beam search: every live beam is expanded `expansions` times per
// round, candidates are ranked by cumulative step score (ties: lower parent
// index, then lower expansion index), and terminal beams are frozen in place
// and keep occupying width. Returns the best terminal answer, or the best
// partial flagged via found_terminal=false when max_steps runs out.
BeamResult beam_search(const Generator & gen, const Scorer & scorer, int beam_width,
                       int expansions, int max_steps, uint64_t seed);

// -- scaling sweeps ----------------------------------------------------

enum class Method { best_of_n, majority_vote, beam_search };

const char * method_name(Method m);
Method method_from_name(const std::string & name);

struct TaskInstance {
    const Generator * gen = nullptr;
    const Scorer * scorer = nullptr; // unused by majority_vote
    std::string truth;
};

struct SweepConfig {
    Method method = Method::best_of_n;
    std::vector<int> budgets;
    int trials = 100;
    uint64_t seed = 0;
    int beam_expansions = 1; // beam width = budget / beam_expansions
    int max_steps = 64;
};

struct SweepRow {
    std::string method;
    int budget = 0;
    double accuracy = 0.0;
    double ci_low = 0.0; // 99% Wilson interval
    double ci_high = 0.0;
    int trials = 0;
};

std::vector<SweepRow> run_scaling_sweep(std::span<const TaskInstance> tasks, const SweepConfig & cfg);

std::string sweep_to_csv(std::span<const SweepRow> rows);

} // namespace tqk
