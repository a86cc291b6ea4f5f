#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "vergsa/harness.hpp"
#include "vergsa/model_io.hpp"
#include "vergsa/rollout.hpp"
#include "vergsa/scripted_env.hpp"
#include "vergsa/task_pool.hpp"

namespace vergsa::fixtures {

// ---------------------------------------------------------------------------
// Fold Chair golden fixture: two base rollouts plus one completion branching
// from the second base at substep 1. Reward labels: [0,0], [1,1], [1,0].
// ---------------------------------------------------------------------------

TaskSpec fold_chair_task();
ScriptedWorld fold_chair_world();

/// The three rollout reply texts (two bases, one continuation for substep 1,
/// one "no further subtasks" continuation for substep 2).
std::string fold_chair_reply_rollout1();
std::string fold_chair_reply_rollout2();
std::string fold_chair_continuation_substep1();
std::string fold_chair_continuation_substep2();

/// Fixture bank keyed by the exact prompts a rollout over the task issues.
FixtureBank fold_chair_bank(const ApiCatalog& catalog);

/// The rollout configuration the fixture assumes: N=2 bases, one completion
/// per substep, branching from base index 1.
RolloutConfig fold_chair_config();

// ---------------------------------------------------------------------------
// The published 30-task corpus: per-task solution/subtask success counts.
// Totals: 150 solutions (83 successful), 287 subtasks (144 successful).
// ---------------------------------------------------------------------------

struct CorpusRow {
    std::string task;
    std::size_t solutions;
    std::size_t solution_successes;
    std::size_t subtasks;
    std::size_t subtask_successes;
};

const std::vector<CorpusRow>& corpus30_rows();

/// Deterministic synthetic records realizing the corpus counts, with
/// successful solutions carrying exactly the successful subtasks.
std::vector<ExecutedRecord> corpus30_records();

/// The same corpus as labeled prefixes (one per subtask, label = y_m * y-hat).
std::vector<LabeledPrefix> corpus30_prefixes();

// ---------------------------------------------------------------------------
// Retrieval fixtures reproducing the published similarity table: three novel
// tasks, each with two pool entries at the published cosine scores.
// ---------------------------------------------------------------------------

struct RetrievalFixtureCase {
    std::string novel_task;
    EmbeddingVector query;
    std::vector<std::pair<std::string, double>> expected;  // (name, similarity), rank order
};

struct RetrievalFixture {
    ExemplarPool pool;
    std::vector<RetrievalFixtureCase> cases;
};

RetrievalFixture similarity_table_fixture();

/// The 15 (name, description) pairs of the initial exemplar pool.
const std::vector<std::pair<std::string, std::string>>& initial_pool_tasks();
ExemplarPool initial_pool(const Embedder& embedder);

/// Minimal successful one-subtask solution (pool entries need one).
Solution trivial_successful_solution(const std::string& object_name);

// ---------------------------------------------------------------------------
// Synthetic generators for property and acceptance tests
// ---------------------------------------------------------------------------

ScriptedWorld random_world(std::mt19937_64& rng);

/// Random executed tree: N bases with random subtask counts and a few
/// completions, all with synthetic outcomes honoring the outcome invariant.
/// Subtask contents are unique per node, so no prefix dedup fires.
SolutionTree random_executed_tree(std::mt19937_64& rng);

/// Selection suite: n_tasks tasks, 3 candidates each, exactly one candidate
/// passing execution. Failures are featurizable (bad API, absent link or
/// missing success condition).
std::vector<CandidateSet> make_selection_suite(std::uint64_t seed, std::size_t n_tasks);

/// Labeled prefixes for training a verifier on a selection suite.
std::vector<LabeledPrefix> suite_training_prefixes(const std::vector<CandidateSet>& suite,
                                                   const ApiCatalog& catalog);

}  // namespace vergsa::fixtures
