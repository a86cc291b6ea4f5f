#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "vergsa/rollout.hpp"
#include "vergsa/scripted_env.hpp"
#include "vergsa/verifier.hpp"

namespace vergsa {

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

struct MetricsReport {
    double atsr = 0.0;          // successful solutions / total solutions
    double assr = 0.0;          // successful subtasks / total subtasks
    double avg_subtasks = 0.0;  // subtasks per solution
    struct Counts {
        std::size_t solutions = 0;
        std::size_t successes = 0;
        std::size_t subtasks = 0;
        std::size_t subtask_successes = 0;
    } counts;
};

struct ExecutedRecord {
    std::string task_name;
    Solution solution;
    ExecutionOutcome outcome;
};

/// Exact integer counting; ratios are reduced once at the end and printed to
/// four decimals in reports. Throws EmptyRecords.
MetricsReport compute_metrics(const std::vector<ExecutedRecord>& records);

std::string format_metrics(const MetricsReport& report);

void save_records(const std::vector<ExecutedRecord>& records, const std::string& path);
std::vector<ExecutedRecord> load_records(const std::string& path);

// ---------------------------------------------------------------------------
// Dataset splits
// ---------------------------------------------------------------------------

enum class SplitMode { ByTask, BySolution };

struct SplitSpec {
    SplitMode mode = SplitMode::ByTask;
    double test_fraction = 0.3;
    std::uint64_t seed = 0;
};

/// Deterministic partition of labeled prefixes.
///   by_task: no task name appears on both sides (>= 2 distinct names, else
///            TooFewTasks).
///   by_solution: each task's solutions are split; a multi-solution task
///            contributes to both sides where counts allow.
std::pair<std::vector<LabeledPrefix>, std::vector<LabeledPrefix>> split_dataset(
    const std::vector<LabeledPrefix>& prefixes, const SplitSpec& spec);

// ---------------------------------------------------------------------------
// Selection evaluation
// ---------------------------------------------------------------------------

struct CandidateSet {
    TaskSpec task;
    ScriptedWorld world;
    std::vector<Solution> candidates;
    // Parallel to candidates; empty entries are executed on demand.
    std::vector<ExecutionOutcome> outcomes;
};

/// Scoring hook: (task, prefix) -> [0,1]. The default wraps a trained
/// verifier; tests inject oracles.
using PrefixScorer = std::function<double(const TaskSpec&, const TracePrefix&)>;

PrefixScorer verifier_scorer(const VerifierParams& params, const Featurizer& featurizer);

struct SelectionRow {
    std::string model;  // "BaseModel" or "PRM-<strategy>"
    MetricsReport metrics;
};

/// For each task: score every candidate prefix, aggregate per strategy, pick
/// via select_best, and compute metrics over the selected solutions. The
/// BaseModel row picks uniformly at random (seeded) to stand for unverified
/// generation.
std::vector<SelectionRow> evaluate_selection(const std::vector<CandidateSet>& suite,
                                             const PrefixScorer& scorer,
                                             const std::vector<AggregationStrategy>& strategies,
                                             const ApiCatalog& catalog, std::uint64_t baseline_seed);

/// Aligned text table plus machine-readable JSON, one row per model variant.
std::string format_selection_table(const std::string& split_name,
                                   const std::vector<SelectionRow>& rows);
nlohmann::json selection_rows_to_json(const std::string& split_name,
                                      const std::vector<SelectionRow>& rows);

nlohmann::json candidate_set_to_json(const CandidateSet& cs);
CandidateSet candidate_set_from_json(const nlohmann::json& j);

}  // namespace vergsa
