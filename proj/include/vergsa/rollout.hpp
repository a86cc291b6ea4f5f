#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vergsa/model_io.hpp"
#include "vergsa/scripted_env.hpp"
#include "vergsa/trace.hpp"

namespace vergsa {

using NodeId = std::size_t;

/// (i, j, k): base solution index, branch substep (0 for bases), completion
/// index within the substep (0 for bases).
struct NodeOrigin {
    int base = 0;
    int substep = 0;
    int completion = 0;
};

struct TreeNode {
    NodeId id = 0;
    NodeOrigin origin;
    Solution solution;
    std::optional<ExecutionOutcome> outcome;
    bool degenerate = false;  // unparseable generation; excluded from branching and datasets
};

/// A completion whose subtask sequence exactly matched an existing node.
/// Recorded as a reference; never executed again.
struct DedupRef {
    NodeOrigin origin;
    NodeId target = 0;
};

struct SolutionTree {
    TaskSpec root;
    std::vector<TreeNode> nodes;  // index == NodeId
    std::vector<DedupRef> dedup_refs;
};

/// Per-(node, subtask) reward labels. A slot holds 1 iff its subtask bit and
/// its solution's overall bit are both 1; a slot whose prefix content was
/// already labeled by an earlier node inherits that first-seen label instead
/// (matching the dedup semantics of the golden rollouts).
struct RewardTable {
    std::vector<std::vector<int>> labels;  // labels[node][m-1]

    int at(NodeId node, std::size_t m) const { return labels.at(node).at(m - 1); }
};

struct LabeledPrefix {
    TaskSpec task;
    TracePrefix prefix;
    int label = 0;
    NodeOrigin provenance;
    std::size_t provenance_m = 0;
};

enum class BranchScope { AllBases, OneBase };

struct RolloutConfig {
    int n_base = 3;
    int completions_per_substep = 3;
    ExecMode mode = ExecMode::RunAll;
    BranchScope branch = BranchScope::AllBases;
    int branch_base_index = 0;  // used when branch == OneBase
    int retry_budget = 2;
    // First-seen label inheritance for duplicated prefixes. Off, every slot
    // is strictly y_m * y-hat of its own node.
    bool label_dedup = true;
    unsigned threads = 1;
};

struct RolloutStats {
    std::size_t model_calls = 0;
    std::size_t parse_failures = 0;
    std::size_t degenerate_bases = 0;
    std::size_t skipped_completions = 0;
    std::size_t dedup_hits = 0;
    std::size_t subtask_executions = 0;
};

struct ArletResult {
    SolutionTree tree;
    RewardTable rewards;
    RolloutStats stats;
};

/// Samples N base solutions from the policy. Unparseable generations are
/// retried up to `retry_budget` extra draws; a slot that never parses is
/// recorded as a degenerate single-subtask failure. Throws ExhaustedRetries
/// when no slot parses at all.
std::vector<Solution> generate_base_solutions(Model& policy, const TaskSpec& task,
                                              const PromptBundle& prompt, int n,
                                              int retry_budget = 2, RolloutStats* stats = nullptr);

/// Completions of `base` from substep j (1-based): each shares the first j
/// subtasks verbatim and continues with newly generated ones. Duplicates of
/// `base`, of an entry in `existing`, or within the batch are dropped and
/// counted in `stats->dedup_hits`.
std::vector<Solution> complete_from_substep(Model& completer, const TaskSpec& task,
                                            const Solution& base, std::size_t j, int completions,
                                            const ApiCatalog& catalog,
                                            std::span<const Solution> existing = {},
                                            RolloutStats* stats = nullptr);

/// Algorithm: expand N bases, branch completions from every configured
/// substep, execute everything through the caching executor, then assign
/// reward labels by the conjunction rule with first-seen inheritance.
ArletResult run_arlet_mcts(Model& policy, Model& completer, const ScriptedWorld& world,
                           const TaskSpec& task, const RolloutConfig& config,
                           const ApiCatalog& catalog = default_catalog(),
                           const std::vector<ScoredEntry>& exemplars = {});

/// Labeling pass alone (used by tests and by trees built from fixtures).
RewardTable label_tree(const SolutionTree& tree, bool label_dedup = true);

/// One LabeledPrefix per node prefix; duplicated prefixes keep a single
/// record with first-seen provenance, while genuinely conflicting labels for
/// the same prefix are all emitted with their own provenance. Degenerate
/// nodes emit nothing. Throws UnexecutedNode.
std::vector<LabeledPrefix> emit_dataset(const SolutionTree& tree, const RewardTable& rewards);

// Tree dump: {task, nodes:[{id, origin, solution, outcome, degenerate}],
// dedup_refs, rewards}.
nlohmann::json tree_to_json(const SolutionTree& tree, const RewardTable& rewards);
std::pair<SolutionTree, RewardTable> tree_from_json(const nlohmann::json& j);

// Dataset lines: {task_name, m, scene, subtasks, label, provenance:[i,j,k,m]}.
nlohmann::json labeled_prefix_to_json(const LabeledPrefix& lp);
LabeledPrefix labeled_prefix_from_json(const nlohmann::json& j);
void save_dataset(const std::vector<LabeledPrefix>& data, const std::string& path);
std::vector<LabeledPrefix> load_dataset(const std::string& path);
/// Rehydrates full task specs (articulation trees) onto records whose tasks
/// were reduced to names by the JSONL round trip.
void attach_tasks(std::vector<LabeledPrefix>& data, const std::vector<TaskSpec>& tasks);

}  // namespace vergsa
