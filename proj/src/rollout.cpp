#include "vergsa/rollout.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <thread>
#include <unordered_map>

namespace vergsa {

namespace {

Solution degenerate_solution(const std::string& raw_reply) {
    Solution sol;
    sol.scene.raw_text = raw_reply;
    Subtask sub;
    sub.name = "unparsed generation";
    sub.supervision.variant = SupervisionVariant::Primitive;
    sub.supervision.code = "";
    sol.subtasks.push_back(std::move(sub));
    return sol;
}

bool is_degenerate(const Solution& sol) {
    return sol.subtasks.size() == 1 && sol.subtasks[0].supervision.code.empty();
}

}  // namespace

std::vector<Solution> generate_base_solutions(Model& policy, const TaskSpec& task,
                                              const PromptBundle& prompt, int n, int retry_budget,
                                              RolloutStats* stats) {
    (void)task;
    if (n < 1) throw InvalidSpec("base solution count must be >= 1");
    std::vector<Solution> out;
    bool any_parsed = false;
    for (int slot = 0; slot < n; ++slot) {
        std::optional<Solution> parsed;
        for (int attempt = 0; attempt <= retry_budget; ++attempt) {
            std::string reply = policy.generate(prompt);
            if (stats) ++stats->model_calls;
            try {
                parsed = parse_solution(reply);
                break;
            } catch (const Error&) {
                if (stats) ++stats->parse_failures;
            }
        }
        if (parsed) {
            any_parsed = true;
            out.push_back(std::move(*parsed));
        } else {
            if (stats) ++stats->degenerate_bases;
            out.push_back(degenerate_solution("unparseable after retries"));
        }
    }
    if (!any_parsed)
        throw ExhaustedRetries("no base solution parsed after " +
                               std::to_string((retry_budget + 1) * n) + " draws");
    return out;
}

std::vector<Solution> complete_from_substep(Model& completer, const TaskSpec& task,
                                            const Solution& base, std::size_t j, int completions,
                                            const ApiCatalog& catalog,
                                            std::span<const Solution> existing,
                                            RolloutStats* stats) {
    if (j < 1 || j > base.subtasks.size())
        throw OutOfRange("branch substep " + std::to_string(j) + " out of range [1, " +
                         std::to_string(base.subtasks.size()) + "]");
    if (completions < 1) throw InvalidSpec("completions must be >= 1");

    std::vector<Subtask> shared(base.subtasks.begin(),
                                base.subtasks.begin() + static_cast<std::ptrdiff_t>(j));
    PromptBundle prompt =
        build_completion_prompt(task, base.scene, shared, catalog, completion_instructions());

    std::vector<Solution> out;
    auto duplicate = [&](const Solution& cand) {
        if (same_subtask_sequence(cand.subtasks, base.subtasks)) return true;
        for (const auto& e : existing)
            if (same_subtask_sequence(cand.subtasks, e.subtasks)) return true;
        for (const auto& o : out)
            if (same_subtask_sequence(cand.subtasks, o.subtasks)) return true;
        return false;
    };

    for (int k = 0; k < completions; ++k) {
        std::string reply = completer.generate(prompt);
        if (stats) ++stats->model_calls;
        std::vector<Subtask> continuation;
        try {
            continuation = parse_continuation(reply);
        } catch (const Error&) {
            if (stats) ++stats->skipped_completions;
            continue;
        }
        Solution cand;
        cand.scene = base.scene;
        cand.subtasks = shared;
        cand.subtasks.insert(cand.subtasks.end(), continuation.begin(), continuation.end());
        if (duplicate(cand)) {
            if (stats) ++stats->dedup_hits;
            continue;
        }
        out.push_back(std::move(cand));
    }
    return out;
}

ArletResult run_arlet_mcts(Model& policy, Model& completer, const ScriptedWorld& world,
                           const TaskSpec& task, const RolloutConfig& config,
                           const ApiCatalog& catalog, const std::vector<ScoredEntry>& exemplars) {
    if (config.n_base < 1 || config.completions_per_substep < 1)
        throw InvalidSpec("rollout counts must be >= 1");

    ArletResult result;
    result.tree.root = task;

    PromptBundle base_prompt = build_prompt(task, exemplars, catalog, generation_instructions());
    std::vector<Solution> bases = generate_base_solutions(
        policy, task, base_prompt, config.n_base, config.retry_budget, &result.stats);

    auto add_node = [&](Solution sol, NodeOrigin origin, bool degenerate) {
        TreeNode node;
        node.id = result.tree.nodes.size();
        node.origin = origin;
        node.solution = std::move(sol);
        node.degenerate = degenerate;
        result.tree.nodes.push_back(std::move(node));
        return result.tree.nodes.back().id;
    };

    for (int i = 0; i < config.n_base; ++i)
        add_node(bases[static_cast<std::size_t>(i)], {i, 0, 0},
                 is_degenerate(bases[static_cast<std::size_t>(i)]));

    // Branch completions from every substep of every configured base.
    for (int i = 0; i < config.n_base; ++i) {
        if (config.branch == BranchScope::OneBase && i != config.branch_base_index) continue;
        const TreeNode& base_node = result.tree.nodes[static_cast<std::size_t>(i)];
        if (base_node.degenerate) continue;
        Solution base = base_node.solution;  // copy: nodes vector reallocates below
        for (std::size_t j = 1; j <= base.subtasks.size(); ++j) {
            std::vector<Solution> existing;
            existing.reserve(result.tree.nodes.size());
            for (const auto& n : result.tree.nodes) existing.push_back(n.solution);

            std::vector<Subtask> shared(base.subtasks.begin(),
                                        base.subtasks.begin() + static_cast<std::ptrdiff_t>(j));
            PromptBundle prompt = build_completion_prompt(task, base.scene, shared, catalog,
                                                          completion_instructions());
            int next_k = 1;
            for (int c = 0; c < config.completions_per_substep; ++c) {
                std::string reply = completer.generate(prompt);
                ++result.stats.model_calls;
                std::vector<Subtask> continuation;
                try {
                    continuation = parse_continuation(reply);
                } catch (const Error&) {
                    ++result.stats.skipped_completions;
                    continue;
                }
                Solution cand;
                cand.scene = base.scene;
                cand.subtasks = shared;
                cand.subtasks.insert(cand.subtasks.end(), continuation.begin(), continuation.end());

                NodeId dup_target = 0;
                bool dup = false;
                for (const auto& n : result.tree.nodes) {
                    if (same_subtask_sequence(cand.subtasks, n.solution.subtasks)) {
                        dup = true;
                        dup_target = n.id;
                        break;
                    }
                }
                NodeOrigin origin{i, static_cast<int>(j), next_k++};
                if (dup) {
                    ++result.stats.dedup_hits;
                    result.tree.dedup_refs.push_back({origin, dup_target});
                    continue;
                }
                add_node(std::move(cand), origin, false);
            }
        }
    }

    // Execute every node through the caching executor; distinct subtask
    // contents are executed exactly once regardless of how many nodes share
    // them. Parallel across nodes, merged by index.
    Executor executor(world, catalog, ExecOptions{config.mode, 0.0, 0});
    std::vector<std::optional<ExecutionOutcome>> outcomes(result.tree.nodes.size());
    unsigned threads = std::max(1u, config.threads);
    if (threads == 1) {
        for (std::size_t idx = 0; idx < result.tree.nodes.size(); ++idx)
            outcomes[idx] = executor.run_solution(result.tree.nodes[idx].solution);
    } else {
        std::vector<std::thread> workers;
        std::atomic<std::size_t> next{0};
        for (unsigned t = 0; t < threads; ++t) {
            workers.emplace_back([&]() {
                for (std::size_t idx = next.fetch_add(1); idx < result.tree.nodes.size();
                     idx = next.fetch_add(1))
                    outcomes[idx] = executor.run_solution(result.tree.nodes[idx].solution);
            });
        }
        for (auto& w : workers) w.join();
    }
    for (std::size_t idx = 0; idx < result.tree.nodes.size(); ++idx)
        result.tree.nodes[idx].outcome = outcomes[idx];
    result.stats.subtask_executions = executor.subtask_executions();

    result.rewards = label_tree(result.tree, config.label_dedup);
    return result;
}

RewardTable label_tree(const SolutionTree& tree, bool label_dedup) {
    RewardTable table;
    table.labels.resize(tree.nodes.size());
    std::unordered_map<std::string, int> first_seen;  // prefix content -> label

    for (const TreeNode& node : tree.nodes) {
        auto& slots = table.labels[node.id];
        slots.assign(node.solution.subtasks.size(), 0);
        if (node.degenerate) continue;
        if (!node.outcome) throw UnexecutedNode("node " + std::to_string(node.id) + " has no outcome");
        const ExecutionOutcome& outcome = *node.outcome;
        for (std::size_t m = 1; m <= node.solution.subtasks.size(); ++m) {
            bool bit = m - 1 < outcome.subtask_success.size() && outcome.subtask_success[m - 1];
            int own = bit && outcome.overall_success ? 1 : 0;
            if (!label_dedup) {
                slots[m - 1] = own;
                continue;
            }
            std::string key = prefix_content_key(node.solution.scene, node.solution.subtasks, m);
            auto [it, fresh] = first_seen.emplace(key, own);
            slots[m - 1] = fresh ? own : it->second;
        }
    }
    return table;
}

std::vector<LabeledPrefix> emit_dataset(const SolutionTree& tree, const RewardTable& rewards) {
    std::vector<LabeledPrefix> out;
    // prefix content -> set of labels already emitted for it
    std::unordered_map<std::string, std::vector<int>> emitted;

    for (const TreeNode& node : tree.nodes) {
        if (node.degenerate) continue;
        if (!node.outcome) throw UnexecutedNode("node " + std::to_string(node.id) + " has no outcome");
        for (std::size_t m = 1; m <= node.solution.subtasks.size(); ++m) {
            int label = rewards.at(node.id, m);
            std::string key = prefix_content_key(node.solution.scene, node.solution.subtasks, m);
            auto& labels_seen = emitted[key];
            if (std::find(labels_seen.begin(), labels_seen.end(), label) != labels_seen.end())
                continue;  // duplicated prefix, same label: first-seen record stands
            labels_seen.push_back(label);
            LabeledPrefix lp;
            lp.task = tree.root;
            lp.prefix = prefix(node.solution, m);
            lp.label = label;
            lp.provenance = node.origin;
            lp.provenance_m = m;
            out.push_back(std::move(lp));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace {

nlohmann::json origin_to_json(const NodeOrigin& o) {
    return nlohmann::json::array({o.base, o.substep, o.completion});
}

NodeOrigin origin_from_json(const nlohmann::json& j) {
    NodeOrigin o;
    o.base = j.at(0).get<int>();
    o.substep = j.at(1).get<int>();
    o.completion = j.at(2).get<int>();
    return o;
}

}  // namespace

nlohmann::json tree_to_json(const SolutionTree& tree, const RewardTable& rewards) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : tree.nodes) {
        nlohmann::json nj = {{"id", n.id},
                             {"origin", origin_to_json(n.origin)},
                             {"solution", n.solution},
                             {"degenerate", n.degenerate}};
        if (n.outcome) nj["outcome"] = *n.outcome;
        nodes.push_back(std::move(nj));
    }
    nlohmann::json refs = nlohmann::json::array();
    for (const auto& r : tree.dedup_refs)
        refs.push_back({{"origin", origin_to_json(r.origin)}, {"target", r.target}});
    return {{"task", tree.root},
            {"nodes", nodes},
            {"dedup_refs", refs},
            {"rewards", rewards.labels}};
}

std::pair<SolutionTree, RewardTable> tree_from_json(const nlohmann::json& j) {
    SolutionTree tree;
    tree.root = j.at("task").get<TaskSpec>();
    for (const auto& nj : j.at("nodes")) {
        TreeNode n;
        n.id = nj.at("id").get<NodeId>();
        n.origin = origin_from_json(nj.at("origin"));
        n.solution = nj.at("solution").get<Solution>();
        n.degenerate = nj.value("degenerate", false);
        if (nj.contains("outcome")) n.outcome = nj.at("outcome").get<ExecutionOutcome>();
        tree.nodes.push_back(std::move(n));
    }
    if (j.contains("dedup_refs")) {
        for (const auto& rj : j.at("dedup_refs"))
            tree.dedup_refs.push_back({origin_from_json(rj.at("origin")), rj.at("target").get<NodeId>()});
    }
    RewardTable rewards;
    if (j.contains("rewards"))
        rewards.labels = j.at("rewards").get<std::vector<std::vector<int>>>();
    else
        rewards = label_tree(tree);
    return {std::move(tree), std::move(rewards)};
}

nlohmann::json labeled_prefix_to_json(const LabeledPrefix& lp) {
    return {{"task_name", lp.task.name},
            {"m", lp.prefix.m},
            {"scene", lp.prefix.scene},
            {"subtasks", lp.prefix.subtasks},
            {"label", lp.label},
            {"provenance", nlohmann::json::array({lp.provenance.base, lp.provenance.substep,
                                                  lp.provenance.completion, lp.provenance_m})}};
}

LabeledPrefix labeled_prefix_from_json(const nlohmann::json& j) {
    LabeledPrefix lp;
    lp.task.name = j.at("task_name").get<std::string>();
    lp.prefix.scene = j.value("scene", SceneConfiguration{});
    lp.prefix.subtasks = j.value("subtasks", std::vector<Subtask>{});
    lp.prefix.m = j.value("m", lp.prefix.subtasks.size());
    lp.label = j.at("label").get<int>();
    if (j.contains("provenance")) {
        const auto& p = j.at("provenance");
        lp.provenance.base = p.at(0).get<int>();
        lp.provenance.substep = p.at(1).get<int>();
        lp.provenance.completion = p.at(2).get<int>();
        lp.provenance_m = p.at(3).get<std::size_t>();
    }
    return lp;
}

void save_dataset(const std::vector<LabeledPrefix>& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write dataset: " + path);
    for (const auto& lp : data) out << labeled_prefix_to_json(lp).dump() << '\n';
}

std::vector<LabeledPrefix> load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open dataset: " + path);
    std::vector<LabeledPrefix> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        out.push_back(labeled_prefix_from_json(nlohmann::json::parse(line)));
    }
    return out;
}

void attach_tasks(std::vector<LabeledPrefix>& data, const std::vector<TaskSpec>& tasks) {
    std::unordered_map<std::string, const TaskSpec*> by_name;
    for (const auto& t : tasks) by_name[t.name] = &t;
    for (auto& lp : data) {
        auto it = by_name.find(lp.task.name);
        if (it != by_name.end()) lp.task = *it->second;
    }
}

}  // namespace vergsa
