// Command-line driver for the pipeline: exemplar pool maintenance, solution
// generation, reward-labeled rollouts, dataset emission, verifier training,
// selection evaluation, judging and metrics.

#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "vergsa/config.hpp"
#include "vergsa/fixtures.hpp"
#include "vergsa/harness.hpp"

namespace fs = std::filesystem;
using namespace vergsa;

namespace {

struct GlobalArgs {
    std::string config_path;
    std::string out_dir = ".";
    std::int64_t seed_override = -1;
};

Config load(const GlobalArgs& g) {
    Config config = load_config(g.config_path);
    if (g.seed_override >= 0) config.seed = static_cast<std::uint64_t>(g.seed_override);
    return config;
}

std::string out_path(const GlobalArgs& g, const std::string& path) {
    fs::path p(path);
    if (p.is_absolute()) return path;
    fs::create_directories(g.out_dir);
    return (fs::path(g.out_dir) / p).string();
}

nlohmann::json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open file: " + path);
    nlohmann::json j;
    in >> j;
    return j;
}

void write_json(const std::string& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write file: " + path);
    out << j.dump(2) << '\n';
}

TaskSpec load_task(const std::string& path) {
    TaskSpec task = read_json(path).get<TaskSpec>();
    task.validate();
    return task;
}

ExemplarPool load_or_make_pool(const Config& config, const Embedder& embedder) {
    if (fs::exists(config.pool_path)) return load_pool(config.pool_path);
    return make_pool(embedder);
}

std::vector<ScoredEntry> retrieve_exemplars(const Config& config, const Embedder& embedder,
                                            const TaskSpec& task) {
    if (!config.use_pool || !fs::exists(config.pool_path)) return {};
    ExemplarPool pool = load_pool(config.pool_path);
    if (pool.entries.empty()) return {};
    return retrieve_top_k(pool, embed_task(task.name, task.description, embedder), config.pool_k);
}

// --- pool -------------------------------------------------------------

int cmd_pool_add(const GlobalArgs& g, const std::string& task_path, const std::string& name,
                 const std::string& description, const std::string& solution_path) {
    Config config = load(g);
    auto embedder = make_embedder(config);
    ExemplarPool pool = load_or_make_pool(config, *embedder);

    TaskSpec task;
    if (!task_path.empty()) {
        task = load_task(task_path);
    } else {
        task.name = name;
        task.description = description;
    }
    auto [doc_name, solution] = solution_from_document(read_json(solution_path));
    (void)doc_name;
    insert_on_success(pool, task, solution, *embedder, config.pool_duplicate);
    save_pool(pool, config.pool_path);
    std::cout << "pool size " << pool.size() << " (" << config.pool_path << ")\n";
    return 0;
}

int cmd_pool_list(const GlobalArgs& g) {
    Config config = load(g);
    auto embedder = make_embedder(config);
    ExemplarPool pool = load_or_make_pool(config, *embedder);
    for (const auto& e : pool.entries)
        std::cout << e.inserted_at << "\t" << e.task.name << "\t" << e.task.description << "\n";
    std::cout << pool.size() << " entries, dimension " << pool.dimension << "\n";
    return 0;
}

int cmd_pool_retrieve(const GlobalArgs& g, const std::string& name, const std::string& description,
                      std::size_t k) {
    Config config = load(g);
    auto embedder = make_embedder(config);
    ExemplarPool pool = load_pool(config.pool_path);
    auto hits =
        retrieve_top_k(pool, embed_task(name, description, *embedder), k == 0 ? config.pool_k : k);
    for (const auto& hit : hits) std::cout << hit.entry.task.name << "\t" << hit.similarity << "\n";
    return 0;
}

// --- generate ---------------------------------------------------------

int cmd_generate(const GlobalArgs& g, const std::string& task_path, const std::string& out,
                 bool no_pool) {
    Config config = load(g);
    TaskSpec task = load_task(task_path);
    auto embedder = make_embedder(config);
    auto policy = make_policy(config);

    std::vector<ScoredEntry> exemplars;
    if (!no_pool) exemplars = retrieve_exemplars(config, *embedder, task);
    PromptBundle prompt = build_prompt(task, exemplars, config.catalog(), generation_instructions());
    auto solutions = generate_base_solutions(*policy, task, prompt, config.rollout.n_base,
                                             config.rollout.retry_budget);

    nlohmann::json doc;
    doc["task"] = task.name;
    doc["exemplars_used"] = prompt.exemplars_used;
    doc["solutions"] = nlohmann::json::array();
    for (const auto& sol : solutions) doc["solutions"].push_back(solution_document(task.name, sol));
    write_json(out_path(g, out), doc);
    std::cout << "generated " << solutions.size() << " solutions for " << task.name << "\n";
    return 0;
}

// --- rollout ----------------------------------------------------------

int cmd_rollout(const GlobalArgs& g, const std::string& task_path, const std::string& world_path,
                const std::string& out, const std::string& records_out,
                const std::string& branch_bases) {
    Config config = load(g);
    if (!branch_bases.empty()) {
        if (branch_bases == "all") {
            config.rollout.branch = BranchScope::AllBases;
        } else {
            config.rollout.branch = BranchScope::OneBase;
            config.rollout.branch_base_index = std::stoi(branch_bases);
        }
    }
    TaskSpec task = load_task(task_path);
    ScriptedWorld world = load_world(world_path);
    auto embedder = make_embedder(config);
    auto policy = make_policy(config);
    auto completer = make_completer(config);
    auto exemplars = retrieve_exemplars(config, *embedder, task);

    ArletResult result =
        run_arlet_mcts(*policy, *completer, world, task, config.rollout, config.catalog(), exemplars);
    write_json(out_path(g, out), tree_to_json(result.tree, result.rewards));

    if (!records_out.empty()) {
        std::vector<ExecutedRecord> records;
        for (const auto& node : result.tree.nodes)
            if (!node.degenerate && node.outcome)
                records.push_back({task.name, node.solution, *node.outcome});
        save_records(records, out_path(g, records_out));
    }
    std::cout << "tree: " << result.tree.nodes.size() << " nodes, " << result.tree.dedup_refs.size()
              << " dedup refs, " << result.stats.subtask_executions << " subtask executions\n";
    return 0;
}

// --- dataset ----------------------------------------------------------

int cmd_dataset(const GlobalArgs& g, const std::vector<std::string>& tree_paths,
                const std::string& out) {
    std::vector<LabeledPrefix> data;
    nlohmann::json tasks = nlohmann::json::array();
    for (const auto& path : tree_paths) {
        auto [tree, rewards] = tree_from_json(read_json(path));
        auto part = emit_dataset(tree, rewards);
        data.insert(data.end(), part.begin(), part.end());
        tasks.push_back(tree.root);
    }
    std::string data_path = out_path(g, out);
    save_dataset(data, data_path);
    // sidecar with the full task specs (the JSONL lines carry names only)
    write_json(data_path + ".tasks.json", tasks);
    int positives = 0;
    for (const auto& lp : data) positives += lp.label;
    std::cout << data.size() << " labeled prefixes (" << positives << " positive) -> " << data_path
              << "\n";
    return 0;
}

// --- train ------------------------------------------------------------

std::vector<LabeledPrefix> load_dataset_with_tasks(const std::string& data_path,
                                                   const std::string& tasks_path) {
    auto data = load_dataset(data_path);
    std::string sidecar = tasks_path.empty() ? data_path + ".tasks.json" : tasks_path;
    if (fs::exists(sidecar)) {
        auto tasks = read_json(sidecar).get<std::vector<TaskSpec>>();
        attach_tasks(data, tasks);
    }
    return data;
}

int cmd_train(const GlobalArgs& g, const std::string& data_path, const std::string& tasks_path,
              const std::string& out) {
    Config config = load(g);
    auto data = load_dataset_with_tasks(data_path, tasks_path);
    Featurizer featurizer(config.catalog(), config.stop_list());
    VerifierParams params = train(data, featurizer, config.train);
    save_params(params, out_path(g, out));
    std::cout << "trained on " << data.size() << " prefixes, final loss "
              << params.training_meta.final_loss << "\n";
    return 0;
}

// --- evaluate ----------------------------------------------------------

int cmd_evaluate(const GlobalArgs& g, const std::string& data_path, const std::string& tasks_path,
                 const std::vector<std::string>& tree_paths, const std::string& params_path,
                 const std::string& strategy_arg, const std::string& split_arg) {
    Config config = load(g);
    auto data = load_dataset_with_tasks(data_path, tasks_path);

    struct TreeBundle {
        SolutionTree tree;
        RewardTable rewards;
    };
    std::vector<TreeBundle> trees;
    for (const auto& path : tree_paths) {
        auto [tree, rewards] = tree_from_json(read_json(path));
        trees.push_back({std::move(tree), std::move(rewards)});
    }

    std::vector<AggregationStrategy> strategies;
    if (strategy_arg == "all") {
        for (auto v : {Aggregation::Mean, Aggregation::GeoMean, Aggregation::Min, Aggregation::Max,
                       Aggregation::Last})
            strategies.push_back({v, config.strategy_threshold});
    } else {
        strategies.push_back({aggregation_from_string(strategy_arg), config.strategy_threshold});
    }

    std::vector<SplitMode> splits;
    if (split_arg == "task")
        splits = {SplitMode::ByTask};
    else if (split_arg == "solution")
        splits = {SplitMode::BySolution};
    else if (split_arg == "both")
        splits = {SplitMode::ByTask, SplitMode::BySolution};
    else
        throw ConfigError("--split must be task, solution or both");

    Featurizer featurizer(config.catalog(), config.stop_list());
    std::optional<VerifierParams> fixed_params;
    if (!params_path.empty()) fixed_params = load_params(params_path);

    for (SplitMode mode : splits) {
        std::string split_name = mode == SplitMode::ByTask ? "tasks" : "solutions";
        auto [train_split, test_split] =
            split_dataset(data, {mode, config.split_test_fraction, config.seed});

        VerifierParams params =
            fixed_params ? *fixed_params : train(train_split, featurizer, config.train);

        // Candidate sets come from the rollout trees, restricted to the test
        // partition: whole tasks under the task split, per-task solution
        // subsets under the solution split.
        std::set<std::string> test_tasks;
        std::set<std::string> test_solutions;  // task \x1f i:j:k
        for (const auto& lp : test_split) {
            test_tasks.insert(lp.task.name);
            test_solutions.insert(lp.task.name + '\x1f' + std::to_string(lp.provenance.base) + ":" +
                                  std::to_string(lp.provenance.substep) + ":" +
                                  std::to_string(lp.provenance.completion));
        }

        std::vector<CandidateSet> suite;
        for (const auto& bundle : trees) {
            if (!test_tasks.count(bundle.tree.root.name)) continue;
            CandidateSet cs;
            cs.task = bundle.tree.root;
            for (const auto& node : bundle.tree.nodes) {
                if (node.degenerate || !node.outcome) continue;
                if (mode == SplitMode::BySolution) {
                    std::string key = bundle.tree.root.name + '\x1f' +
                                      std::to_string(node.origin.base) + ":" +
                                      std::to_string(node.origin.substep) + ":" +
                                      std::to_string(node.origin.completion);
                    if (!test_solutions.count(key)) continue;
                }
                cs.candidates.push_back(node.solution);
                cs.outcomes.push_back(*node.outcome);
            }
            if (!cs.candidates.empty()) suite.push_back(std::move(cs));
        }
        if (suite.empty()) {
            std::cout << "split by " << split_name << ": no test candidates\n";
            continue;
        }

        auto scorer = verifier_scorer(params, featurizer);
        auto rows = evaluate_selection(suite, scorer, strategies, config.catalog(), config.seed);

        std::string table = format_selection_table(split_name, rows);
        std::cout << table << "\n";
        std::ofstream txt(out_path(g, "report_" + split_name + ".txt"));
        txt << table;
        write_json(out_path(g, "report_" + split_name + ".json"),
                   selection_rows_to_json(split_name, rows));
    }
    return 0;
}

// --- judge ------------------------------------------------------------

int cmd_judge(const GlobalArgs& g, const std::string& task_path, const std::string& solution_path,
              const std::string& out) {
    Config config = load(g);
    TaskSpec task = load_task(task_path);
    auto [name, solution] = solution_from_document(read_json(solution_path));
    (void)name;
    auto judge = make_judge(config);

    nlohmann::json verdicts = nlohmann::json::array();
    for (std::size_t i = 0; i < solution.subtasks.size(); ++i) {
        JudgeVerdict v = judge_subtask(*judge, task, solution.subtasks[i]);
        std::cout << "subtask " << (i + 1) << " [" << solution.subtasks[i].name << "]: " << v.value
                  << "\n";
        verdicts.push_back({{"subtask", solution.subtasks[i].name},
                            {"value", v.value},
                            {"ternary", v.ternary()},
                            {"raw_reply", v.raw_reply}});
    }
    if (!out.empty()) write_json(out_path(g, out), verdicts);
    return 0;
}

// --- metrics ----------------------------------------------------------

int cmd_metrics(const GlobalArgs& g, const std::string& in) {
    (void)load(g);  // config must exist and parse, per the CLI contract
    auto records = load_records(in);
    std::cout << format_metrics(compute_metrics(records));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Verified generative skill acquisition pipeline"};
    app.require_subcommand(1);

    GlobalArgs g;
    app.add_option("--config", g.config_path, "Configuration file (key = value lines)")->required();
    app.add_option("--out-dir", g.out_dir, "Directory for output files");
    app.add_option("--seed", g.seed_override, "Override the configured seed");

    // pool
    auto* pool = app.add_subcommand("pool", "Exemplar task pool maintenance");
    pool->require_subcommand(1);
    std::string pool_task, pool_name, pool_desc, pool_solution;
    auto* pool_add = pool->add_subcommand("add", "Insert a successfully executed task");
    pool_add->add_option("--task", pool_task, "Task spec JSON");
    pool_add->add_option("--name", pool_name, "Task name (alternative to --task)");
    pool_add->add_option("--description", pool_desc, "Task description");
    pool_add->add_option("--solution", pool_solution, "Solution document JSON")->required();
    auto* pool_list = pool->add_subcommand("list", "List pool entries");
    std::string query_name, query_desc;
    std::size_t query_k = 0;
    auto* pool_retrieve = pool->add_subcommand("retrieve", "Top-K similar tasks for a query");
    pool_retrieve->add_option("--name", query_name)->required();
    pool_retrieve->add_option("--description", query_desc);
    pool_retrieve->add_option("--k", query_k);

    // generate
    std::string gen_task, gen_out = "solutions.json";
    bool gen_no_pool = false;
    auto* generate = app.add_subcommand("generate", "Sample base solutions from the policy model");
    generate->add_option("--task", gen_task)->required();
    generate->add_option("--out", gen_out);
    generate->add_flag("--no-pool", gen_no_pool, "Use the fixed built-in exemplar");

    // rollout
    std::string ro_task, ro_world, ro_out = "tree.json", ro_records, ro_branch;
    auto* rollout = app.add_subcommand("rollout", "Reward-labeled rollout tree for a task");
    rollout->add_option("--task", ro_task)->required();
    rollout->add_option("--world", ro_world)->required();
    rollout->add_option("--out", ro_out);
    rollout->add_option("--records", ro_records, "Also write executed records JSONL");
    rollout->add_option("--branch-bases", ro_branch, "'all' or a single base index");

    // dataset
    std::vector<std::string> ds_trees;
    std::string ds_out = "dataset.jsonl";
    auto* dataset = app.add_subcommand("dataset", "Labeled prefixes from rollout trees");
    dataset->add_option("--tree", ds_trees)->required()->expected(-1);
    dataset->add_option("--out", ds_out);

    // train
    std::string tr_data, tr_tasks, tr_out = "params.json";
    auto* train_cmd = app.add_subcommand("train", "Train the prefix verifier");
    train_cmd->add_option("--data", tr_data)->required();
    train_cmd->add_option("--tasks", tr_tasks, "Task specs sidecar JSON");
    train_cmd->add_option("--out", tr_out);

    // evaluate
    std::string ev_data, ev_tasks, ev_params, ev_strategy = "all", ev_split = "both";
    std::vector<std::string> ev_trees;
    auto* evaluate = app.add_subcommand("evaluate", "Best-of-N selection report per strategy");
    evaluate->add_option("--data", ev_data)->required();
    evaluate->add_option("--tasks", ev_tasks);
    evaluate->add_option("--tree", ev_trees)->required()->expected(-1);
    evaluate->add_option("--params", ev_params, "Use fixed params instead of per-split training");
    evaluate->add_option("--strategy", ev_strategy, "mean|geomean|min|max|last|all");
    evaluate->add_option("--split", ev_split, "task|solution|both");

    // judge
    std::string jd_task, jd_solution, jd_out;
    auto* judge = app.add_subcommand("judge", "Ternary verdict per subtask");
    judge->add_option("--task", jd_task)->required();
    judge->add_option("--solution", jd_solution)->required();
    judge->add_option("--out", jd_out);

    // metrics
    std::string mx_in;
    auto* metrics = app.add_subcommand("metrics", "Success-rate report over executed records");
    metrics->add_option("--in", mx_in)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (pool_add->parsed()) return cmd_pool_add(g, pool_task, pool_name, pool_desc, pool_solution);
        if (pool_list->parsed()) return cmd_pool_list(g);
        if (pool_retrieve->parsed()) return cmd_pool_retrieve(g, query_name, query_desc, query_k);
        if (generate->parsed()) return cmd_generate(g, gen_task, gen_out, gen_no_pool);
        if (rollout->parsed()) return cmd_rollout(g, ro_task, ro_world, ro_out, ro_records, ro_branch);
        if (dataset->parsed()) return cmd_dataset(g, ds_trees, ds_out);
        if (train_cmd->parsed()) return cmd_train(g, tr_data, tr_tasks, tr_out);
        if (evaluate->parsed())
            return cmd_evaluate(g, ev_data, ev_tasks, ev_trees, ev_params, ev_strategy, ev_split);
        if (judge->parsed()) return cmd_judge(g, jd_task, jd_solution, jd_out);
        if (metrics->parsed()) return cmd_metrics(g, mx_in);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: malformed JSON input: " << e.what() << "\n";
        return 2;
    }
    std::cerr << "error: no subcommand\n";
    return 1;
}
