// Acceptance suite: every criterion runs at its stated tolerance and prints
// one pass/fail line. Exit code is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "vergsa/config.hpp"
#include "vergsa/fixtures.hpp"
#include "vergsa/harness.hpp"

namespace fs = std::filesystem;
using namespace vergsa;
using Clock = std::chrono::steady_clock;

namespace {

struct Criterion {
    int number;
    std::string name;
    std::function<void()> body;  // throws on failure
};

struct Failure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require(bool ok, const std::string& what) {
    if (!ok) throw Failure(what);
}

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

// --- 1. Algorithm-1 oracle equivalence ---------------------------------

void criterion_label_equivalence() {
    auto start = Clock::now();
    std::size_t mismatches = 0;
    for (std::uint64_t trial = 0; trial < 1000; ++trial) {
        std::mt19937_64 rng(trial);
        SolutionTree tree = fixtures::random_executed_tree(rng);
        RewardTable table = label_tree(tree);
        for (const auto& node : tree.nodes) {
            const auto& outcome = *node.outcome;
            for (std::size_t m = 1; m <= node.solution.subtasks.size(); ++m) {
                int expected = outcome.subtask_success[m - 1] && outcome.overall_success ? 1 : 0;
                if (table.at(node.id, m) != expected) ++mismatches;
            }
        }
    }
    require(mismatches == 0, std::to_string(mismatches) + " label mismatches");
    double elapsed = seconds_since(start);
    require(elapsed < 10.0, "took " + std::to_string(elapsed) + " s (limit 10)");
}

// --- 2. Fold Chair golden fixture ---------------------------------------

void criterion_fold_chair() {
    auto start = Clock::now();
    ApiCatalog catalog = default_catalog();
    MockModel policy(fixtures::fold_chair_bank(catalog), 0);
    MockModel completer(fixtures::fold_chair_bank(catalog), 0);

    ArletResult result = run_arlet_mcts(policy, completer, fixtures::fold_chair_world(),
                                        fixtures::fold_chair_task(), fixtures::fold_chair_config(),
                                        catalog);
    require(result.tree.nodes.size() == 3,
            "expected 3 nodes, got " + std::to_string(result.tree.nodes.size()));
    require(result.rewards.labels[0] == std::vector<int>{0, 0}, "rollout 1 labels != [0,0]");
    require(result.rewards.labels[1] == std::vector<int>{1, 1}, "rollout 2 labels != [1,1]");
    require(result.rewards.labels[2] == std::vector<int>{1, 0}, "rollout 3 labels != [1,0]");
    // rollout 3's duplicated subtask and the substep-2 duplicate completion
    // trigger zero additional executions: 5 distinct subtasks, 6 slots
    require(result.stats.subtask_executions == 5,
            "expected 5 subtask executions, got " + std::to_string(result.stats.subtask_executions));
    require(result.tree.dedup_refs.size() == 1, "expected one dedup reference");
    double elapsed = seconds_since(start);
    require(elapsed < 5.0, "took " + std::to_string(elapsed) + " s (limit 5)");
}

// --- 3. Metric arithmetic ------------------------------------------------

void criterion_metrics() {
    MetricsReport report = compute_metrics(fixtures::corpus30_records());
    require(report.counts.successes == 83 && report.counts.solutions == 150,
            "corpus solution counts off");
    require(report.counts.subtask_successes == 144 && report.counts.subtasks == 287,
            "corpus subtask counts off");
    require(std::abs(report.atsr - 0.5533) < 1e-4,
            "ATSR " + std::to_string(report.atsr) + " != 0.5533");
    require(std::abs(report.assr - 0.5017) < 1e-4,
            "ASSR " + std::to_string(report.assr) + " != 0.5017");
}

// --- 4. Aggregation strategies -------------------------------------------

void criterion_aggregation() {
    std::mt19937_64 rng(404);
    std::uniform_real_distribution<double> u(0.001, 0.999);
    for (int trial = 0; trial < 10000; ++trial) {
        std::size_t n = 1 + rng() % 12;
        std::vector<double> scores(n);
        for (auto& s : scores) s = u(rng);

        double mean_oracle = 0.0;
        for (std::size_t i = n; i-- > 0;) mean_oracle += scores[i];
        mean_oracle /= static_cast<double>(n);
        double prod = 1.0;
        for (double s : scores) prod *= s;
        double geo_oracle = std::pow(prod, 1.0 / static_cast<double>(n));
        double min_oracle = scores[0], max_oracle = scores[0];
        for (double s : scores) {
            min_oracle = std::min(min_oracle, s);
            max_oracle = std::max(max_oracle, s);
        }

        double mean = aggregate(scores, {Aggregation::Mean, 0.5});
        double geo = aggregate(scores, {Aggregation::GeoMean, 0.5});
        double lo = aggregate(scores, {Aggregation::Min, 0.5});
        double hi = aggregate(scores, {Aggregation::Max, 0.5});
        double last = aggregate(scores, {Aggregation::Last, 0.5});

        require(std::abs(mean - mean_oracle) <= 1e-12, "mean oracle mismatch");
        require(std::abs(geo - geo_oracle) <= 1e-12, "geomean oracle mismatch");
        require(lo == min_oracle && hi == max_oracle && last == scores.back(),
                "min/max/last oracle mismatch");
        require(lo <= geo + 1e-12 && geo <= mean + 1e-12 && mean <= hi + 1e-12,
                "AM-GM chain violated");
    }
}

// --- 5. Loss and gradient -------------------------------------------------

void criterion_loss_gradient() {
    require(std::abs(focal_bce_loss(0.5, 1, 0.0, 0.5) - 0.5 * std::log(2.0)) < 1e-12,
            "focal(0.5,1,0,0.5) != 0.5 ln 2");

    std::mt19937_64 rng(505);
    std::uniform_real_distribution<double> u(-0.8, 0.8);
    const double h = 1e-5;
    for (int batch = 0; batch < 100; ++batch) {
        std::size_t dim = 2 + rng() % 6;
        std::size_t n = 3 + rng() % 16;
        double gamma = static_cast<double>(rng() % 3);
        double alpha = 0.2 + 0.6 * static_cast<double>(rng() % 100) / 100.0;
        double decay = rng() % 2 ? 0.01 : 0.0;

        VerifierParams params;
        params.weights.resize(dim);
        for (auto& w : params.weights) w = u(rng);
        params.bias = u(rng);
        std::vector<FeatureVector> features(n);
        std::vector<int> labels(n);
        for (std::size_t i = 0; i < n; ++i) {
            features[i].values.resize(dim);
            for (auto& x : features[i].values) x = u(rng);
            labels[i] = static_cast<int>(rng() % 2);
        }

        Gradient g = batch_gradient(params, features, labels, gamma, alpha, decay);
        double num_norm = 0.0, diff_norm = 0.0;
        for (std::size_t d = 0; d <= dim; ++d) {
            VerifierParams lo = params, hi = params;
            if (d < dim) {
                lo.weights[d] -= h;
                hi.weights[d] += h;
            } else {
                lo.bias -= h;
                hi.bias += h;
            }
            double numeric = (batch_objective(hi, features, labels, gamma, alpha, decay) -
                              batch_objective(lo, features, labels, gamma, alpha, decay)) /
                             (2 * h);
            double analytic = d < dim ? g.weights[d] : g.bias;
            num_norm += numeric * numeric;
            diff_norm += (numeric - analytic) * (numeric - analytic);
        }
        require(std::sqrt(diff_norm) <= 1e-4 * std::max(std::sqrt(num_norm), 1e-8),
                "gradient check failed on batch " + std::to_string(batch));
    }
}

// --- 6. Retrieval ----------------------------------------------------------

void criterion_retrieval() {
    // published similarity values and rankings
    auto fixture = fixtures::similarity_table_fixture();
    for (const auto& c : fixture.cases) {
        auto hits = retrieve_top_k(fixture.pool, c.query, 2);
        require(hits.size() == c.expected.size(), "unexpected hit count for " + c.novel_task);
        for (std::size_t i = 0; i < hits.size(); ++i) {
            require(hits[i].entry.task.name == c.expected[i].first,
                    c.novel_task + ": rank " + std::to_string(i + 1) + " is " +
                        hits[i].entry.task.name + ", expected " + c.expected[i].first);
            require(std::abs(hits[i].similarity - c.expected[i].second) < 1e-3,
                    c.novel_task + ": similarity " + std::to_string(hits[i].similarity) +
                        " != " + std::to_string(c.expected[i].second));
        }
    }

    // exhaustive-sort oracle on random pools
    std::mt19937_64 rng(606);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 1000; ++trial) {
        ExemplarPool pool;
        pool.dimension = 5;
        std::size_t n = 1 + rng() % 15;
        for (std::size_t i = 0; i < n; ++i) {
            PoolEntry e;
            e.task.name = "t" + std::to_string(i);
            if (i > 0 && rng() % 5 == 0) {
                e.embedding = pool.entries[rng() % i].embedding;
            } else {
                e.embedding.values.resize(5);
                for (auto& x : e.embedding.values) x = u(rng);
                if (e.embedding.norm() == 0.0) e.embedding.values[0] = 1.0;
            }
            e.inserted_at = pool.next_seq++;
            pool.entries.push_back(std::move(e));
        }
        EmbeddingVector q;
        q.values.resize(5);
        for (auto& x : q.values) x = u(rng);
        if (q.norm() == 0.0) q.values[0] = 1.0;
        std::size_t k = 1 + rng() % 6;

        auto got = retrieve_top_k(pool, q, k);

        std::vector<std::pair<double, std::uint64_t>> oracle;  // (-sim, inserted_at)
        std::vector<std::string> names(pool.size());
        std::vector<std::size_t> order(pool.size());
        for (std::size_t i = 0; i < pool.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            double sa = cosine_similarity(q, pool.entries[a].embedding);
            double sb = cosine_similarity(q, pool.entries[b].embedding);
            if (sa != sb) return sa > sb;
            return pool.entries[a].inserted_at < pool.entries[b].inserted_at;
        });
        std::size_t take = std::min(k, pool.size());
        require(got.size() == take, "hit count mismatch");
        for (std::size_t i = 0; i < take; ++i)
            require(got[i].entry.task.name == pool.entries[order[i]].task.name,
                    "rank mismatch vs exhaustive sort on trial " + std::to_string(trial));
    }
}

// --- 7. Selection lift ------------------------------------------------------

void criterion_selection_lift() {
    auto start = Clock::now();
    ApiCatalog catalog = default_catalog();
    Featurizer featurizer(catalog);

    auto suite = fixtures::make_selection_suite(2002, 50);
    require(suite.size() == 50, "suite size");
    for (const auto& cs : suite) {
        Executor executor(cs.world, catalog);
        int winners = 0;
        for (const auto& cand : cs.candidates)
            if (executor.run_solution(cand).overall_success) ++winners;
        require(cs.candidates.size() == 3 && winners == 1,
                "suite task is not 3 candidates with exactly 1 success");
    }

    auto train_suite = fixtures::make_selection_suite(1001, 60);
    auto train_data = fixtures::suite_training_prefixes(train_suite, catalog);
    VerifierParams params = train(train_data, featurizer, TrainConfig{});

    auto scorer = verifier_scorer(params, featurizer);
    auto rows = evaluate_selection(suite, scorer, {{Aggregation::Last, 0.5}}, catalog, 13);
    double baseline = rows[0].metrics.atsr;
    double last = rows[1].metrics.atsr;
    require(last >= 0.9, "Last-strategy ATSR " + std::to_string(last) + " < 0.9");
    require(baseline >= 0.25 && baseline <= 0.42,
            "baseline ATSR " + std::to_string(baseline) + " outside [0.25, 0.42]");
    double elapsed = seconds_since(start);
    require(elapsed < 60.0, "took " + std::to_string(elapsed) + " s (limit 60)");
}

// --- 8. Argmax invariance -----------------------------------------------------

void criterion_argmax_invariance() {
    std::mt19937_64 rng(808);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 1000; ++trial) {
        std::size_t n = 2 + rng() % 8;
        std::vector<double> aggregated(n);
        for (auto& s : aggregated) s = u(rng);

        double a = 0.1 + u(rng), b = u(rng) - 0.5;
        int pick = static_cast<int>(rng() % 4);
        std::vector<double> transformed(n);
        for (std::size_t i = 0; i < n; ++i) {
            double x = aggregated[i];
            switch (pick) {
                case 0: transformed[i] = a * x + b; break;
                case 1: transformed[i] = x * x * x; break;
                case 2: transformed[i] = std::exp(a * x); break;
                default: transformed[i] = 1.0 / (1.0 + std::exp(-(a * x + b)));
            }
        }
        require(select_best_scores(aggregated, 0.5).index ==
                    select_best_scores(transformed, 0.5).index,
                "argmax moved under a strictly increasing transform");
    }
}

// --- 9. End-to-end offline run -------------------------------------------------

std::string cli_path() {
    if (const char* env = std::getenv("VERGSA_CLI")) return env;
    for (const char* candidate : {"../tools/vergsa", "./build/tools/vergsa", "./tools/vergsa"})
        if (fs::exists(candidate)) return candidate;
    throw Failure("vergsa CLI not found; set VERGSA_CLI");
}

int run_cli(const std::string& cli, const std::string& args, const std::string& log) {
    std::string cmd = cli + " " + args + " >> " + log + " 2>&1";
    return std::system(cmd.c_str());
}

void criterion_end_to_end() {
    auto start = Clock::now();
    std::string cli = cli_path();

    fs::path dir = fs::absolute("e2e_workspace");
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::string log = (dir / "e2e.log").string();
    auto in_dir = [&](const std::string& name) { return (dir / name).string(); };

    ApiCatalog catalog = default_catalog();
    TrigramHashEmbedder embedder(256);

    // three synthetic tasks; candidate solutions double as the mock policy's replies
    auto suite = fixtures::make_selection_suite(31337, 3);
    for (std::size_t t = 0; t < suite.size(); ++t) {
        std::ofstream task_file(in_dir("task_" + std::to_string(t) + ".json"));
        task_file << nlohmann::json(suite[t].task).dump(2);
        save_world(suite[t].world, in_dir("world_" + std::to_string(t) + ".json"));
    }

    // config: everything mock, no network
    std::string pool_path = in_dir("pool.jsonl");
    std::string bank_path = in_dir("bank.json");
    {
        std::ofstream conf(in_dir("pipeline.conf"));
        conf << "seed = 5\n";
        conf << "pool.path = " << pool_path << "\n";
        conf << "pool.k = 2\n";
        conf << "policy.kind = mock\n";
        conf << "policy.bank = " << bank_path << "\n";
        conf << "rollout.n = 3\n";
        conf << "rollout.completions_per_substep = 1\n";
        conf << "split.test_fraction = 0.34\n";
    }
    std::string base = cli + " --config " + in_dir("pipeline.conf") + " --out-dir " + dir.string();

    // stage 1: pool
    {
        std::ofstream sol(in_dir("seed_solution.json"));
        sol << solution_document("seed", fixtures::trivial_successful_solution("Box")).dump(2);
    }
    require(run_cli(base, "pool add --name \"Open Box Lid\" --description \"lift the hinged lid\""
                          " --solution " + in_dir("seed_solution.json"), log) == 0,
            "pool add 1 failed");
    require(run_cli(base, "pool add --name \"Close Box Lid\" --description \"lower the hinged lid\""
                          " --solution " + in_dir("seed_solution.json"), log) == 0,
            "pool add 2 failed");
    require(run_cli(base, "pool list", log) == 0, "pool list failed");
    require(run_cli(base, "pool retrieve --name \"Open Crate Lid\" --description \"open it\"", log) == 0,
            "pool retrieve failed");

    // the bank answers the exact generate prompts with the candidate texts
    {
        ExemplarPool pool = load_pool(pool_path);
        FixtureBank bank;
        for (const auto& cs : suite) {
            auto exemplars =
                retrieve_top_k(pool, embed_task(cs.task.name, cs.task.description, embedder), 2);
            PromptBundle prompt =
                build_prompt(cs.task, exemplars, catalog, generation_instructions());
            std::vector<std::string> replies;
            for (const auto& cand : cs.candidates) replies.push_back(render_solution(cand));
            bank[MockModel::prompt_hash(prompt)] = replies;
        }
        save_fixture_bank(bank, bank_path);
    }

    // stage 2: generate (mock)
    for (std::size_t t = 0; t < suite.size(); ++t)
        require(run_cli(base, "generate --task " + in_dir("task_" + std::to_string(t) + ".json") +
                                  " --out gen_" + std::to_string(t) + ".json", log) == 0,
                "generate failed for task " + std::to_string(t));

    // stage 3: rollout
    std::string tree_args;
    for (std::size_t t = 0; t < suite.size(); ++t) {
        std::string tree = "tree_" + std::to_string(t) + ".json";
        require(run_cli(base, "rollout --task " + in_dir("task_" + std::to_string(t) + ".json") +
                                  " --world " + in_dir("world_" + std::to_string(t) + ".json") +
                                  " --out " + tree + " --records records_" + std::to_string(t) +
                                  ".jsonl", log) == 0,
                "rollout failed for task " + std::to_string(t));
        tree_args += " --tree " + in_dir(tree);
    }

    // stage 4: dataset
    require(run_cli(base, "dataset" + tree_args + " --out data.jsonl", log) == 0, "dataset failed");

    // stage 5: train
    require(run_cli(base, "train --data " + in_dir("data.jsonl") + " --out params.json", log) == 0,
            "train failed");
    require(fs::exists(in_dir("params.json")), "params.json missing");

    // stage 6: evaluate, five strategies, both splits
    require(run_cli(base, "evaluate --data " + in_dir("data.jsonl") + tree_args +
                              " --strategy all --split both", log) == 0,
            "evaluate failed");
    for (const std::string split : {"tasks", "solutions"}) {
        fs::path report = dir / ("report_" + split + ".json");
        require(fs::exists(report), report.string() + " missing");
        std::ifstream in(report);
        nlohmann::json j;
        in >> j;
        require(j.at("rows").size() == 6, split + " report does not have 6 rows");
        std::set<std::string> models;
        for (const auto& row : j.at("rows")) models.insert(row.at("model").get<std::string>());
        for (const char* expected : {"BaseModel", "PRM-mean", "PRM-geomean", "PRM-min", "PRM-max",
                                     "PRM-last"})
            require(models.count(expected) == 1, split + " report lacks row " + expected);
    }

    // the published corpus statistics through the metrics command
    save_records(fixtures::corpus30_records(), in_dir("corpus30.jsonl"));
    std::string metrics_out = in_dir("metrics_out.txt");
    require(std::system((base + " metrics --in " + in_dir("corpus30.jsonl") + " > " + metrics_out +
                         " 2>&1")
                            .c_str()) == 0,
            "metrics failed");
    {
        std::ifstream in(metrics_out);
        std::stringstream buf;
        buf << in.rdbuf();
        require(buf.str().find("0.5533") != std::string::npos, "metrics output lacks ATSR 0.5533");
        require(buf.str().find("0.5017") != std::string::npos, "metrics output lacks ASSR 0.5017");
    }

    // a missing config file is a usage error with a nonzero exit
    require(std::system((cli + " --config " + in_dir("nope.conf") + " pool list >> " + log +
                         " 2>&1")
                            .c_str()) != 0,
            "missing config did not fail");

    double elapsed = seconds_since(start);
    require(elapsed < 120.0, "took " + std::to_string(elapsed) + " s (limit 120)");
}

}  // namespace

int main() {
    std::vector<Criterion> criteria = {
        {1, "Algorithm-1 oracle equivalence on 1,000 random trees", criterion_label_equivalence},
        {2, "Fold Chair golden fixture labels and dedup", criterion_fold_chair},
        {3, "Metric arithmetic on the 30-task corpus", criterion_metrics},
        {4, "Aggregation strategies vs oracles and AM-GM chain", criterion_aggregation},
        {5, "Focal loss value and gradient checks", criterion_loss_gradient},
        {6, "Retrieval vs exhaustive sort and published similarities", criterion_retrieval},
        {7, "Trained-verifier selection lift over random baseline", criterion_selection_lift},
        {8, "Argmax invariance under increasing transforms", criterion_argmax_invariance},
        {9, "End-to-end offline pipeline run", criterion_end_to_end},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        auto start = Clock::now();
        try {
            c.body();
            std::cout << "[PASS] " << c.number << ". " << c.name << " ("
                      << std::fixed << std::setprecision(2) << seconds_since(start) << " s)\n";
        } catch (const std::exception& e) {
            ++failures;
            std::cout << "[FAIL] " << c.number << ". " << c.name << ": " << e.what() << "\n";
        }
    }
    if (failures) std::cout << failures << " criteria failed\n";
    else std::cout << "all criteria passed\n";
    return failures;
}
