#include "vergsa/harness.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

namespace vergsa {

MetricsReport compute_metrics(const std::vector<ExecutedRecord>& records) {
    if (records.empty()) throw EmptyRecords("metrics over an empty record list");
    MetricsReport report;
    for (const auto& rec : records) {
        ++report.counts.solutions;
        if (rec.outcome.overall_success) ++report.counts.successes;
        report.counts.subtasks += rec.solution.subtasks.size();
        for (bool bit : rec.outcome.subtask_success)
            if (bit) ++report.counts.subtask_successes;
    }
    report.atsr = static_cast<double>(report.counts.successes) /
                  static_cast<double>(report.counts.solutions);
    report.assr = report.counts.subtasks == 0
                      ? 0.0
                      : static_cast<double>(report.counts.subtask_successes) /
                            static_cast<double>(report.counts.subtasks);
    report.avg_subtasks = static_cast<double>(report.counts.subtasks) /
                          static_cast<double>(report.counts.solutions);
    return report;
}

std::string format_metrics(const MetricsReport& r) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(4);
    out << "ATSR " << r.atsr << " (" << r.counts.successes << "/" << r.counts.solutions << ")\n";
    out << "ASSR " << r.assr << " (" << r.counts.subtask_successes << "/" << r.counts.subtasks
        << ")\n";
    out << std::setprecision(2);
    out << "Avg. Num. of Sub. " << r.avg_subtasks << "\n";
    return out.str();
}

void save_records(const std::vector<ExecutedRecord>& records, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write records file: " + path);
    for (const auto& rec : records) {
        nlohmann::json j = {{"task_name", rec.task_name},
                            {"solution", rec.solution},
                            {"outcome", rec.outcome}};
        out << j.dump() << '\n';
    }
}

std::vector<ExecutedRecord> load_records(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open records file: " + path);
    std::vector<ExecutedRecord> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line);
        ExecutedRecord rec;
        rec.task_name = j.value("task_name", "");
        rec.solution = j.at("solution").get<Solution>();
        rec.outcome = j.at("outcome").get<ExecutionOutcome>();
        out.push_back(std::move(rec));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Splits
// ---------------------------------------------------------------------------

namespace {

// Hand-rolled Fisher-Yates: std::shuffle's draw sequence is
// implementation-defined, this one is pinned.
template <typename T>
void deterministic_shuffle(std::vector<T>& v, std::mt19937_64& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(v[i - 1], v[j]);
    }
}

std::size_t test_count(std::size_t total, double fraction) {
    auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(total)));
    if (k < 1) k = 1;
    if (k >= total) k = total - 1;
    return k;
}

}  // namespace

std::pair<std::vector<LabeledPrefix>, std::vector<LabeledPrefix>> split_dataset(
    const std::vector<LabeledPrefix>& prefixes, const SplitSpec& spec) {
    if (spec.test_fraction <= 0.0 || spec.test_fraction >= 1.0)
        throw ConfigError("test_fraction must lie in (0,1)");
    std::mt19937_64 rng(spec.seed);
    std::vector<LabeledPrefix> train, test;

    if (spec.mode == SplitMode::ByTask) {
        std::vector<std::string> names;
        for (const auto& lp : prefixes)
            if (std::find(names.begin(), names.end(), lp.task.name) == names.end())
                names.push_back(lp.task.name);
        if (names.size() < 2) throw TooFewTasks("by-task split needs >= 2 distinct tasks");
        deterministic_shuffle(names, rng);
        std::size_t k = test_count(names.size(), spec.test_fraction);
        std::set<std::string> test_names(names.begin(), names.begin() + static_cast<std::ptrdiff_t>(k));
        for (const auto& lp : prefixes)
            (test_names.count(lp.task.name) ? test : train).push_back(lp);
        return {std::move(train), std::move(test)};
    }

    // by_solution: group prefixes by (task, solution origin), split per task.
    struct Group {
        std::string key;
        std::vector<std::size_t> rows;
    };
    std::map<std::string, std::vector<Group>> by_task;
    for (std::size_t row = 0; row < prefixes.size(); ++row) {
        const auto& lp = prefixes[row];
        std::string sol_key = std::to_string(lp.provenance.base) + ":" +
                              std::to_string(lp.provenance.substep) + ":" +
                              std::to_string(lp.provenance.completion);
        auto& groups = by_task[lp.task.name];
        auto it = std::find_if(groups.begin(), groups.end(),
                               [&](const Group& g) { return g.key == sol_key; });
        if (it == groups.end()) {
            groups.push_back({sol_key, {row}});
        } else {
            it->rows.push_back(row);
        }
    }
    std::vector<char> in_test(prefixes.size(), 0);
    for (auto& [task, groups] : by_task) {
        (void)task;
        if (groups.size() < 2) continue;  // counts do not allow both partitions
        deterministic_shuffle(groups, rng);
        std::size_t k = test_count(groups.size(), spec.test_fraction);
        for (std::size_t g = 0; g < k; ++g)
            for (std::size_t row : groups[g].rows) in_test[row] = 1;
    }
    for (std::size_t row = 0; row < prefixes.size(); ++row)
        (in_test[row] ? test : train).push_back(prefixes[row]);
    return {std::move(train), std::move(test)};
}

// ---------------------------------------------------------------------------
// Selection evaluation
// ---------------------------------------------------------------------------

PrefixScorer verifier_scorer(const VerifierParams& params, const Featurizer& featurizer) {
    return [&params, &featurizer](const TaskSpec& task, const TracePrefix& p) {
        return score(params, task, p, featurizer);
    };
}

std::vector<SelectionRow> evaluate_selection(const std::vector<CandidateSet>& suite,
                                             const PrefixScorer& scorer,
                                             const std::vector<AggregationStrategy>& strategies,
                                             const ApiCatalog& catalog, std::uint64_t baseline_seed) {
    if (suite.empty()) throw EmptyRecords("evaluation suite is empty");

    // Outcomes for every candidate, executing on demand where missing.
    std::vector<std::vector<ExecutionOutcome>> outcomes(suite.size());
    std::vector<std::vector<std::vector<double>>> prefix_scores(suite.size());
    for (std::size_t t = 0; t < suite.size(); ++t) {
        const CandidateSet& cs = suite[t];
        if (cs.candidates.empty()) throw EmptyCandidates("task without candidates: " + cs.task.name);
        Executor executor(cs.world, catalog);
        for (std::size_t c = 0; c < cs.candidates.size(); ++c) {
            if (c < cs.outcomes.size() && !cs.outcomes[c].subtask_success.empty())
                outcomes[t].push_back(cs.outcomes[c]);
            else
                outcomes[t].push_back(executor.run_solution(cs.candidates[c]));
            const Solution& sol = cs.candidates[c];
            std::vector<double> scores;
            for (std::size_t m = 1; m <= sol.subtasks.size(); ++m)
                scores.push_back(scorer(cs.task, prefix(sol, m)));
            prefix_scores[t].push_back(std::move(scores));
        }
    }

    std::vector<SelectionRow> rows;

    // Seeded uniform selection stands in for unverified generation.
    {
        std::mt19937_64 rng(baseline_seed);
        std::vector<ExecutedRecord> picked;
        for (std::size_t t = 0; t < suite.size(); ++t) {
            std::size_t pick = static_cast<std::size_t>(rng() % suite[t].candidates.size());
            picked.push_back({suite[t].task.name, suite[t].candidates[pick], outcomes[t][pick]});
        }
        rows.push_back({"BaseModel", compute_metrics(picked)});
    }

    for (const auto& strategy : strategies) {
        std::vector<ExecutedRecord> picked;
        for (std::size_t t = 0; t < suite.size(); ++t) {
            std::vector<double> aggregated;
            for (const auto& scores : prefix_scores[t])
                aggregated.push_back(aggregate(scores, strategy));
            SelectionResult sel = select_best_scores(aggregated, strategy.threshold);
            picked.push_back(
                {suite[t].task.name, suite[t].candidates[sel.index], outcomes[t][sel.index]});
        }
        rows.push_back({"PRM-" + to_string(strategy.variant), compute_metrics(picked)});
    }
    return rows;
}

std::string format_selection_table(const std::string& split_name,
                                   const std::vector<SelectionRow>& rows) {
    std::ostringstream out;
    std::size_t name_w = std::string("Model / split by ").size() + split_name.size();
    for (const auto& r : rows) name_w = std::max(name_w, r.model.size());
    out << std::left << std::setw(static_cast<int>(name_w + 2)) << ("Model / split by " + split_name)
        << std::right << std::setw(8) << "ATSR" << std::setw(8) << "ASSR" << std::setw(20)
        << "Avg. Num. of Sub." << "\n";
    out << std::string(name_w + 2 + 8 + 8 + 20, '-') << "\n";
    out << std::fixed << std::setprecision(2);
    for (const auto& r : rows) {
        out << std::left << std::setw(static_cast<int>(name_w + 2)) << r.model << std::right
            << std::setw(8) << r.metrics.atsr << std::setw(8) << r.metrics.assr << std::setw(20)
            << r.metrics.avg_subtasks << "\n";
    }
    out << "BaseModel = seeded uniform selection among candidates (unverified generation stand-in).\n";
    out << "Avg. Num. of Sub. is computed over selected solutions only.\n";
    return out.str();
}

nlohmann::json selection_rows_to_json(const std::string& split_name,
                                      const std::vector<SelectionRow>& rows) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : rows) {
        arr.push_back({{"model", r.model},
                       {"atsr", r.metrics.atsr},
                       {"assr", r.metrics.assr},
                       {"avg_subtasks", r.metrics.avg_subtasks},
                       {"counts",
                        {{"solutions", r.metrics.counts.solutions},
                         {"successes", r.metrics.counts.successes},
                         {"subtasks", r.metrics.counts.subtasks},
                         {"subtask_successes", r.metrics.counts.subtask_successes}}}});
    }
    return {{"split", split_name},
            {"rows", arr},
            {"baseline", "seeded uniform selection among candidates"}};
}

nlohmann::json candidate_set_to_json(const CandidateSet& cs) {
    nlohmann::json j = {{"task", cs.task}, {"world", cs.world}, {"candidates", cs.candidates}};
    if (!cs.outcomes.empty()) j["outcomes"] = cs.outcomes;
    return j;
}

CandidateSet candidate_set_from_json(const nlohmann::json& j) {
    CandidateSet cs;
    cs.task = j.at("task").get<TaskSpec>();
    cs.world = j.at("world").get<ScriptedWorld>();
    cs.candidates = j.at("candidates").get<std::vector<Solution>>();
    if (j.contains("outcomes")) cs.outcomes = j.at("outcomes").get<std::vector<ExecutionOutcome>>();
    return cs;
}

}  // namespace vergsa
