#pragma once

#include <optional>
#include <string>

#include "vergsa/model_io.hpp"
#include "vergsa/rollout.hpp"
#include "vergsa/verifier.hpp"

namespace vergsa {

/// Plain key-value configuration: one `key = value` per line, `#` comments.
/// Keys are dotted per component (pool.path, rollout.n, train.epochs, ...).
struct Config {
    std::uint64_t seed = 42;

    // pool
    std::string pool_path = "pool.jsonl";
    std::size_t pool_k = 2;
    DuplicatePolicy pool_duplicate = DuplicatePolicy::Replace;
    bool use_pool = true;  // false: fixed built-in exemplar (no-pool ablation)

    // embedder
    std::string embedder_kind = "fallback";  // fallback | remote
    std::size_t embedder_dimension = 256;
    ModelEndpoint embedder_endpoint;

    // model endpoints; kind mock reads a fixture bank
    std::string policy_kind = "mock";  // mock | http
    std::string policy_bank;
    ModelEndpoint policy_endpoint;
    std::string completer_kind = "mock";
    std::string completer_bank;
    ModelEndpoint completer_endpoint;
    std::string judge_kind = "mock";
    std::string judge_bank;
    ModelEndpoint judge_endpoint;

    RolloutConfig rollout;
    TrainConfig train;

    double strategy_threshold = 0.5;
    double split_test_fraction = 0.3;

    std::optional<std::string> stop_list_path;
    std::optional<std::string> catalog_path;

    ApiCatalog catalog() const;
    std::set<std::string> stop_list() const;
};

Config load_config(const std::string& path);

/// Models per the configured kind; mock endpoints share the bank file.
std::unique_ptr<Model> make_policy(const Config& config);
std::unique_ptr<Model> make_completer(const Config& config);
std::unique_ptr<Model> make_judge(const Config& config);
std::unique_ptr<Embedder> make_embedder(const Config& config);

}  // namespace vergsa
