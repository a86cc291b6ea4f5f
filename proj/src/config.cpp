#include "vergsa/config.hpp"

#include <fstream>
#include <map>

namespace vergsa {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

class KeyValues {
  public:
    explicit KeyValues(std::map<std::string, std::string> kv) : kv_(std::move(kv)) {}

    std::string str(const std::string& key, const std::string& fallback) const {
        auto it = kv_.find(key);
        return it == kv_.end() ? fallback : it->second;
    }
    double num(const std::string& key, double fallback) const {
        auto it = kv_.find(key);
        if (it == kv_.end()) return fallback;
        try {
            return std::stod(it->second);
        } catch (...) {
            throw ConfigError("config key '" + key + "' is not numeric: " + it->second);
        }
    }
    long integer(const std::string& key, long fallback) const {
        auto it = kv_.find(key);
        if (it == kv_.end()) return fallback;
        try {
            return std::stol(it->second);
        } catch (...) {
            throw ConfigError("config key '" + key + "' is not an integer: " + it->second);
        }
    }
    bool flag(const std::string& key, bool fallback) const {
        auto it = kv_.find(key);
        if (it == kv_.end()) return fallback;
        if (it->second == "true" || it->second == "1" || it->second == "on") return true;
        if (it->second == "false" || it->second == "0" || it->second == "off") return false;
        throw ConfigError("config key '" + key + "' is not a boolean: " + it->second);
    }
    bool has(const std::string& key) const { return kv_.count(key) > 0; }

  private:
    std::map<std::string, std::string> kv_;
};

ModelEndpoint endpoint_from(const KeyValues& kv, const std::string& prefix) {
    ModelEndpoint e;
    e.base_url = kv.str(prefix + ".base_url", "");
    e.model_name = kv.str(prefix + ".model", "");
    e.temperature = kv.num(prefix + ".temperature", 0.0);
    e.max_tokens = static_cast<int>(kv.integer(prefix + ".max_tokens", 2048));
    e.timeout = std::chrono::milliseconds(kv.integer(prefix + ".timeout_ms", 30000));
    e.retries = static_cast<int>(kv.integer(prefix + ".retries", 2));
    e.api_key_env = kv.str(prefix + ".api_key_env", "VERGSA_API_KEY");
    return e;
}

}  // namespace

ApiCatalog Config::catalog() const {
    if (!catalog_path) return default_catalog();
    std::ifstream in(*catalog_path);
    if (!in) throw ConfigError("cannot open catalog file: " + *catalog_path);
    nlohmann::json j;
    in >> j;
    auto catalog = j.get<ApiCatalog>();
    catalog.validate();
    return catalog;
}

std::set<std::string> Config::stop_list() const {
    return stop_list_path ? load_stop_list(*stop_list_path) : default_stop_list();
}

Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::map<std::string, std::string> raw;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
        raw[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
    }
    KeyValues kv(std::move(raw));

    Config c;
    c.seed = static_cast<std::uint64_t>(kv.integer("seed", 42));
    c.pool_path = kv.str("pool.path", "pool.jsonl");
    c.pool_k = static_cast<std::size_t>(kv.integer("pool.k", 2));
    std::string dup = kv.str("pool.duplicate", "replace");
    if (dup == "replace")
        c.pool_duplicate = DuplicatePolicy::Replace;
    else if (dup == "reject")
        c.pool_duplicate = DuplicatePolicy::Reject;
    else
        throw ConfigError("pool.duplicate must be replace or reject");
    c.use_pool = kv.flag("pool.use", true);

    c.embedder_kind = kv.str("embedder.kind", "fallback");
    c.embedder_dimension = static_cast<std::size_t>(kv.integer("embedder.dimension", 256));
    c.embedder_endpoint = endpoint_from(kv, "embedder");

    c.policy_kind = kv.str("policy.kind", "mock");
    c.policy_bank = kv.str("policy.bank", "");
    c.policy_endpoint = endpoint_from(kv, "policy");
    c.completer_kind = kv.str("completer.kind", c.policy_kind);
    c.completer_bank = kv.str("completer.bank", c.policy_bank);
    c.completer_endpoint = endpoint_from(kv, "completer");
    c.judge_kind = kv.str("judge.kind", "mock");
    c.judge_bank = kv.str("judge.bank", "");
    c.judge_endpoint = endpoint_from(kv, "judge");

    c.rollout.n_base = static_cast<int>(kv.integer("rollout.n", 3));
    c.rollout.completions_per_substep =
        static_cast<int>(kv.integer("rollout.completions_per_substep", 3));
    std::string mode = kv.str("rollout.mode", "run_all");
    if (mode == "run_all")
        c.rollout.mode = ExecMode::RunAll;
    else if (mode == "fail_fast")
        c.rollout.mode = ExecMode::FailFast;
    else
        throw ConfigError("rollout.mode must be run_all or fail_fast");
    std::string branch = kv.str("rollout.branch_bases", "all");
    if (branch == "all") {
        c.rollout.branch = BranchScope::AllBases;
    } else {
        c.rollout.branch = BranchScope::OneBase;
        try {
            c.rollout.branch_base_index = std::stoi(branch);
        } catch (...) {
            throw ConfigError("rollout.branch_bases must be 'all' or a base index");
        }
    }
    c.rollout.retry_budget = static_cast<int>(kv.integer("rollout.retry_budget", 2));
    c.rollout.label_dedup = kv.flag("rollout.label_dedup", true);
    c.rollout.threads = static_cast<unsigned>(kv.integer("rollout.threads", 1));

    c.train.learning_rate = kv.num("train.learning_rate", 0.05);
    c.train.weight_decay = kv.num("train.weight_decay", 0.005);
    c.train.warmup_steps = static_cast<int>(kv.integer("train.warmup_steps", 100));
    std::string schedule = kv.str("train.schedule", "cosine");
    if (schedule == "cosine")
        c.train.schedule = Schedule::Cosine;
    else if (schedule == "constant")
        c.train.schedule = Schedule::Constant;
    else
        throw ConfigError("train.schedule must be cosine or constant");
    c.train.focal_gamma = kv.num("train.focal_gamma", 2.0);
    std::string alpha = kv.str("train.focal_alpha", "auto");
    if (alpha != "auto") c.train.focal_alpha = kv.num("train.focal_alpha", 0.5);
    c.train.epochs = static_cast<int>(kv.integer("train.epochs", 2000));
    c.train.seed = static_cast<std::uint64_t>(kv.integer("train.seed", 0));

    c.strategy_threshold = kv.num("strategy.threshold", 0.5);
    c.split_test_fraction = kv.num("split.test_fraction", 0.3);

    if (kv.has("stoplist.path")) c.stop_list_path = kv.str("stoplist.path", "");
    if (kv.has("catalog.path")) c.catalog_path = kv.str("catalog.path", "");
    return c;
}

namespace {

std::unique_ptr<Model> make_model(const std::string& kind, const std::string& bank,
                                  const ModelEndpoint& endpoint, std::uint64_t seed,
                                  const char* what) {
    if (kind == "mock") {
        FixtureBank fixtures;
        if (!bank.empty()) fixtures = load_fixture_bank(bank);
        return mock_model(std::move(fixtures), seed);
    }
    if (kind == "http") {
        if (endpoint.base_url.empty())
            throw ConfigError(std::string(what) + ".base_url required for kind http");
        return std::make_unique<HttpChatClient>(endpoint);
    }
    throw ConfigError(std::string(what) + ".kind must be mock or http");
}

}  // namespace

std::unique_ptr<Model> make_policy(const Config& c) {
    return make_model(c.policy_kind, c.policy_bank, c.policy_endpoint, c.seed, "policy");
}
std::unique_ptr<Model> make_completer(const Config& c) {
    return make_model(c.completer_kind, c.completer_bank, c.completer_endpoint, c.seed, "completer");
}
std::unique_ptr<Model> make_judge(const Config& c) {
    return make_model(c.judge_kind, c.judge_bank, c.judge_endpoint, c.seed, "judge");
}

std::unique_ptr<Embedder> make_embedder(const Config& c) {
    if (c.embedder_kind == "fallback")
        return std::make_unique<TrigramHashEmbedder>(c.embedder_dimension);
    if (c.embedder_kind == "remote")
        return std::make_unique<RemoteEmbedder>(c.embedder_endpoint, c.embedder_dimension);
    throw ConfigError("embedder.kind must be fallback or remote");
}

}  // namespace vergsa
