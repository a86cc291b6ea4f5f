#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "vergsa/trace.hpp"

namespace vergsa {

// ---------------------------------------------------------------------------
// The execution oracle: a deterministic scripted world that adjudicates
// subtasks and whole solutions lexically, standing in for a robotic
// simulator at desk scale. No embedded code is ever run.
// ---------------------------------------------------------------------------

struct JointLimits {
    double low = 0.0;
    double high = 0.0;
};

struct WorldObject {
    std::set<std::string> links;
    std::set<std::string> joints;
    std::map<std::string, JointLimits> joint_limits;
};

enum class RuleKind { ForbidPattern, RequirePattern };
enum class RuleScope { Primitive, Reward, Any };

/// Adjudication rule matched against comment-stripped supervision code with
/// std::regex (ECMAScript) search semantics.
///   forbid_pattern  -> reject when the pattern matches
///   require_pattern -> reject when the pattern does not match
struct WorldRule {
    RuleKind kind = RuleKind::ForbidPattern;
    RuleScope applies_to = RuleScope::Any;
    std::string pattern;
    std::string reason;
};

/// Overall-completion gate checked on the final subtask. `references_any`
/// uses plain substring containment on comment-stripped code; an empty list
/// imposes no reference requirement.
struct GoalPredicate {
    RuleScope require_final_variant = RuleScope::Any;
    std::vector<std::string> references_any;
};

struct ScriptedWorld {
    std::map<std::string, WorldObject> objects;
    GoalPredicate goal;
    std::vector<WorldRule> rules;

    // Throws InvalidWorld when the goal references names absent from the world.
    void validate() const;
    bool has_link(std::string_view name) const;
    bool has_joint(std::string_view name) const;
};

struct ExecutionOutcome {
    std::vector<bool> subtask_success;  // y_m per subtask
    bool overall_success = false;       // y-hat
    std::size_t steps_executed = 0;
};

enum class ExecMode { FailFast, RunAll };

struct ExecOptions {
    ExecMode mode = ExecMode::RunAll;
    // Optional Bernoulli noise: flips a subtask bit with probability epsilon,
    // deterministically per (seed, subtask content). All golden fixtures run
    // with epsilon = 0.
    double epsilon = 0.0;
    std::uint64_t noise_seed = 0;
};

/// True iff the supervision passes the allow-list, every object/link/joint
/// literal exists in the world, the variant-specific structure holds, and no
/// world rule rejects it. Malformed supervisions are false, never throwing.
bool execute_subtask(const ScriptedWorld& world, const Subtask& sub, const ApiCatalog& catalog,
                     const std::set<std::string>& stop_list = default_stop_list(),
                     const ExecOptions& opts = {});

/// Runs subtasks in order; overall = all bits true AND the goal predicate
/// holds on the final subtask. FailFast stops at the first failure. Throws
/// WorldMismatch when the scene names objects absent from the world.
ExecutionOutcome execute_solution(const ScriptedWorld& world, const Solution& sol,
                                  const ApiCatalog& catalog, const ExecOptions& opts = {},
                                  const std::set<std::string>& stop_list = default_stop_list());

/// Caching wrapper: content-addressed results at both the subtask and the
/// solution level, so deduplicated content is never re-executed. Thread-safe.
class Executor {
  public:
    Executor(ScriptedWorld world, ApiCatalog catalog, ExecOptions opts = {},
             std::set<std::string> stop_list = default_stop_list());

    bool run_subtask(const Subtask& sub);
    ExecutionOutcome run_solution(const Solution& sol);

    /// Cache misses, i.e. how many distinct subtasks were actually executed.
    std::size_t subtask_executions() const;

    const ScriptedWorld& world() const { return world_; }
    const ApiCatalog& catalog() const { return catalog_; }

  private:
    ScriptedWorld world_;
    ApiCatalog catalog_;
    ExecOptions opts_;
    std::set<std::string> stop_list_;
    mutable std::mutex mu_;
    std::unordered_map<std::string, bool> subtask_cache_;
    std::unordered_map<std::string, ExecutionOutcome> solution_cache_;
    std::size_t subtask_executions_ = 0;
};

/// Link and joint names a supervision references, collected from the
/// positional arguments of known simulator APIs plus any link_*/joint_*
/// string literal.
std::pair<std::set<std::string>, std::set<std::string>> referenced_links_joints(
    const std::string& code);

// World fixture format:
// {objects:{name:{links:[..], joints:[..], joint_limits:{j:[low,high]}}},
//  goal:{require_final_variant, references_any:[..]},
//  rules:[{kind, applies_to, pattern, reason}]}
void to_json(nlohmann::json& j, const ScriptedWorld& w);
void from_json(const nlohmann::json& j, ScriptedWorld& w);
void to_json(nlohmann::json& j, const ExecutionOutcome& o);
void from_json(const nlohmann::json& j, ExecutionOutcome& o);

ScriptedWorld load_world(const std::string& path);
void save_world(const ScriptedWorld& world, const std::string& path);

}  // namespace vergsa
