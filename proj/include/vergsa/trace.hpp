#pragma once

#include <array>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "vergsa/errors.hpp"

namespace vergsa {

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

struct Joint {
    std::string name;
    std::string type;  // revolute, prismatic, fixed, ...
    std::string parent_link;
    std::string child_link;
};

struct ArticulationTree {
    std::vector<std::string> links;
    std::vector<Joint> joints;

    bool has_link(std::string_view name) const;
    bool has_joint(std::string_view name) const;
};

/// A task g = (name, description) plus the object structure it manipulates.
struct TaskSpec {
    std::string name;
    std::string description;
    ArticulationTree articulation_tree;
    std::map<std::string, std::string> link_semantics;
    std::vector<std::string> relevant_links;
    std::vector<std::string> relevant_joints;
    std::string initial_config;

    // Throws InvalidSpec when the name is empty, a relevant link/joint is
    // missing from the tree, or a joint references an unknown link.
    void validate() const;
};

struct SceneObject {
    std::string name;
    std::string asset_id;
    double scale = 1.0;
    std::array<double, 3> position{0.0, 0.0, 0.0};
};

/// Generated interaction environment preceding the subtasks of a trace.
/// The text is treated as opaque beyond object extraction; only object-name
/// uniqueness is validated.
struct SceneConfiguration {
    std::vector<SceneObject> objects;
    std::string embodiment;
    std::string raw_text;

    void validate() const;  // throws InvalidSpec on duplicate object names
};

enum class SupervisionVariant { Primitive, RewardFunction };

std::string to_string(SupervisionVariant v);
SupervisionVariant variant_from_string(std::string_view s);

/// Per-subtask training artifact: either primitive execution code or a
/// reward computation, with the API identifiers it calls (derived lexically).
struct Supervision {
    SupervisionVariant variant = SupervisionVariant::Primitive;
    std::string code;
    std::vector<std::string> api_calls;  // first-seen order, unique
};

struct Subtask {
    std::string name;
    Supervision supervision;
    std::optional<bool> success_bit;  // set after execution
};

struct Solution {
    SceneConfiguration scene;
    std::vector<Subtask> subtasks;
    std::optional<bool> overall_success;
};

/// Scene plus the first m subtasks of some solution; the verifier's unit.
struct TracePrefix {
    SceneConfiguration scene;
    std::vector<Subtask> subtasks;
    std::size_t m = 0;
};

/// Simulator API allow-list split by supervision variant. The three sets
/// must be pairwise disjoint.
struct ApiCatalog {
    std::set<std::string> primitive_apis;
    std::set<std::string> reward_apis;
    std::set<std::string> shared;

    void validate() const;  // throws InvalidSpec when sets overlap
    bool empty() const { return primitive_apis.empty() && reward_apis.empty() && shared.empty(); }
};

/// The simulator allow-list used throughout: four grasp/release primitives
/// and eight state-query functions for reward code.
ApiCatalog default_catalog();

/// Identifiers excluded from allow-list checking: builtins and common math
/// names (standard libraries are permitted inside supervisions). Extendable
/// via a one-identifier-per-line config file.
std::set<std::string> default_stop_list();
std::set<std::string> load_stop_list(const std::string& path);

struct ApiValidationReport {
    bool ok = false;
    std::vector<std::string> offending;
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Parses one fenced code block whose fence tag names the variant
/// ("primitive" or "reward"), recording every called identifier.
/// Throws NoCodeBlock, UnknownTag or MultipleBlocks.
Supervision parse_supervision(const std::string& raw);

/// parse_supervision plus name resolution: an explicit name wins, otherwise
/// the prose preceding the fence (e.g. "subtask 2: lower the seat").
Subtask parse_subtask(const std::string& raw, std::optional<std::string> name = std::nullopt);

/// Parses a full model reply: optional "scene:" section followed by
/// "subtask N: <name>" chunks each holding one fenced block.
Solution parse_solution(const std::string& raw);

/// Like parse_solution but without a scene and with zero subtasks allowed
/// (a completer may legitimately answer that nothing remains).
std::vector<Subtask> parse_continuation(const std::string& raw);

std::string render_supervision(const Supervision& s);
std::string render_subtask(const Subtask& sub, std::size_t index_1based);
std::string render_solution(const Solution& sol);

/// Report-returning check that every derived api_call is allowed for the
/// supervision's variant (Primitive -> primitive_apis ∪ shared,
/// RewardFunction -> reward_apis ∪ shared). Stop-listed identifiers are
/// never flagged.
ApiValidationReport validate_apis(const Supervision& s, const ApiCatalog& catalog,
                                  const std::set<std::string>& stop_list = default_stop_list());

/// First m subtasks of sol together with its scene. Throws OutOfRange
/// unless 1 <= m <= len(sol.subtasks).
TracePrefix prefix(const Solution& sol, std::size_t m);

/// Reinterpret a prefix as a standalone solution (for prefix-of-prefix use).
Solution prefix_as_solution(const TracePrefix& p);

// ---------------------------------------------------------------------------
// Lexical helpers shared with the execution oracle and the featurizer.
// All checks here are surface-level: no embedded code is ever executed.
// ---------------------------------------------------------------------------
namespace code_text {

/// Removes '#' comments (quote-aware) so literal and identifier scans do not
/// pick up commented-out text.
std::string strip_comments(const std::string& code);

/// Identifiers immediately followed by '(' in comment-stripped code.
/// Definitions introduced with `def` are declarations, not calls, and are
/// skipped. Order of first appearance, unique.
std::vector<std::string> called_identifiers(const std::string& code);

/// Single- or double-quoted string literals in comment-stripped code.
std::vector<std::string> string_literals(const std::string& code);

struct ApiCall {
    std::string api;
    // Positional arguments as written; quoted literals are unquoted, any
    // non-literal argument becomes an empty string.
    std::vector<std::string> literal_args;
};

/// Every call to one of `apis`, with its balanced-paren argument list.
std::vector<ApiCall> api_calls_with_args(const std::string& code, const std::set<std::string>& apis);

bool has_success_assignment(const std::string& code);
/// A tuple assignment such as `rgbs, final_state = ...` (primitive results).
bool has_tuple_result_assignment(const std::string& code);
/// Right-hand side of the bare `reward = ...` assignment, if present.
std::optional<std::string> combined_reward_expr(const std::string& code);
/// Names of `reward_<x> = ...` component assignments.
std::vector<std::string> reward_component_names(const std::string& code);
/// Right-hand side of the `success = ...` assignment, if present.
std::optional<std::string> success_expr(const std::string& code);

std::uint64_t fnv1a64(std::string_view data);
std::string fnv1a64_hex(std::string_view data);

}  // namespace code_text

/// Stable content keys used for dedup and execution caching.
std::string content_key(const Subtask& sub);
std::string content_key(const SceneConfiguration& scene);
std::string prefix_content_key(const SceneConfiguration& scene, const std::vector<Subtask>& subtasks,
                                std::size_t m);

bool same_subtask_sequence(const std::vector<Subtask>& a, const std::vector<Subtask>& b);

// ---------------------------------------------------------------------------
// JSON (schemas documented in README)
// ---------------------------------------------------------------------------
void to_json(nlohmann::json& j, const Joint& v);
void from_json(const nlohmann::json& j, Joint& v);
void to_json(nlohmann::json& j, const ArticulationTree& v);
void from_json(const nlohmann::json& j, ArticulationTree& v);
void to_json(nlohmann::json& j, const TaskSpec& v);
void from_json(const nlohmann::json& j, TaskSpec& v);
void to_json(nlohmann::json& j, const SceneObject& v);
void from_json(const nlohmann::json& j, SceneObject& v);
void to_json(nlohmann::json& j, const SceneConfiguration& v);
void from_json(const nlohmann::json& j, SceneConfiguration& v);
void to_json(nlohmann::json& j, const Subtask& v);
void from_json(const nlohmann::json& j, Subtask& v);
void to_json(nlohmann::json& j, const Solution& v);
void from_json(const nlohmann::json& j, Solution& v);
void to_json(nlohmann::json& j, const TracePrefix& v);
void from_json(const nlohmann::json& j, TracePrefix& v);
void to_json(nlohmann::json& j, const ApiCatalog& v);
void from_json(const nlohmann::json& j, ApiCatalog& v);

/// Solution document: {task, scene, subtasks:[{name, variant, code}]}.
nlohmann::json solution_document(const std::string& task_name, const Solution& sol);
std::pair<std::string, Solution> solution_from_document(const nlohmann::json& doc);

}  // namespace vergsa
