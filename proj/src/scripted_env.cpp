#include "vergsa/scripted_env.hpp"

#include <algorithm>
#include <fstream>
#include <regex>

namespace vergsa {

namespace {

// Which positional arguments of each simulator API name an object, link or
// joint (indices include the leading `self`).
struct ApiSignature {
    int object_pos = -1;
    int link_pos = -1;
    int joint_pos = -1;
};

const std::map<std::string, ApiSignature>& api_signatures() {
    static const std::map<std::string, ApiSignature> table = {
        {"grasp_object", {1, -1, -1}},
        {"grasp_object_link", {1, 2, -1}},
        {"release_grasp", {-1, -1, -1}},
        {"check_grasped", {1, 2, -1}},
        {"get_eef_pos", {-1, -1, -1}},
        {"get_position", {1, -1, -1}},
        {"get_link_state", {1, 2, -1}},
        {"get_joint_state", {1, -1, 2}},
        {"get_joint_limit", {1, -1, 2}},
        {"get_bounding_box", {1, -1, -1}},
        {"get_bounding_box_link", {1, 2, -1}},
        {"in_bbox", {-1, -1, -1}},
    };
    return table;
}

std::set<std::string> signature_api_names() {
    std::set<std::string> names;
    for (const auto& [k, v] : api_signatures()) names.insert(k);
    return names;
}

bool scope_applies(RuleScope scope, SupervisionVariant variant) {
    switch (scope) {
        case RuleScope::Any:
            return true;
        case RuleScope::Primitive:
            return variant == SupervisionVariant::Primitive;
        case RuleScope::Reward:
            return variant == SupervisionVariant::RewardFunction;
    }
    return false;
}

bool looks_like_link(std::string_view s) { return s.rfind("link_", 0) == 0; }
bool looks_like_joint(std::string_view s) { return s.rfind("joint_", 0) == 0; }

// (2) every object/link/joint literal in the code exists in the world.
bool names_exist(const ScriptedWorld& world, const std::string& code) {
    auto calls = code_text::api_calls_with_args(code, signature_api_names());
    for (const auto& call : calls) {
        const ApiSignature& sig = api_signatures().at(call.api);
        const WorldObject* obj = nullptr;
        if (sig.object_pos >= 0 && static_cast<std::size_t>(sig.object_pos) < call.literal_args.size()) {
            const std::string& name = call.literal_args[static_cast<std::size_t>(sig.object_pos)];
            if (!name.empty()) {
                auto it = world.objects.find(name);
                if (it == world.objects.end()) return false;
                obj = &it->second;
            }
        }
        auto check_member = [&](int pos, bool is_link) {
            if (pos < 0 || static_cast<std::size_t>(pos) >= call.literal_args.size()) return true;
            const std::string& name = call.literal_args[static_cast<std::size_t>(pos)];
            if (name.empty()) return true;  // not a literal; unresolvable lexically
            if (obj) return is_link ? obj->links.count(name) > 0 : obj->joints.count(name) > 0;
            return is_link ? world.has_link(name) : world.has_joint(name);
        };
        if (!check_member(sig.link_pos, true)) return false;
        if (!check_member(sig.joint_pos, false)) return false;
    }
    // Any link_*/joint_* literal anywhere must exist somewhere in the world.
    for (const auto& lit : code_text::string_literals(code)) {
        if (looks_like_link(lit) && !world.has_link(lit)) return false;
        if (looks_like_joint(lit) && !world.has_joint(lit)) return false;
    }
    return true;
}

// (3) variant-specific structure.
bool structure_holds(const Supervision& s) {
    if (s.code.empty()) return false;
    if (s.variant == SupervisionVariant::Primitive) {
        return code_text::has_success_assignment(s.code) &&
               code_text::has_tuple_result_assignment(s.code);
    }
    if (!code_text::has_success_assignment(s.code)) return false;
    auto combined = code_text::combined_reward_expr(s.code);
    auto components = code_text::reward_component_names(s.code);
    if (!components.empty()) {
        if (!combined) return false;
        for (const auto& c : components)
            if (combined->find(c) == std::string::npos) return false;
    } else if (!combined) {
        return false;  // a reward computation must produce a reward
    }
    return true;
}

// (4) no rule rejects it.
bool rules_accept(const std::vector<WorldRule>& rules, const Supervision& s) {
    std::string stripped = code_text::strip_comments(s.code);
    for (const auto& rule : rules) {
        if (!scope_applies(rule.applies_to, s.variant)) continue;
        std::regex re(rule.pattern, std::regex::ECMAScript);
        bool matched = std::regex_search(stripped, re);
        if (rule.kind == RuleKind::ForbidPattern && matched) return false;
        if (rule.kind == RuleKind::RequirePattern && !matched) return false;
    }
    return true;
}

bool noise_flip(const ExecOptions& opts, const Subtask& sub) {
    if (opts.epsilon <= 0.0) return false;
    std::uint64_t h = code_text::fnv1a64(content_key(sub)) ^ opts.noise_seed;
    std::mt19937_64 rng(h);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    return u(rng) < opts.epsilon;
}

bool goal_holds(const GoalPredicate& goal, const Subtask& final_sub) {
    if (!scope_applies(goal.require_final_variant, final_sub.supervision.variant)) return false;
    if (goal.references_any.empty()) return true;
    std::string stripped = code_text::strip_comments(final_sub.supervision.code);
    return std::any_of(goal.references_any.begin(), goal.references_any.end(),
                       [&](const std::string& name) { return stripped.find(name) != std::string::npos; });
}

}  // namespace

std::pair<std::set<std::string>, std::set<std::string>> referenced_links_joints(
    const std::string& code) {
    std::set<std::string> links, joints;
    for (const auto& call : code_text::api_calls_with_args(code, signature_api_names())) {
        const ApiSignature& sig = api_signatures().at(call.api);
        if (sig.link_pos >= 0 && static_cast<std::size_t>(sig.link_pos) < call.literal_args.size() &&
            !call.literal_args[static_cast<std::size_t>(sig.link_pos)].empty())
            links.insert(call.literal_args[static_cast<std::size_t>(sig.link_pos)]);
        if (sig.joint_pos >= 0 && static_cast<std::size_t>(sig.joint_pos) < call.literal_args.size() &&
            !call.literal_args[static_cast<std::size_t>(sig.joint_pos)].empty())
            joints.insert(call.literal_args[static_cast<std::size_t>(sig.joint_pos)]);
    }
    for (const auto& lit : code_text::string_literals(code)) {
        if (looks_like_link(lit)) links.insert(lit);
        if (looks_like_joint(lit)) joints.insert(lit);
    }
    return {std::move(links), std::move(joints)};
}

void ScriptedWorld::validate() const {
    for (const auto& name : goal.references_any) {
        bool known = objects.count(name) > 0 || has_link(name) || has_joint(name);
        if (!known) throw InvalidWorld("goal references unknown name: " + name);
    }
    for (const auto& [oname, obj] : objects) {
        for (const auto& [jname, lim] : obj.joint_limits) {
            (void)lim;
            if (!obj.joints.count(jname))
                throw InvalidWorld("joint limits for unknown joint " + jname + " of " + oname);
        }
    }
}

bool ScriptedWorld::has_link(std::string_view name) const {
    return std::any_of(objects.begin(), objects.end(),
                       [&](const auto& kv) { return kv.second.links.count(std::string(name)) > 0; });
}

bool ScriptedWorld::has_joint(std::string_view name) const {
    return std::any_of(objects.begin(), objects.end(),
                       [&](const auto& kv) { return kv.second.joints.count(std::string(name)) > 0; });
}

bool execute_subtask(const ScriptedWorld& world, const Subtask& sub, const ApiCatalog& catalog,
                     const std::set<std::string>& stop_list, const ExecOptions& opts) {
    const Supervision& s = sub.supervision;
    bool ok = validate_apis(s, catalog, stop_list).ok && names_exist(world, s.code) &&
              structure_holds(s) && rules_accept(world.rules, s);
    if (noise_flip(opts, sub)) ok = !ok;
    return ok;
}

ExecutionOutcome execute_solution(const ScriptedWorld& world, const Solution& sol,
                                  const ApiCatalog& catalog, const ExecOptions& opts,
                                  const std::set<std::string>& stop_list) {
    if (sol.subtasks.empty()) throw InvalidSpec("solution has no subtasks");
    for (const auto& obj : sol.scene.objects) {
        if (!world.objects.count(obj.name))
            throw WorldMismatch("scene object '" + obj.name + "' is absent from the world");
    }

    ExecutionOutcome outcome;
    outcome.subtask_success.assign(sol.subtasks.size(), false);
    for (std::size_t i = 0; i < sol.subtasks.size(); ++i) {
        bool bit = execute_subtask(world, sol.subtasks[i], catalog, stop_list, opts);
        outcome.subtask_success[i] = bit;
        outcome.steps_executed = i + 1;
        if (!bit && opts.mode == ExecMode::FailFast) break;
    }
    bool all = std::all_of(outcome.subtask_success.begin(), outcome.subtask_success.end(),
                           [](bool b) { return b; });
    outcome.overall_success = all && goal_holds(world.goal, sol.subtasks.back());
    return outcome;
}

Executor::Executor(ScriptedWorld world, ApiCatalog catalog, ExecOptions opts,
                   std::set<std::string> stop_list)
    : world_(std::move(world)),
      catalog_(std::move(catalog)),
      opts_(opts),
      stop_list_(std::move(stop_list)) {
    world_.validate();
}

bool Executor::run_subtask(const Subtask& sub) {
    // The cache key ignores the name: execution depends on the supervision only.
    std::string key = to_string(sub.supervision.variant) + "\x1f" + sub.supervision.code;
    {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = subtask_cache_.find(key);
        if (it != subtask_cache_.end()) return it->second;
    }
    bool bit = execute_subtask(world_, sub, catalog_, stop_list_, opts_);
    std::lock_guard<std::mutex> lock(mu_);
    auto [it, fresh] = subtask_cache_.emplace(key, bit);
    if (fresh) ++subtask_executions_;
    return it->second;
}

ExecutionOutcome Executor::run_solution(const Solution& sol) {
    if (sol.subtasks.empty()) throw InvalidSpec("solution has no subtasks");
    std::string key = content_key(sol.scene);
    for (const auto& sub : sol.subtasks) {
        key += '\x1f';
        key += content_key(sub);
    }
    {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = solution_cache_.find(key);
        if (it != solution_cache_.end()) return it->second;
    }
    for (const auto& obj : sol.scene.objects) {
        if (!world_.objects.count(obj.name))
            throw WorldMismatch("scene object '" + obj.name + "' is absent from the world");
    }
    ExecutionOutcome outcome;
    outcome.subtask_success.assign(sol.subtasks.size(), false);
    for (std::size_t i = 0; i < sol.subtasks.size(); ++i) {
        bool bit = run_subtask(sol.subtasks[i]);
        outcome.subtask_success[i] = bit;
        outcome.steps_executed = i + 1;
        if (!bit && opts_.mode == ExecMode::FailFast) break;
    }
    bool all = std::all_of(outcome.subtask_success.begin(), outcome.subtask_success.end(),
                           [](bool b) { return b; });
    outcome.overall_success = all && goal_holds(world_.goal, sol.subtasks.back());
    std::lock_guard<std::mutex> lock(mu_);
    solution_cache_.emplace(key, outcome);
    return outcome;
}

std::size_t Executor::subtask_executions() const {
    std::lock_guard<std::mutex> lock(mu_);
    return subtask_executions_;
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

namespace {

std::string scope_to_string(RuleScope s) {
    switch (s) {
        case RuleScope::Primitive:
            return "primitive";
        case RuleScope::Reward:
            return "reward";
        default:
            return "any";
    }
}

RuleScope scope_from_string(const std::string& s) {
    if (s == "primitive") return RuleScope::Primitive;
    if (s == "reward") return RuleScope::Reward;
    if (s == "any") return RuleScope::Any;
    throw InvalidWorld("unknown rule scope: " + s);
}

}  // namespace

void to_json(nlohmann::json& j, const ScriptedWorld& w) {
    nlohmann::json objs = nlohmann::json::object();
    for (const auto& [name, obj] : w.objects) {
        nlohmann::json limits = nlohmann::json::object();
        for (const auto& [jn, lim] : obj.joint_limits) limits[jn] = {lim.low, lim.high};
        objs[name] = {{"links", obj.links}, {"joints", obj.joints}, {"joint_limits", limits}};
    }
    nlohmann::json rules = nlohmann::json::array();
    for (const auto& r : w.rules) {
        rules.push_back({{"kind", r.kind == RuleKind::ForbidPattern ? "forbid_pattern" : "require_pattern"},
                         {"applies_to", scope_to_string(r.applies_to)},
                         {"pattern", r.pattern},
                         {"reason", r.reason}});
    }
    j = {{"objects", objs},
         {"goal",
          {{"require_final_variant", scope_to_string(w.goal.require_final_variant)},
           {"references_any", w.goal.references_any}}},
         {"rules", rules}};
}

void from_json(const nlohmann::json& j, ScriptedWorld& w) {
    w = ScriptedWorld{};
    if (j.contains("objects")) {
        for (auto it = j.at("objects").begin(); it != j.at("objects").end(); ++it) {
            WorldObject obj;
            obj.links = it.value().value("links", std::set<std::string>{});
            obj.joints = it.value().value("joints", std::set<std::string>{});
            if (it.value().contains("joint_limits")) {
                for (auto lt = it.value().at("joint_limits").begin();
                     lt != it.value().at("joint_limits").end(); ++lt) {
                    auto arr = lt.value().get<std::vector<double>>();
                    JointLimits lim;
                    if (!arr.empty()) lim.low = arr[0];
                    if (arr.size() > 1) lim.high = arr[1];
                    obj.joint_limits[lt.key()] = lim;
                }
            }
            w.objects[it.key()] = std::move(obj);
        }
    }
    if (j.contains("goal")) {
        const auto& g = j.at("goal");
        w.goal.require_final_variant = scope_from_string(g.value("require_final_variant", "any"));
        w.goal.references_any = g.value("references_any", std::vector<std::string>{});
    }
    if (j.contains("rules")) {
        for (const auto& rj : j.at("rules")) {
            WorldRule r;
            std::string kind = rj.value("kind", "forbid_pattern");
            if (kind == "forbid_pattern")
                r.kind = RuleKind::ForbidPattern;
            else if (kind == "require_pattern")
                r.kind = RuleKind::RequirePattern;
            else
                throw InvalidWorld("unknown rule kind: " + kind);
            r.applies_to = scope_from_string(rj.value("applies_to", "any"));
            r.pattern = rj.at("pattern").get<std::string>();
            r.reason = rj.value("reason", "");
            w.rules.push_back(std::move(r));
        }
    }
    w.validate();
}

void to_json(nlohmann::json& j, const ExecutionOutcome& o) {
    j = {{"subtask_success", o.subtask_success},
         {"overall_success", o.overall_success},
         {"steps_executed", o.steps_executed}};
}

void from_json(const nlohmann::json& j, ExecutionOutcome& o) {
    o.subtask_success = j.value("subtask_success", std::vector<bool>{});
    o.overall_success = j.value("overall_success", false);
    o.steps_executed = j.value("steps_executed", std::size_t{0});
}

ScriptedWorld load_world(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open world file: " + path);
    nlohmann::json j;
    in >> j;
    return j.get<ScriptedWorld>();
}

void save_world(const ScriptedWorld& world, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write world file: " + path);
    nlohmann::json j = world;
    out << j.dump(2) << '\n';
}

}  // namespace vergsa
