#include <cstdio>
#include <random>

#include "doctest.h"
#include "vergsa/fixtures.hpp"
#include "vergsa/scripted_env.hpp"

using namespace vergsa;

namespace {

Subtask subtask_of(const std::string& reply, std::size_t index) {
    return parse_solution(reply).subtasks.at(index);
}

}  // namespace

TEST_CASE("golden subtask adjudications") {
    ScriptedWorld world = fixtures::fold_chair_world();
    ApiCatalog catalog = default_catalog();

    // grasping link_1 where the seat is link_0 fails
    CHECK_FALSE(execute_subtask(world, subtask_of(fixtures::fold_chair_reply_rollout1(), 0), catalog));
    // grasping link_0 with a grip check passes
    CHECK(execute_subtask(world, subtask_of(fixtures::fold_chair_reply_rollout2(), 0), catalog));
    // reward targeting the joint_0 lower limit via get_joint_limit passes
    CHECK(execute_subtask(world, subtask_of(fixtures::fold_chair_reply_rollout2(), 1), catalog));
    // hard-coded joint target is rejected by the rule table
    auto np_pi = parse_continuation(fixtures::fold_chair_continuation_substep1()).at(0);
    CHECK_FALSE(execute_subtask(world, np_pi, catalog));
    // reward referencing joint_1, which the world lacks
    CHECK_FALSE(execute_subtask(world, subtask_of(fixtures::fold_chair_reply_rollout1(), 1), catalog));
}

TEST_CASE("malformed supervision executes to false, not an error") {
    ScriptedWorld world = fixtures::fold_chair_world();
    Subtask sub;
    sub.name = "empty";
    sub.supervision.variant = SupervisionVariant::Primitive;
    sub.supervision.code = "";
    CHECK_FALSE(execute_subtask(world, sub, default_catalog()));

    Subtask no_success;
    no_success.supervision.variant = SupervisionVariant::Primitive;
    no_success.supervision.code = "rgbs, final_state = grasp_object(self, \"FoldingChair\")";
    CHECK_FALSE(execute_subtask(world, no_success, default_catalog()));
}

TEST_CASE("execute_solution: conjunction, goal and modes") {
    ScriptedWorld world = fixtures::fold_chair_world();
    ApiCatalog catalog = default_catalog();

    Solution good = parse_solution(fixtures::fold_chair_reply_rollout2());
    ExecutionOutcome outcome = execute_solution(world, good, catalog);
    CHECK(outcome.subtask_success == std::vector<bool>{true, true});
    CHECK(outcome.overall_success);
    CHECK(outcome.steps_executed == 2);

    Solution bad = parse_solution(fixtures::fold_chair_reply_rollout1());
    ExecutionOutcome run_all = execute_solution(world, bad, catalog);
    CHECK(run_all.subtask_success == std::vector<bool>{false, false});
    CHECK_FALSE(run_all.overall_success);
    CHECK(run_all.steps_executed == 2);

    ExecutionOutcome fail_fast =
        execute_solution(world, bad, catalog, {ExecMode::FailFast, 0.0, 0});
    CHECK(fail_fast.steps_executed == 1);
    CHECK_FALSE(fail_fast.overall_success);
    CHECK(fail_fast.subtask_success == std::vector<bool>{false, false});
}

TEST_CASE("scene objects absent from the world raise WorldMismatch") {
    ScriptedWorld world = fixtures::fold_chair_world();
    Solution sol = parse_solution(fixtures::fold_chair_reply_rollout2());
    sol.scene.objects[0].name = "OfficeChair";
    CHECK_THROWS_AS(execute_solution(world, sol, default_catalog()), WorldMismatch);
}

TEST_CASE("execution is deterministic") {
    ScriptedWorld world = fixtures::fold_chair_world();
    Solution sol = parse_solution(fixtures::fold_chair_reply_rollout2());
    auto a = execute_solution(world, sol, default_catalog());
    auto b = execute_solution(world, sol, default_catalog());
    CHECK(a.subtask_success == b.subtask_success);
    CHECK(a.overall_success == b.overall_success);
}

TEST_CASE("overall success implies every subtask bit") {
    std::mt19937_64 rng(42);
    ApiCatalog catalog = default_catalog();
    for (int trial = 0; trial < 40; ++trial) {
        ScriptedWorld world = fixtures::random_world(rng);
        Solution sol = fixtures::trivial_successful_solution("Obj0");
        sol.scene.objects.clear();  // scene stays opaque for the mismatch check
        ExecutionOutcome outcome = execute_solution(world, sol, catalog);
        if (outcome.overall_success)
            for (bool bit : outcome.subtask_success) CHECK(bit);
    }
}

TEST_CASE("adding links and joints never flips a passing subtask") {
    std::mt19937_64 rng(99);
    ApiCatalog catalog = default_catalog();
    for (int trial = 0; trial < 40; ++trial) {
        ScriptedWorld world = fixtures::random_world(rng);
        Subtask sub;
        sub.supervision.variant = SupervisionVariant::RewardFunction;
        std::string obj = rng() % 2 ? "Obj0" : "ObjMissing";
        std::string joint = "joint_" + std::to_string(rng() % 4);
        sub.supervision.code = "joint_angle = get_joint_state(self, \"" + obj + "\", \"" + joint +
                               "\")\nreward = -joint_angle\nsuccess = joint_angle < 0.1";
        sub.supervision.api_calls = code_text::called_identifiers(sub.supervision.code);
        bool before = execute_subtask(world, sub, catalog);

        ScriptedWorld larger = world;
        for (auto& [name, object] : larger.objects) {
            (void)name;
            object.links.insert("link_9");
            object.joints.insert(joint);
            object.joints.insert("joint_9");
        }
        bool after = execute_subtask(larger, sub, catalog);
        if (before) CHECK(after);
    }
}

TEST_CASE("noise channel flips deterministically") {
    ScriptedWorld world = fixtures::fold_chair_world();
    ApiCatalog catalog = default_catalog();
    Subtask good = subtask_of(fixtures::fold_chair_reply_rollout2(), 0);
    CHECK(execute_subtask(world, good, catalog));
    ExecOptions noisy{ExecMode::RunAll, 1.0, 7};
    CHECK_FALSE(execute_subtask(world, good, catalog, default_stop_list(), noisy));
    // same seed, same flip
    CHECK_FALSE(execute_subtask(world, good, catalog, default_stop_list(), noisy));
}

TEST_CASE("executor caches subtask executions by content") {
    ScriptedWorld world = fixtures::fold_chair_world();
    Executor executor(world, default_catalog());
    Solution a = parse_solution(fixtures::fold_chair_reply_rollout2());
    executor.run_solution(a);
    CHECK(executor.subtask_executions() == 2);

    // same subtasks under a different scene: no new subtask executions
    Solution b = a;
    b.scene.raw_text += " shifted";
    executor.run_solution(b);
    CHECK(executor.subtask_executions() == 2);
}

TEST_CASE("world fixture round trip and validation") {
    ScriptedWorld world = fixtures::fold_chair_world();
    nlohmann::json j = world;
    ScriptedWorld back = j.get<ScriptedWorld>();
    CHECK(back.objects.count("FoldingChair") == 1);
    CHECK(back.objects.at("FoldingChair").joint_limits.at("joint_0").high == doctest::Approx(1.9));
    CHECK(back.rules.size() == 1);
    CHECK(back.goal.references_any == std::vector<std::string>{"joint_0"});

    nlohmann::json bad = j;
    bad["goal"]["references_any"] = {"joint_42"};
    CHECK_THROWS_AS(bad.get<ScriptedWorld>(), InvalidWorld);

    std::string path = "test_world_roundtrip.json";
    save_world(world, path);
    ScriptedWorld loaded = load_world(path);
    std::remove(path.c_str());
    CHECK(loaded.objects.size() == world.objects.size());
}
