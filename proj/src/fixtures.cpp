#include "vergsa/fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace vergsa::fixtures {

// ---------------------------------------------------------------------------
// Fold Chair golden fixture
// ---------------------------------------------------------------------------

TaskSpec fold_chair_task() {
    TaskSpec task;
    task.name = "Fold Chair";
    task.description =
        "The robotic arm folds the chair by lowering the seat into its folded position";
    task.articulation_tree.links = {"base", "link_0"};
    task.articulation_tree.joints = {{"joint_0", "revolute", "base", "link_0"}};
    task.link_semantics = {{"base", "chair frame"}, {"link_0", "seat"}};
    task.relevant_links = {"link_0"};
    task.relevant_joints = {"joint_0"};
    task.initial_config = "The chair stands unfolded with the seat raised";
    task.validate();
    return task;
}

ScriptedWorld fold_chair_world() {
    ScriptedWorld world;
    WorldObject chair;
    chair.links = {"base", "link_0"};
    chair.joints = {"joint_0"};
    chair.joint_limits["joint_0"] = {0.0, 1.9};
    world.objects["FoldingChair"] = std::move(chair);
    world.goal.require_final_variant = RuleScope::Any;
    world.goal.references_any = {"joint_0"};
    world.rules.push_back({RuleKind::ForbidPattern, RuleScope::Reward, "=\\s*np\\.pi",
                           "joint targets must come from get_joint_limit"});
    world.validate();
    return world;
}

namespace {

const char* kFoldChairScene =
    "scene:\n"
    "- name: FoldingChair, asset: 102255, scale: 1.0, position: [0.0, 0.0, 0.0]\n"
    "embodiment: franka panda\n";

}  // namespace

std::string fold_chair_reply_rollout1() {
    return std::string(kFoldChairScene) +
           "\n"
           "subtask 1: grasp the seat\n"
           "```primitive\n"
           "rgbs, final_state = grasp_object_link(self, \"FoldingChair\", \"link_1\")\n"
           "success = check_grasped(self, \"FoldingChair\", \"link_1\")\n"
           "```\n"
           "\n"
           "subtask 2: fold the seat by lowering it to its folded position\n"
           "```reward\n"
           "def _compute_reward(self):\n"
           "    # The reward encourages the end-effector to stay near the seat\n"
           "    eef_pos = get_eef_pos(self)[0]\n"
           "    seat_pos = get_link_state(self, \"FoldingChair\", \"link_1\")\n"
           "    reward_near = -np.linalg.norm(eef_pos - seat_pos)\n"
           "\n"
           "    # Access the joint state of joint_1 for folding the seat.\n"
           "    joint_angle = get_joint_state(self, \"FoldingChair\", \"joint_1\")\n"
           "\n"
           "    # The joint angle corresponding to the folded position\n"
           "    folded_angle = get_joint_limit(self, \"FoldingChair\", \"joint_1\")[0]\n"
           "\n"
           "    # The reward will be the negative difference between the current joint\n"
           "    # angle and the folded angle.\n"
           "    diff = np.abs(joint_angle - folded_angle)\n"
           "    reward_joint = -diff\n"
           "\n"
           "    reward = reward_near + 5 * reward_joint\n"
           "    success = diff < 0.15 * (get_joint_limit(self, \"FoldingChair\", \"joint_1\")[1]\n"
           "             - folded_angle)\n"
           "\n"
           "    return reward, success\n"
           "```\n";
}

std::string fold_chair_reply_rollout2() {
    return std::string(kFoldChairScene) +
           "\n"
           "subtask 1: grasp the seat\n"
           "```primitive\n"
           "rgbs, final_state = grasp_object_link(self, \"FoldingChair\", \"link_0\")\n"
           "success = check_grasped(self, \"FoldingChair\", \"link_0\")\n"
           "```\n"
           "\n"
           "subtask 2: lower the seat to fold the chair by actuating joint_0\n"
           "```reward\n"
           "def _compute_reward(self):\n"
           "    eef_pos = get_eef_pos(self)[0]\n"
           "    seat_pos = get_link_state(self, \"FoldingChair\", \"link_0\")\n"
           "    reward_near = -np.linalg.norm(eef_pos - seat_pos)\n"
           "\n"
           "    joint_angle = get_joint_state(self, \"FoldingChair\", \"joint_0\")\n"
           "    joint_limit_low, joint_limit_high = get_joint_limit(self, \"FoldingChair\",\n"
           "    \"joint_0\")\n"
           "\n"
           "    # For folding, we want the seat to be lowered, so we target the lower\n"
           "    # joint limit\n"
           "    diff = np.abs(joint_angle - joint_limit_low)\n"
           "    reward_joint = -diff\n"
           "\n"
           "    reward = reward_near + 5 * reward_joint\n"
           "\n"
           "    success = diff < 0.1 * (joint_limit_high - joint_limit_low)\n"
           "\n"
           "    return reward, success\n"
           "```\n";
}

std::string fold_chair_continuation_substep1() {
    return std::string("subtask 2: lower the seat to fold the chair\n") +
           "```reward\n"
           "def _compute_reward(self):\n"
           "    # The reward encourages the end-effector to stay near the seat\n"
           "    eef_pos = get_eef_pos(self)[0]\n"
           "    seat_pos = get_link_state(self, \"FoldingChair\", \"link_0\")\n"
           "    reward_near = -np.linalg.norm(eef_pos - seat_pos)\n"
           "\n"
           "    # Access the joint state of joint_0 for lowering the seat.\n"
           "    joint_angle = get_joint_state(self, \"FoldingChair\", \"joint_0\")\n"
           "\n"
           "    # The joint angle corresponding to the folded position of the seat\n"
           "    folded_angle = np.pi  # Assuming the folded position is pi (180 degrees)\n"
           "\n"
           "    # The reward will be the negative difference between the current\n"
           "    # joint angle and the folded angle.\n"
           "    diff = np.abs(joint_angle - folded_angle)\n"
           "    reward_joint = -diff\n"
           "\n"
           "    reward = reward_near + 5 * reward_joint\n"
           "    success = diff < 0.15 * (get_joint_limit(self, 'FoldingChair', 'joint_0')[1]\n"
           "              - get_joint_limit(self, 'FoldingChair', 'joint_0')[0])\n"
           "\n"
           "    return reward, success\n"
           "```\n";
}

std::string fold_chair_continuation_substep2() { return "No further subtasks.\n"; }

FixtureBank fold_chair_bank(const ApiCatalog& catalog) {
    TaskSpec task = fold_chair_task();
    FixtureBank bank;

    PromptBundle base_prompt = build_prompt(task, {}, catalog, generation_instructions());
    bank[MockModel::prompt_hash(base_prompt)] = {fold_chair_reply_rollout1(),
                                                 fold_chair_reply_rollout2()};

    Solution base2 = parse_solution(fold_chair_reply_rollout2());
    for (std::size_t j = 1; j <= base2.subtasks.size(); ++j) {
        std::span<const Subtask> shared(base2.subtasks.data(), j);
        PromptBundle prompt =
            build_completion_prompt(task, base2.scene, shared, catalog, completion_instructions());
        bank[MockModel::prompt_hash(prompt)] = {
            j == 1 ? fold_chair_continuation_substep1() : fold_chair_continuation_substep2()};
    }
    return bank;
}

RolloutConfig fold_chair_config() {
    RolloutConfig config;
    config.n_base = 2;
    config.completions_per_substep = 1;
    config.branch = BranchScope::OneBase;
    config.branch_base_index = 1;
    config.mode = ExecMode::RunAll;
    return config;
}

// ---------------------------------------------------------------------------
// 30-task corpus
// ---------------------------------------------------------------------------

const std::vector<CorpusRow>& corpus30_rows() {
    static const std::vector<CorpusRow> rows = {
        {"Adjust Display Angle", 6, 6, 9, 9},
        {"Adjust Fan Speed", 3, 0, 7, 0},
        {"Adjust Laptop Screen Angle", 6, 5, 9, 8},
        {"Close Stapler Lid", 4, 2, 8, 3},
        {"close the oven door", 3, 0, 6, 0},
        {"Close Trashcan Lid", 5, 3, 8, 4},
        {"Fold Chair", 4, 1, 9, 3},
        {"Move Door Slightly Open", 6, 3, 13, 6},
        {"Move Laptop to a Different Location", 4, 1, 12, 4},
        {"Open Door", 3, 0, 6, 0},
        {"Open Kettle Lid", 6, 5, 11, 8},
        {"Open Laptop Screen", 5, 4, 8, 6},
        {"Open Lighter Lid", 3, 0, 6, 0},
        {"Open Microwave Door", 9, 7, 13, 11},
        {"Open Partial Box Lid", 8, 6, 11, 9},
        {"Open Pot Lid", 6, 5, 9, 8},
        {"Open Stapler Lid", 3, 0, 6, 0},
        {"Open Trash Can Lid", 7, 4, 15, 10},
        {"Power On Printer", 5, 2, 13, 7},
        {"Press Button to Access Menu", 3, 0, 6, 0},
        {"Press Button to Change Channel", 3, 1, 7, 2},
        {"Rotate Display Screen", 7, 6, 10, 8},
        {"Rotate Fan Rotor", 7, 5, 10, 7},
        {"Rotate Laptop Screen", 7, 6, 10, 8},
        {"Rotate Safe Knob", 6, 3, 19, 7},
        {"Scroll Wheel", 4, 1, 11, 3},
        {"Set Clock Minute Hand", 4, 1, 11, 3},
        {"Stop Globe Rotation", 4, 1, 6, 2},
        {"Tilt Display Screen", 5, 4, 9, 6},
        {"Turn On Fan", 4, 1, 9, 2},
    };
    return rows;
}

namespace {

// Spreads `total` over `slots` solutions, each at least one: base share plus
// round-robin remainder.
std::vector<std::size_t> spread(std::size_t total, std::size_t slots) {
    std::vector<std::size_t> counts(slots, 1);
    std::size_t extra = total - slots;
    for (std::size_t i = 0; extra > 0; i = (i + 1) % slots, --extra) ++counts[i];
    return counts;
}

Subtask corpus_subtask(std::size_t task_idx, std::size_t sol_idx, std::size_t sub_idx) {
    Subtask sub;
    sub.name = "step " + std::to_string(sub_idx + 1);
    sub.supervision.variant = SupervisionVariant::Primitive;
    sub.supervision.code = "rgbs, final_state = grasp_object(self, \"Obj\")\n"
                           "success = check_grasped(self, \"Obj\")\n"
                           "# trace " +
                           std::to_string(task_idx) + "." + std::to_string(sol_idx) + "." +
                           std::to_string(sub_idx) + "\n";
    sub.supervision.api_calls = code_text::called_identifiers(sub.supervision.code);
    return sub;
}

}  // namespace

std::vector<ExecutedRecord> corpus30_records() {
    std::vector<ExecutedRecord> records;
    const auto& rows = corpus30_rows();
    for (std::size_t t = 0; t < rows.size(); ++t) {
        const CorpusRow& row = rows[t];
        const std::size_t failed = row.solutions - row.solution_successes;

        // Successful solutions carry exactly the successful subtasks; failed
        // ones carry the rest with every bit false. This realizes the row
        // counts while honoring overall_success => all bits true.
        std::vector<std::size_t> success_counts =
            row.solution_successes == 0
                ? std::vector<std::size_t>{}
                : spread(row.subtask_successes, row.solution_successes);
        std::vector<std::size_t> failed_counts =
            failed == 0 ? std::vector<std::size_t>{}
                        : spread(row.subtasks - row.subtask_successes, failed);

        std::size_t sol_idx = 0;
        auto emit = [&](std::size_t n_subtasks, bool success) {
            ExecutedRecord rec;
            rec.task_name = row.task;
            rec.solution.scene.raw_text = "scene for " + row.task;
            for (std::size_t s = 0; s < n_subtasks; ++s)
                rec.solution.subtasks.push_back(corpus_subtask(t, sol_idx, s));
            rec.solution.overall_success = success;
            rec.outcome.subtask_success.assign(n_subtasks, success);
            rec.outcome.overall_success = success;
            rec.outcome.steps_executed = n_subtasks;
            records.push_back(std::move(rec));
            ++sol_idx;
        };
        for (std::size_t n : success_counts) emit(n, true);
        for (std::size_t n : failed_counts) emit(n, false);
    }
    return records;
}

std::vector<LabeledPrefix> corpus30_prefixes() {
    std::vector<LabeledPrefix> out;
    auto records = corpus30_records();
    std::string last_task;
    int sol_in_task = 0;
    for (const auto& rec : records) {
        if (rec.task_name != last_task) {
            last_task = rec.task_name;
            sol_in_task = 0;
        }
        for (std::size_t m = 1; m <= rec.solution.subtasks.size(); ++m) {
            LabeledPrefix lp;
            lp.task.name = rec.task_name;
            lp.prefix = prefix(rec.solution, m);
            bool bit = rec.outcome.subtask_success[m - 1];
            lp.label = bit && rec.outcome.overall_success ? 1 : 0;
            lp.provenance = {sol_in_task, 0, 0};
            lp.provenance_m = m;
            out.push_back(std::move(lp));
        }
        ++sol_in_task;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Retrieval fixtures
// ---------------------------------------------------------------------------

namespace {

EmbeddingVector axis_vector(std::size_t dim, std::size_t axis) {
    EmbeddingVector e;
    e.values.assign(dim, 0.0);
    e.values[axis] = 1.0;
    return e;
}

// Unit vector with the requested cosine against axis `main`, remainder on
// axis `aux`.
EmbeddingVector planted_vector(std::size_t dim, std::size_t main, std::size_t aux, double cosine) {
    EmbeddingVector e;
    e.values.assign(dim, 0.0);
    e.values[main] = cosine;
    e.values[aux] = std::sqrt(1.0 - cosine * cosine);
    return e;
}

}  // namespace

RetrievalFixture similarity_table_fixture() {
    constexpr std::size_t kDim = 8;
    RetrievalFixture fixture;
    fixture.pool.dimension = kDim;
    fixture.pool.embedder_id = "fixture-8";

    struct Planted {
        const char* name;
        std::size_t main;
        std::size_t aux;
        double cosine;
    };
    const Planted planted[] = {
        {"Change Lamp Direction", 0, 3, 0.897}, {"Rotate Fan Rotor", 0, 4, 0.677},
        {"Remove Pot Lid", 1, 3, 0.829},        {"Open Toilet Lid", 1, 4, 0.772},
        {"Tilt Display Screen", 2, 3, 0.909},   {"Rotate Laptop Screen", 2, 4, 0.824},
    };
    for (const auto& p : planted) {
        PoolEntry entry;
        entry.task.name = p.name;
        entry.task.description = std::string("pool entry for ") + p.name;
        entry.embedding = planted_vector(kDim, p.main, p.aux, p.cosine);
        entry.solution = trivial_successful_solution("Obj");
        entry.inserted_at = fixture.pool.next_seq++;
        fixture.pool.entries.push_back(std::move(entry));
    }

    fixture.cases = {
        {"Change Fan Direction",
         axis_vector(kDim, 0),
         {{"Change Lamp Direction", 0.897}, {"Rotate Fan Rotor", 0.677}}},
        {"Open Pot Lid", axis_vector(kDim, 1), {{"Remove Pot Lid", 0.829}, {"Open Toilet Lid", 0.772}}},
        {"Adjust Display Angle",
         axis_vector(kDim, 2),
         {{"Tilt Display Screen", 0.909}, {"Rotate Laptop Screen", 0.824}}},
    };
    return fixture;
}

const std::vector<std::pair<std::string, std::string>>& initial_pool_tasks() {
    static const std::vector<std::pair<std::string, std::string>> tasks = {
        {"Lift Kettle by Handle",
         "The robotic arm approaches the kettle, grasps the handle and lifts the kettle off its "
         "base"},
        {"Turn On Lamp",
         "The task involves the robotic arm operating a lamp, specifically by turning it on This "
         "requires manipulating the switch to move it to the on position"},
        {"Carry Bucket",
         "The robot arm needs to pick up the bucket by its handle, carry it to the desired "
         "location, and then place it down safely"},
        {"Flush the Toilet", "The robot arm will actuate the button of the toilet in order to flush it"},
        {"Close Dispenser Lid",
         "The robot arm will close the lid of the dispenser This task involves moving the slider "
         "lids to a position indicating that the dispenser is closed"},
        {"Turn Off Faucet",
         "The robot arm needs to interact with the faucet to switch it off, stopping the flow of "
         "water"},
        {"Adjust Water Flow",
         "The robot arm needs to rotate the faucets switch in order to adjust the water flow "
         "Depending on the task, the robot may need to turn the water on, adjust the flow to a "
         "specific level, or turn the water off"},
        {"Change Lamp Direction",
         "The robotic arm adjusts the direction of the lamp by manipulating its head and rotation "
         "bars The goal is to change the illumination direction of the lamp"},
        {"Open Window Halfway",
         "The robot arm will manipulate the window to open it halfway and then stop, maintaining "
         "the position"},
        {"Opening Both Refrigerator Doors", "The robot arm will open both doors of the refrigerator"},
        {"Turn on Hot Water",
         "The robot arm manipulates the switch to turn on the hot water by actuating the toggle "
         "button"},
        {"Pull Lever to Start Coffee Brewing",
         "The robotic arm needs to pull a lever on the coffee machine to start brewing coffee"},
        {"Adjust Chair Position",
         "The task requires the robot arm to adjust the position of a chair, presumably by moving "
         "it to a new location or reorienting it"},
        {"Turning On Coffee Machine",
         "The robot arm has to turn on the coffee machine by manipulating the given lever and "
         "knobs"},
        {"Press Start Button",
         "The Franka Panda robotic arm will press the start button of the dishwasher"},
    };
    return tasks;
}

Solution trivial_successful_solution(const std::string& object_name) {
    Solution sol;
    sol.scene.raw_text = "scene:\n- name: " + object_name + ", asset: none, scale: 1.0, position: [0, 0, 0]";
    sol.scene.objects.push_back({object_name, "none", 1.0, {0, 0, 0}});
    Subtask sub;
    sub.name = "grasp the " + object_name;
    sub.supervision.variant = SupervisionVariant::Primitive;
    sub.supervision.code = "rgbs, final_state = grasp_object(self, \"" + object_name + "\")\n" +
                           "success = check_grasped(self, \"" + object_name + "\")";
    sub.supervision.api_calls = code_text::called_identifiers(sub.supervision.code);
    sol.subtasks.push_back(std::move(sub));
    sol.overall_success = true;
    return sol;
}

ExemplarPool initial_pool(const Embedder& embedder) {
    ExemplarPool pool = make_pool(embedder);
    for (const auto& [name, description] : initial_pool_tasks()) {
        TaskSpec task;
        task.name = name;
        task.description = description;
        insert_on_success(pool, task, trivial_successful_solution("Target"), embedder);
    }
    return pool;
}

// ---------------------------------------------------------------------------
// Synthetic generators
// ---------------------------------------------------------------------------

ScriptedWorld random_world(std::mt19937_64& rng) {
    ScriptedWorld world;
    std::size_t n_objects = 1 + rng() % 3;
    for (std::size_t o = 0; o < n_objects; ++o) {
        WorldObject obj;
        std::size_t n_links = 1 + rng() % 4;
        std::size_t n_joints = 1 + rng() % 3;
        for (std::size_t l = 0; l < n_links; ++l) obj.links.insert("link_" + std::to_string(l));
        for (std::size_t j = 0; j < n_joints; ++j) {
            std::string name = "joint_" + std::to_string(j);
            obj.joints.insert(name);
            obj.joint_limits[name] = {0.0, 1.0 + static_cast<double>(rng() % 100) / 50.0};
        }
        world.objects["Obj" + std::to_string(o)] = std::move(obj);
    }
    world.goal.references_any = {"joint_0"};
    return world;
}

SolutionTree random_executed_tree(std::mt19937_64& rng) {
    SolutionTree tree;
    tree.root.name = "random task " + std::to_string(rng());
    std::size_t uid = 0;

    auto make_subtask = [&](std::string tag) {
        Subtask sub;
        sub.name = "step " + std::to_string(uid);
        sub.supervision.variant =
            rng() % 2 == 0 ? SupervisionVariant::Primitive : SupervisionVariant::RewardFunction;
        sub.supervision.code = "success = op_" + std::to_string(uid++) + "()  # " + tag;
        return sub;
    };
    auto make_outcome = [&](std::size_t len) {
        ExecutionOutcome outcome;
        outcome.subtask_success.resize(len);
        for (std::size_t i = 0; i < len; ++i) outcome.subtask_success[i] = rng() % 2 == 0;
        bool all = std::all_of(outcome.subtask_success.begin(), outcome.subtask_success.end(),
                               [](bool b) { return b; });
        outcome.overall_success = all && rng() % 4 != 0;
        outcome.steps_executed = len;
        return outcome;
    };

    int n_base = 1 + static_cast<int>(rng() % 3);
    for (int i = 0; i < n_base; ++i) {
        TreeNode node;
        node.id = tree.nodes.size();
        node.origin = {i, 0, 0};
        node.solution.scene.raw_text = "scene " + std::to_string(rng());
        std::size_t len = 1 + rng() % 5;
        for (std::size_t s = 0; s < len; ++s)
            node.solution.subtasks.push_back(make_subtask("base"));
        node.outcome = make_outcome(len);
        tree.nodes.push_back(std::move(node));
    }
    // Completion-shaped nodes with globally unique content (no prefix dedup).
    int n_completions = static_cast<int>(rng() % 5);
    for (int c = 0; c < n_completions; ++c) {
        TreeNode node;
        node.id = tree.nodes.size();
        int i = static_cast<int>(rng()) % n_base;
        if (i < 0) i = -i;
        node.origin = {i, 1 + static_cast<int>(rng() % 3), 1 + c};
        node.solution.scene.raw_text = "scene " + std::to_string(rng());
        std::size_t len = 1 + rng() % 5;
        for (std::size_t s = 0; s < len; ++s)
            node.solution.subtasks.push_back(make_subtask("completion"));
        node.outcome = make_outcome(len);
        tree.nodes.push_back(std::move(node));
    }
    return tree;
}

namespace {

std::string suite_scene_text(const std::string& object_name, std::size_t candidate) {
    return "scene:\n- name: " + object_name + ", asset: synthetic, scale: 1.0, position: [0.0, " +
           std::to_string(candidate) + ".0, 0.0]\nembodiment: franka panda\n";
}

Subtask suite_grasp_subtask(const std::string& object_name, const std::string& link) {
    Subtask sub;
    sub.name = "grasp the handle";
    sub.supervision.variant = SupervisionVariant::Primitive;
    sub.supervision.code = "rgbs, final_state = grasp_object_link(self, \"" + object_name + "\", \"" +
                           link + "\")\nsuccess = check_grasped(self, \"" + object_name + "\", \"" +
                           link + "\")";
    sub.supervision.api_calls = code_text::called_identifiers(sub.supervision.code);
    return sub;
}

Subtask suite_actuate_subtask(const std::string& object_name, bool with_success) {
    Subtask sub;
    sub.name = "actuate the joint to the target";
    sub.supervision.variant = SupervisionVariant::RewardFunction;
    std::string code = "def _compute_reward(self):\n"
                       "    joint_angle = get_joint_state(self, \"" + object_name + "\", \"joint_0\")\n"
                       "    target = get_joint_limit(self, \"" + object_name + "\", \"joint_0\")[1]\n"
                       "    diff = np.abs(joint_angle - target)\n"
                       "    reward_joint = -diff\n"
                       "    reward = reward_joint\n";
    if (with_success) code += "    success = diff < 0.1\n    return reward, success\n";
    else code += "    return reward\n";
    sub.supervision.code = code;
    sub.supervision.api_calls = code_text::called_identifiers(code);
    return sub;
}

Subtask suite_bad_api_subtask(const std::string& object_name) {
    Subtask sub;
    sub.name = "grasp the handle";
    sub.supervision.variant = SupervisionVariant::Primitive;
    sub.supervision.code = "rgbs, final_state = magnetize_gripper(self, \"" + object_name + "\")\n" +
                           "success = check_grasped(self, \"" + object_name + "\")";
    sub.supervision.api_calls = code_text::called_identifiers(sub.supervision.code);
    return sub;
}

}  // namespace

std::vector<CandidateSet> make_selection_suite(std::uint64_t seed, std::size_t n_tasks) {
    std::mt19937_64 rng(seed);
    std::vector<CandidateSet> suite;
    for (std::size_t t = 0; t < n_tasks; ++t) {
        std::string object_name = "Device" + std::to_string(seed % 1000) + "_" + std::to_string(t);

        CandidateSet cs;
        cs.task.name = "Operate " + object_name;
        cs.task.description = "The robot arm actuates " + object_name + " to its target state";
        cs.task.articulation_tree.links = {"base", "link_0", "link_1"};
        cs.task.articulation_tree.joints = {{"joint_0", "revolute", "base", "link_0"}};
        cs.task.relevant_links = {"link_0"};
        cs.task.relevant_joints = {"joint_0"};

        WorldObject obj;
        obj.links = {"base", "link_0", "link_1"};
        obj.joints = {"joint_0"};
        obj.joint_limits["joint_0"] = {0.0, 1.57};
        cs.world.objects[object_name] = std::move(obj);
        cs.world.goal.references_any = {"joint_0"};

        auto scene_for = [&](std::size_t c) {
            SceneConfiguration scene;
            scene.raw_text = suite_scene_text(object_name, c);
            scene.objects.push_back(
                {object_name, "synthetic", 1.0, {0.0, static_cast<double>(c), 0.0}});
            scene.embodiment = "franka panda";
            return scene;
        };

        Solution good;
        good.scene = scene_for(0);
        good.subtasks = {suite_grasp_subtask(object_name, "link_0"),
                         suite_actuate_subtask(object_name, true)};

        Solution bad_api;
        bad_api.scene = scene_for(1);
        bad_api.subtasks = {suite_bad_api_subtask(object_name),
                            suite_actuate_subtask(object_name, true)};

        Solution bad_link;
        bad_link.scene = scene_for(2);
        bad_link.subtasks = {suite_grasp_subtask(object_name, "link_9"),
                             suite_actuate_subtask(object_name, true)};

        Solution bad_success;
        bad_success.scene = scene_for(3);
        bad_success.subtasks = {suite_grasp_subtask(object_name, "link_0"),
                                suite_actuate_subtask(object_name, false)};

        std::vector<Solution> bads = {std::move(bad_api), std::move(bad_link), std::move(bad_success)};
        std::size_t drop = rng() % 3;
        bads.erase(bads.begin() + static_cast<std::ptrdiff_t>(drop));

        cs.candidates = {std::move(good), std::move(bads[0]), std::move(bads[1])};
        // Shuffle so the passing candidate's index varies across tasks.
        for (std::size_t i = cs.candidates.size(); i > 1; --i)
            std::swap(cs.candidates[i - 1], cs.candidates[rng() % i]);
        suite.push_back(std::move(cs));
    }
    return suite;
}

std::vector<LabeledPrefix> suite_training_prefixes(const std::vector<CandidateSet>& suite,
                                                   const ApiCatalog& catalog) {
    std::vector<LabeledPrefix> out;
    for (const auto& cs : suite) {
        Executor executor(cs.world, catalog);
        for (std::size_t c = 0; c < cs.candidates.size(); ++c) {
            const Solution& sol = cs.candidates[c];
            ExecutionOutcome outcome = executor.run_solution(sol);
            for (std::size_t m = 1; m <= sol.subtasks.size(); ++m) {
                LabeledPrefix lp;
                lp.task = cs.task;
                lp.prefix = prefix(sol, m);
                bool bit = outcome.subtask_success[m - 1];
                lp.label = bit && outcome.overall_success ? 1 : 0;
                lp.provenance = {static_cast<int>(c), 0, 0};
                lp.provenance_m = m;
                out.push_back(std::move(lp));
            }
        }
    }
    return out;
}

}  // namespace vergsa::fixtures
