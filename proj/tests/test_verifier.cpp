#include <cmath>
#include <cstdio>
#include <random>

#include "doctest.h"
#include "vergsa/fixtures.hpp"
#include "vergsa/verifier.hpp"

using namespace vergsa;

namespace {

// Separable set: positive prefixes are fully valid, negatives call an
// out-of-catalog API. 200 records, half per class.
std::vector<LabeledPrefix> separable_set() {
    std::vector<LabeledPrefix> data;
    for (int i = 0; i < 100; ++i) {
        for (int label : {1, 0}) {
            LabeledPrefix lp;
            lp.task.name = "sep task " + std::to_string(i);
            lp.prefix.m = 1;
            Subtask sub;
            sub.name = "step " + std::to_string(i);
            sub.supervision.variant = SupervisionVariant::Primitive;
            sub.supervision.code =
                label == 1 ? "rgbs, final_state = grasp_object(self, \"Obj\")\n"
                             "success = check_grasped(self, \"Obj\")  # v" + std::to_string(i)
                           : "rgbs, final_state = engage_tractor_beam(self, \"Obj\")\n"
                             "success = verify_beam(self)  # v" + std::to_string(i);
            sub.supervision.api_calls = code_text::called_identifiers(sub.supervision.code);
            lp.prefix.subtasks = {sub};
            lp.label = label;
            data.push_back(std::move(lp));
        }
    }
    return data;
}

double accuracy(const VerifierParams& params, const Featurizer& fz,
                const std::vector<LabeledPrefix>& data) {
    std::size_t hits = 0;
    for (const auto& lp : data) {
        double p = score(params, lp.task, lp.prefix, fz);
        if ((p > 0.5 ? 1 : 0) == lp.label) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(data.size());
}

}  // namespace

TEST_CASE("focal loss golden values") {
    // -0.5 * ln(0.5) = 0.5 * ln 2
    CHECK(focal_bce_loss(0.5, 1, 0.0, 0.5) == doctest::Approx(0.5 * std::log(2.0)).epsilon(1e-12));
    // 0.25 * 0.1^2 * (-ln 0.9)
    CHECK(focal_bce_loss(0.9, 1, 2.0, 0.25) == doctest::Approx(2.6340129e-4).epsilon(1e-4));
    CHECK_THROWS_AS(focal_bce_loss(0.0, 1, 2.0, 0.5), DomainError);
    CHECK_THROWS_AS(focal_bce_loss(1.0, 0, 2.0, 0.5), DomainError);
}

TEST_CASE("focal loss with gamma=0, alpha=0.5 is half the BCE everywhere") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(1e-6, 1.0 - 1e-6);
    for (int trial = 0; trial < 500; ++trial) {
        double p = u(rng);
        int label = static_cast<int>(rng() % 2);
        double bce = label == 1 ? -std::log(p) : -std::log(1.0 - p);
        CHECK(focal_bce_loss(p, label, 0.0, 0.5) == doctest::Approx(0.5 * bce).epsilon(1e-12));
    }
}

TEST_CASE("focal loss is minimized at the label") {
    for (double gamma : {0.0, 1.0, 2.0}) {
        double at_label = focal_bce_loss(1.0 - kProbEpsilon, 1, gamma, 0.3);
        for (double p : {0.1, 0.3, 0.5, 0.7, 0.9})
            CHECK(at_label <= focal_bce_loss(p, 1, gamma, 0.3));
        double at_zero = focal_bce_loss(kProbEpsilon, 0, gamma, 0.3);
        for (double p : {0.1, 0.3, 0.5, 0.7, 0.9})
            CHECK(at_zero <= focal_bce_loss(p, 0, gamma, 0.3));
    }
}

TEST_CASE("analytic gradient matches central finite differences") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-0.8, 0.8);
    const double h = 1e-5;
    for (int trial = 0; trial < 20; ++trial) {
        std::size_t dim = 3 + rng() % 4;
        std::size_t n = 4 + rng() % 12;
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

        auto objective_at = [&](const VerifierParams& p) {
            return batch_objective(p, features, labels, gamma, alpha, decay);
        };
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
            double numeric = (objective_at(hi) - objective_at(lo)) / (2 * h);
            double analytic = d < dim ? g.weights[d] : g.bias;
            num_norm += numeric * numeric;
            diff_norm += (numeric - analytic) * (numeric - analytic);
        }
        CHECK(std::sqrt(diff_norm) <= 1e-4 * std::max(std::sqrt(num_norm), 1e-8));
    }
}

TEST_CASE("featurizer: validity, tree presence, determinism") {
    Featurizer fz;
    TaskSpec task = fixtures::fold_chair_task();

    Solution valid = parse_solution(fixtures::fold_chair_reply_rollout2());
    FeatureVector f_valid = fz.featurize(task, prefix(valid, 2));
    CHECK(f_valid.values[0] == doctest::Approx(2.0));
    CHECK(f_valid.values[1] == doctest::Approx(1.0));  // all subtasks pass the allow-list
    CHECK(f_valid.values[3] == doctest::Approx(1.0));  // all links/joints in the tree
    CHECK(f_valid.values[4] == doctest::Approx(1.0));  // final subtask has a success condition

    // rollout 1 references link_1/joint_1 which the articulation tree lacks
    Solution invalid = parse_solution(fixtures::fold_chair_reply_rollout1());
    FeatureVector f_invalid = fz.featurize(task, prefix(invalid, 2));
    CHECK(f_invalid.values[3] < 1.0);

    FeatureVector again = fz.featurize(task, prefix(invalid, 2));
    CHECK(again.values == f_invalid.values);
    CHECK(again.schema_id == "prefix-v1");
}

TEST_CASE("training separates a linearly separable set") {
    Featurizer fz;
    auto data = separable_set();
    TrainConfig config;  // spec defaults
    VerifierParams params = train(data, fz, config);
    CHECK(accuracy(params, fz, data) >= 0.99);
    CHECK(params.training_meta.epochs == config.epochs);
    CHECK(std::isfinite(params.training_meta.final_loss));

    // scoring a positive-class prefix lands above 0.5
    const auto& positive = data[0];
    CHECK(score(params, positive.task, positive.prefix, fz) > 0.5);
}

TEST_CASE("training is deterministic and invariant under batch duplication") {
    Featurizer fz;
    auto data = separable_set();
    TrainConfig config;
    config.epochs = 50;

    VerifierParams a = train(data, fz, config);
    VerifierParams b = train(data, fz, config);
    CHECK(a.weights == b.weights);
    CHECK(a.bias == b.bias);

    auto doubled = data;
    doubled.insert(doubled.end(), data.begin(), data.end());
    VerifierParams c = train(doubled, fz, config);
    CHECK(c.weights == a.weights);
    CHECK(c.bias == a.bias);
    CHECK(c.training_meta.final_loss == a.training_meta.final_loss);
}

TEST_CASE("training rejects single-class data") {
    Featurizer fz;
    auto data = separable_set();
    std::vector<LabeledPrefix> positives;
    for (const auto& lp : data)
        if (lp.label == 1) positives.push_back(lp);
    CHECK_THROWS_AS(train(positives, fz, TrainConfig{}), SingleClass);
    CHECK_THROWS_AS(train({}, fz, TrainConfig{}), EmptyRecords);
}

TEST_CASE("score: logistic of the affine combination") {
    Featurizer fz;
    VerifierParams zero;
    zero.weights.assign(fz.dimension(), 0.0);
    zero.schema_id = fz.schema_id();
    TaskSpec task = fixtures::fold_chair_task();
    TracePrefix p = prefix(parse_solution(fixtures::fold_chair_reply_rollout2()), 1);
    CHECK(score(zero, task, p, fz) == doctest::Approx(0.5));

    // monotone in the bias
    double prev = 0.0;
    for (double bias : {-2.0, -1.0, 0.0, 1.0, 2.0}) {
        VerifierParams params = zero;
        params.bias = bias;
        double s = score(params, task, p, fz);
        CHECK(s >= prev);
        prev = s;
    }

    VerifierParams wrong = zero;
    wrong.schema_id = "other-schema";
    CHECK_THROWS_AS(score(wrong, task, p, fz), SchemaMismatch);
}

TEST_CASE("aggregate: worked example and edge cases") {
    std::vector<double> scores = {0.2, 0.8};
    CHECK(aggregate(scores, {Aggregation::Mean, 0.5}) == doctest::Approx(0.5));
    CHECK(aggregate(scores, {Aggregation::GeoMean, 0.5}) == doctest::Approx(0.4));
    CHECK(aggregate(scores, {Aggregation::Min, 0.5}) == doctest::Approx(0.2));
    CHECK(aggregate(scores, {Aggregation::Max, 0.5}) == doctest::Approx(0.8));
    CHECK(aggregate(scores, {Aggregation::Last, 0.5}) == doctest::Approx(0.8));

    for (auto variant : {Aggregation::Mean, Aggregation::GeoMean, Aggregation::Min,
                         Aggregation::Max, Aggregation::Last})
        CHECK(aggregate({0.37}, {variant, 0.5}) == 0.37);

    CHECK(aggregate({0.0, 0.9}, {Aggregation::GeoMean, 0.5}) == 0.0);
    CHECK_THROWS_AS(aggregate({}, {Aggregation::Mean, 0.5}), EmptyScores);
}

TEST_CASE("aggregate matches independent oracles and the AM-GM chain") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(0.01, 0.99);
    for (int trial = 0; trial < 1000; ++trial) {
        std::size_t n = 1 + rng() % 10;
        std::vector<double> scores(n);
        for (auto& s : scores) s = u(rng);

        double mean_oracle = 0.0;
        for (std::size_t i = n; i-- > 0;) mean_oracle += scores[i];
        mean_oracle /= static_cast<double>(n);
        double prod = 1.0;
        for (double s : scores) prod *= s;
        double geo_oracle = std::pow(prod, 1.0 / static_cast<double>(n));
        double lo = scores[0], hi = scores[0];
        for (double s : scores) {
            lo = std::min(lo, s);
            hi = std::max(hi, s);
        }

        double mean = aggregate(scores, {Aggregation::Mean, 0.5});
        double geo = aggregate(scores, {Aggregation::GeoMean, 0.5});
        CHECK(std::abs(mean - mean_oracle) <= 1e-12);
        CHECK(std::abs(geo - geo_oracle) <= 1e-12);
        CHECK(aggregate(scores, {Aggregation::Min, 0.5}) == lo);
        CHECK(aggregate(scores, {Aggregation::Max, 0.5}) == hi);
        CHECK(aggregate(scores, {Aggregation::Last, 0.5}) == scores.back());

        CHECK(lo <= geo + 1e-12);
        CHECK(geo <= mean + 1e-12);
        CHECK(mean <= hi + 1e-12);
    }
}

TEST_CASE("select_best: argmax with threshold and tie rule") {
    Solution dummy;
    std::vector<std::pair<Solution, std::vector<double>>> candidates = {
        {dummy, {0.9, 0.3}},
        {dummy, {0.1, 0.9}},
    };
    SelectionResult r = select_best(candidates, {Aggregation::Last, 0.5});
    CHECK(r.index == 1);
    CHECK(r.final_score == doctest::Approx(0.9));
    CHECK(r.accepted);

    SelectionResult tie = select_best_scores(std::vector<double>{0.4, 0.4, 0.4}, 0.5);
    CHECK(tie.index == 0);
    CHECK_FALSE(tie.accepted);

    CHECK_THROWS_AS(select_best({}, {Aggregation::Mean, 0.5}), EmptyCandidates);
}

TEST_CASE("argmax is invariant under strictly increasing transforms") {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        std::size_t n = 2 + rng() % 6;
        std::vector<double> aggregated(n);
        for (auto& s : aggregated) s = u(rng);

        std::vector<double> transformed(n);
        int pick = static_cast<int>(rng() % 3);
        double a = 0.5 + u(rng), b = u(rng);
        for (std::size_t i = 0; i < n; ++i) {
            double x = aggregated[i];
            transformed[i] = pick == 0   ? a * x + b
                             : pick == 1 ? x * x * x
                                         : 1.0 / (1.0 + std::exp(-(a * x + b)));
        }
        CHECK(select_best_scores(aggregated, 0.5).index ==
              select_best_scores(transformed, 0.5).index);
    }
}

TEST_CASE("judge: ternary verdicts parsed from the first numeric token") {
    TaskSpec task = fixtures::fold_chair_task();
    Subtask sub = parse_solution(fixtures::fold_chair_reply_rollout2()).subtasks[0];

    PromptBundle probe = build_judge_prompt(task, sub);
    FixtureBank bank;
    bank[MockModel::prompt_hash(probe)] = {"1", "0.5", "0", "looks fine", "0.7"};
    MockModel judge(bank, 0);

    CHECK(judge_subtask(judge, task, sub).value == 1.0);
    JudgeVerdict half = judge_subtask(judge, task, sub);
    CHECK(half.value == 0.5);
    CHECK(half.ternary());
    CHECK(judge_subtask(judge, task, sub).value == 0.0);
    CHECK_THROWS_AS(judge_subtask(judge, task, sub), UnparseableReply);
    JudgeVerdict loose = judge_subtask(judge, task, sub);  // non-ternary but in (0,1)
    CHECK(loose.value == doctest::Approx(0.7));
    CHECK_FALSE(loose.ternary());
}

TEST_CASE("judge prompt fills both template slots") {
    TaskSpec task = fixtures::fold_chair_task();
    Subtask sub = parse_solution(fixtures::fold_chair_reply_rollout2()).subtasks[0];
    PromptBundle bundle = build_judge_prompt(task, sub);
    CHECK(bundle.user.find("{task_description}") == std::string::npos);
    CHECK(bundle.user.find("{step_text}") == std::string::npos);
    CHECK(bundle.user.find(task.description) != std::string::npos);
    CHECK(bundle.user.find("grasp_object_link") != std::string::npos);
    CHECK(judge_prompt_template().find("{task_description}") != std::string::npos);
    CHECK(judge_prompt_template().find("{step_text}") != std::string::npos);
}

TEST_CASE("params file round trip") {
    VerifierParams params;
    params.weights = {0.25, -1.5, 3.0};
    params.bias = 0.125;
    params.schema_id = "prefix-v1";
    params.training_meta.epochs = 42;
    params.training_meta.final_loss = 0.0625;
    std::string path = "test_params_roundtrip.json";
    save_params(params, path);
    VerifierParams back = load_params(path);
    std::remove(path.c_str());
    CHECK(back.weights == params.weights);
    CHECK(back.bias == params.bias);
    CHECK(back.schema_id == params.schema_id);
    CHECK(back.training_meta.epochs == 42);
}
