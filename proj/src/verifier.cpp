#include "vergsa/verifier.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "vergsa/scripted_env.hpp"

namespace vergsa {

// ---------------------------------------------------------------------------
// Featurization
// ---------------------------------------------------------------------------

Featurizer::Featurizer(ApiCatalog catalog, std::set<std::string> stop_list)
    : catalog_(std::move(catalog)), stop_list_(std::move(stop_list)) {
    catalog_.validate();
}

namespace {

std::vector<std::string> name_words(const std::string& name) {
    std::vector<std::string> words;
    std::string cur;
    for (char c : name) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        } else if (!cur.empty()) {
            words.push_back(cur);
            cur.clear();
        }
    }
    if (!cur.empty()) words.push_back(cur);
    return words;
}

}  // namespace

FeatureVector Featurizer::featurize(const TaskSpec& task, const TracePrefix& prefix) const {
    const std::size_t m = prefix.subtasks.size();
    FeatureVector out;
    out.schema_id = schema_id_;
    out.values.assign(dimension(), 0.0);
    if (m == 0) return out;

    std::size_t valid = 0;
    std::size_t offending_total = 0;
    std::size_t primitives = 0;
    std::size_t referenced = 0, present = 0;
    for (const auto& sub : prefix.subtasks) {
        auto report = validate_apis(sub.supervision, catalog_, stop_list_);
        if (report.ok) ++valid;
        offending_total += report.offending.size();
        if (sub.supervision.variant == SupervisionVariant::Primitive) ++primitives;

        auto [links, joints] = referenced_links_joints(sub.supervision.code);
        for (const auto& l : links) {
            ++referenced;
            if (task.articulation_tree.has_link(l)) ++present;
        }
        for (const auto& j : joints) {
            ++referenced;
            if (task.articulation_tree.has_joint(j)) ++present;
        }
    }

    out.values[0] = static_cast<double>(m);
    out.values[1] = static_cast<double>(valid) / static_cast<double>(m);
    out.values[2] = static_cast<double>(offending_total);
    out.values[3] =
        referenced == 0 ? 1.0 : static_cast<double>(present) / static_cast<double>(referenced);
    out.values[4] =
        code_text::has_success_assignment(prefix.subtasks.back().supervision.code) ? 1.0 : 0.0;
    out.values[5] = static_cast<double>(primitives) / static_cast<double>(m);

    for (const auto& sub : prefix.subtasks) {
        auto words = name_words(sub.name);
        std::string prev = "^";
        for (const auto& w : words) {
            std::size_t bucket = code_text::fnv1a64(prev + " " + w) % kNameBuckets;
            out.values[6 + bucket] += 1.0;
            prev = w;
        }
    }
    return out;
}

FeatureVector featurize(const TaskSpec& task, const TracePrefix& prefix, const ApiCatalog& catalog) {
    return Featurizer(catalog).featurize(task, prefix);
}

// ---------------------------------------------------------------------------
// Loss and training
// ---------------------------------------------------------------------------

void TrainConfig::validate() const {
    if (learning_rate <= 0.0) throw InvalidSpec("learning_rate must be positive");
    if (epochs < 1) throw InvalidSpec("epochs must be >= 1");
    if (weight_decay < 0.0) throw InvalidSpec("weight_decay must be >= 0");
    if (focal_gamma < 0.0) throw InvalidSpec("focal_gamma must be >= 0");
    if (focal_alpha && (*focal_alpha <= 0.0 || *focal_alpha >= 1.0))
        throw InvalidSpec("focal_alpha must lie in (0,1)");
}

double focal_bce_loss(double p, int label, double gamma, double alpha) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("focal loss defined for p in (0,1)");
    if (label == 1) return -alpha * std::pow(1.0 - p, gamma) * std::log(p);
    return -(1.0 - alpha) * std::pow(p, gamma) * std::log1p(-p);
}

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double clamp_prob(double p) {
    return std::min(1.0 - kProbEpsilon, std::max(kProbEpsilon, p));
}

// dLoss/dz at p = sigmoid(z). Zero in the clamped saturation region, where
// the objective is locally flat.
double focal_grad_z(double p_raw, int label, double gamma, double alpha) {
    if (p_raw <= kProbEpsilon || p_raw >= 1.0 - kProbEpsilon) return 0.0;
    double p = p_raw;
    if (label == 1)
        return alpha * gamma * p * std::pow(1.0 - p, gamma) * std::log(p) -
               alpha * std::pow(1.0 - p, gamma + 1.0);
    return -(1.0 - alpha) * gamma * std::pow(p, gamma) * (1.0 - p) * std::log1p(-p) +
           (1.0 - alpha) * std::pow(p, gamma + 1.0);
}

// Midpoint-splitting sum over rows[lo, hi). The balanced shape makes the
// reduction order fixed and the total exactly double under whole-batch
// duplication, which training determinism tests rely on.
std::vector<double> pairwise_rows(const std::vector<std::vector<double>>& rows, std::size_t lo,
                                  std::size_t hi) {
    if (hi - lo == 1) return rows[lo];
    std::size_t mid = lo + (hi - lo) / 2;
    std::vector<double> a = pairwise_rows(rows, lo, mid);
    std::vector<double> b = pairwise_rows(rows, mid, hi);
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    return a;
}

double affine(const VerifierParams& params, const FeatureVector& f) {
    double z = params.bias;
    for (std::size_t i = 0; i < params.weights.size() && i < f.values.size(); ++i)
        z += params.weights[i] * f.values[i];
    return z;
}

}  // namespace

double batch_objective(const VerifierParams& params, std::span<const FeatureVector> features,
                       std::span<const int> labels, double gamma, double alpha,
                       double weight_decay) {
    if (features.empty()) throw EmptyRecords("empty batch");
    std::vector<std::vector<double>> rows(features.size());
    for (std::size_t i = 0; i < features.size(); ++i) {
        double p = clamp_prob(sigmoid(affine(params, features[i])));
        rows[i] = {focal_bce_loss(p, labels[i], gamma, alpha)};
    }
    double mean = pairwise_rows(rows, 0, rows.size())[0] / static_cast<double>(rows.size());
    double decay = 0.0;
    for (double w : params.weights) decay += w * w;
    return mean + 0.5 * weight_decay * decay;
}

Gradient batch_gradient(const VerifierParams& params, std::span<const FeatureVector> features,
                        std::span<const int> labels, double gamma, double alpha,
                        double weight_decay) {
    if (features.empty()) throw EmptyRecords("empty batch");
    const std::size_t dim = params.weights.size();
    std::vector<std::vector<double>> rows(features.size());
    for (std::size_t i = 0; i < features.size(); ++i) {
        double p = sigmoid(affine(params, features[i]));
        double gz = focal_grad_z(p, labels[i], gamma, alpha);
        std::vector<double> row(dim + 1, 0.0);
        for (std::size_t d = 0; d < dim && d < features[i].values.size(); ++d)
            row[d] = gz * features[i].values[d];
        row[dim] = gz;
        rows[i] = std::move(row);
    }
    std::vector<double> total = pairwise_rows(rows, 0, rows.size());
    Gradient g;
    g.weights.resize(dim);
    double n = static_cast<double>(rows.size());
    for (std::size_t d = 0; d < dim; ++d)
        g.weights[d] = total[d] / n + weight_decay * params.weights[d];
    g.bias = total[dim] / n;
    return g;
}

namespace {

double lr_at(const TrainConfig& cfg, int step) {
    if (cfg.warmup_steps > 0 && step < cfg.warmup_steps)
        return cfg.learning_rate * static_cast<double>(step + 1) /
               static_cast<double>(cfg.warmup_steps);
    if (cfg.schedule == Schedule::Constant) return cfg.learning_rate;
    int span = cfg.epochs - cfg.warmup_steps;
    if (span <= 0) return cfg.learning_rate;
    double progress = static_cast<double>(step - cfg.warmup_steps) / static_cast<double>(span);
    return cfg.learning_rate * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

}  // namespace

VerifierParams train(const std::vector<LabeledPrefix>& data, const Featurizer& featurizer,
                     const TrainConfig& config) {
    config.validate();
    if (data.empty()) throw EmptyRecords("training data is empty");

    std::size_t positives = 0;
    for (const auto& lp : data)
        if (lp.label == 1) ++positives;
    if (positives == 0 || positives == data.size())
        throw SingleClass("training data holds a single label value");

    std::vector<FeatureVector> features;
    std::vector<int> labels;
    features.reserve(data.size());
    labels.reserve(data.size());
    for (const auto& lp : data) {
        features.push_back(featurizer.featurize(lp.task, lp.prefix));
        labels.push_back(lp.label);
    }

    double alpha = config.focal_alpha.value_or(static_cast<double>(positives) /
                                               static_cast<double>(data.size()));

    VerifierParams params;
    params.weights.assign(featurizer.dimension(), 0.0);
    params.bias = 0.0;
    params.schema_id = featurizer.schema_id();

    for (int step = 0; step < config.epochs; ++step) {
        Gradient g = batch_gradient(params, features, labels, config.focal_gamma, alpha,
                                    config.weight_decay);
        double lr = lr_at(config, step);
        for (std::size_t d = 0; d < params.weights.size(); ++d) {
            params.weights[d] -= lr * g.weights[d];
            if (!std::isfinite(params.weights[d])) throw NonFinite("weight diverged during training");
        }
        params.bias -= lr * g.bias;
        if (!std::isfinite(params.bias)) throw NonFinite("bias diverged during training");
    }

    params.training_meta.epochs = config.epochs;
    params.training_meta.final_loss = batch_objective(params, features, labels, config.focal_gamma,
                                                      alpha, config.weight_decay);
    if (!std::isfinite(params.training_meta.final_loss))
        throw NonFinite("loss diverged during training");
    return params;
}

double score(const VerifierParams& params, const TaskSpec& task, const TracePrefix& prefix,
             const Featurizer& featurizer) {
    if (params.schema_id != featurizer.schema_id())
        throw SchemaMismatch("params schema '" + params.schema_id + "' != featurizer schema '" +
                             featurizer.schema_id() + "'");
    FeatureVector f = featurizer.featurize(task, prefix);
    return sigmoid(affine(params, f));
}

// ---------------------------------------------------------------------------
// Aggregation and selection
// ---------------------------------------------------------------------------

Aggregation aggregation_from_string(const std::string& s) {
    if (s == "mean") return Aggregation::Mean;
    if (s == "geomean") return Aggregation::GeoMean;
    if (s == "min") return Aggregation::Min;
    if (s == "max") return Aggregation::Max;
    if (s == "last") return Aggregation::Last;
    throw ConfigError("unknown aggregation strategy: " + s);
}

std::string to_string(Aggregation a) {
    switch (a) {
        case Aggregation::Mean:
            return "mean";
        case Aggregation::GeoMean:
            return "geomean";
        case Aggregation::Min:
            return "min";
        case Aggregation::Max:
            return "max";
        case Aggregation::Last:
            return "last";
    }
    return "mean";
}

double aggregate(const std::vector<double>& scores, const AggregationStrategy& strategy) {
    if (scores.empty()) throw EmptyScores("aggregate over an empty score list");
    if (scores.size() == 1) return scores.front();
    switch (strategy.variant) {
        case Aggregation::Mean: {
            double acc = 0.0;
            for (double s : scores) acc += s;
            return acc / static_cast<double>(scores.size());
        }
        case Aggregation::GeoMean: {
            double acc = 0.0;
            for (double s : scores) {
                if (s == 0.0) return 0.0;
                acc += std::log(s);
            }
            return std::exp(acc / static_cast<double>(scores.size()));
        }
        case Aggregation::Min:
            return *std::min_element(scores.begin(), scores.end());
        case Aggregation::Max:
            return *std::max_element(scores.begin(), scores.end());
        case Aggregation::Last:
            return scores.back();
    }
    throw EmptyScores("unreachable");
}

SelectionResult select_best_scores(std::span<const double> aggregated, double threshold) {
    if (aggregated.empty()) throw EmptyCandidates("selection over an empty candidate list");
    std::size_t best = 0;
    for (std::size_t i = 1; i < aggregated.size(); ++i)
        if (aggregated[i] > aggregated[best]) best = i;
    return {best, aggregated[best], aggregated[best] >= threshold};
}

SelectionResult select_best(const std::vector<std::pair<Solution, std::vector<double>>>& candidates,
                            const AggregationStrategy& strategy) {
    if (candidates.empty()) throw EmptyCandidates("selection over an empty candidate list");
    std::vector<double> aggregated;
    aggregated.reserve(candidates.size());
    for (const auto& [sol, scores] : candidates) aggregated.push_back(aggregate(scores, strategy));
    return select_best_scores(aggregated, strategy.threshold);
}

// ---------------------------------------------------------------------------
// LLM-as-a-Judge
// ---------------------------------------------------------------------------

const std::string& judge_prompt_template() {
    static const std::string kTemplate =
        R"(You are an expert in robot task planning and execution. Evaluate the following subtask within the given task context
and determine if it contains any errors based on the validation issues listed below.
Task context: {task_description}
Subtasks: {step_text}
## Validation Issues to Check
1. for **Primitive Subtasks**:
   - Missing `rgbs, final_state` assignment
   - Missing `success` condition
2. for **Reward-Based Subtasks**:
   - Missing reward components
   - Missing success condition
   - Improperly weighted reward components
3. **General Issues**:
   - Incorrect object/link/joint naming
   - Improper API usage or use functions not in the allowed APIs.
   - Any grammatical or logical errors
4. You do not have to:
    - check for the completness of the subtasks,since many subtasks are partial.
---
## Allowed APIs
For Primitive Subtasks:
- `grasp_object(self, object_name)`
- `grasp_object_link(self, object_name, link_name)`
- `release_grasp(self)`
- `check_grasped(self, object_name, link_name=None)`
For Reward-Based Subtasks:
- `get_eef_pos(self)`
- `get_position(self, object_name)`
- `get_link_state(self, object_name, link_name)`
- `get_joint_state(self, object_name, joint_name)`
- `get_joint_limit(self, object_name, joint_name)`
- `get_bounding_box(self, object_name)`
- `get_bounding_box_link(self, object_name, link_name)`
- `in_bbox(self, position, bbox_low, bbox_high)`
For Both:
- Standard Python libraries (numpy, etc.)
- Mathematical operations and control flow
---
## Output Instructions
Output a single number:
- `1` if the subtask has no errors based on the validation issues.
- `0` if the subtask contains any errors from the validation issues.
- Use `0.5` only if you are genuinely uncertain (e.g., insufficient information to judge).
Avoid intermediate values (e.g., 0.85) unless absolutely necessary; prefer outputs close to 0 or 1.
Output only the number, no text or explanations.
)";
    return kTemplate;
}

namespace {

void replace_all(std::string& text, const std::string& slot, const std::string& value) {
    std::size_t pos = 0;
    while ((pos = text.find(slot, pos)) != std::string::npos) {
        text.replace(pos, slot.size(), value);
        pos += value.size();
    }
}

}  // namespace

PromptBundle build_judge_prompt(const TaskSpec& task, const Subtask& sub) {
    std::string filled = judge_prompt_template();
    std::string step_text = "subtask: " + sub.name + "\n" + render_supervision(sub.supervision);
    replace_all(filled, "{task_description}", task.description.empty() ? task.name : task.description);
    replace_all(filled, "{step_text}", step_text);
    PromptBundle bundle;
    bundle.user = std::move(filled);
    return bundle;
}

JudgeVerdict judge_subtask(Model& judge, const TaskSpec& task, const Subtask& sub) {
    PromptBundle bundle = build_judge_prompt(task, sub);
    JudgeVerdict verdict;
    verdict.raw_reply = judge.generate(bundle);

    std::istringstream in(verdict.raw_reply);
    std::string token;
    while (in >> token) {
        while (!token.empty() && (token.back() == ',' || token.back() == '.' || token.back() == ';'))
            token.pop_back();
        try {
            std::size_t used = 0;
            double value = std::stod(token, &used);
            if (used != token.size()) continue;
            if (value < 0.0 || value > 1.0)
                throw UnparseableReply("judge value " + token + " outside [0,1]");
            verdict.value = value;
            return verdict;
        } catch (const std::invalid_argument&) {
        } catch (const std::out_of_range&) {
        }
    }
    throw UnparseableReply("no numeric token in judge reply: " + verdict.raw_reply);
}

void save_params(const VerifierParams& params, const std::string& path) {
    nlohmann::json j = {{"schema_id", params.schema_id},
                        {"weights", params.weights},
                        {"bias", params.bias},
                        {"training_meta",
                         {{"epochs", params.training_meta.epochs},
                          {"final_loss", params.training_meta.final_loss}}}};
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write params file: " + path);
    out << j.dump(2) << '\n';
}

VerifierParams load_params(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open params file: " + path);
    nlohmann::json j;
    in >> j;
    VerifierParams params;
    params.schema_id = j.at("schema_id").get<std::string>();
    params.weights = j.at("weights").get<std::vector<double>>();
    params.bias = j.at("bias").get<double>();
    if (j.contains("training_meta")) {
        params.training_meta.epochs = j.at("training_meta").value("epochs", 0);
        params.training_meta.final_loss = j.at("training_meta").value("final_loss", 0.0);
    }
    return params;
}

}  // namespace vergsa
