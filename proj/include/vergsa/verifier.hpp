#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vergsa/model_io.hpp"
#include "vergsa/rollout.hpp"
#include "vergsa/trace.hpp"

namespace vergsa {

// ---------------------------------------------------------------------------
// Featurization
// ---------------------------------------------------------------------------

struct FeatureVector {
    std::vector<double> values;
    std::string schema_id;
};

/// Deterministic engineered features over (task, prefix). Schema prefix-v1:
///   [0] m, the prefix length
///   [1] fraction of subtasks passing the API allow-list
///   [2] total count of out-of-catalog identifiers
///   [3] fraction of referenced link/joint names present in the task's
///       articulation tree (1.0 when none are referenced)
///   [4] last subtask has a success condition (0/1)
///   [5] fraction of Primitive-variant subtasks
///   [6..21] hashed word-bigram bag of subtask names (16 buckets)
class Featurizer {
  public:
    explicit Featurizer(ApiCatalog catalog = default_catalog(),
                        std::set<std::string> stop_list = default_stop_list());

    static constexpr std::size_t kNameBuckets = 16;
    std::size_t dimension() const { return 6 + kNameBuckets; }
    const std::string& schema_id() const { return schema_id_; }

    FeatureVector featurize(const TaskSpec& task, const TracePrefix& prefix) const;

  private:
    ApiCatalog catalog_;
    std::set<std::string> stop_list_;
    std::string schema_id_ = "prefix-v1";
};

FeatureVector featurize(const TaskSpec& task, const TracePrefix& prefix, const ApiCatalog& catalog);

// ---------------------------------------------------------------------------
// Scorer
// ---------------------------------------------------------------------------

struct VerifierParams {
    std::vector<double> weights;
    double bias = 0.0;
    std::string schema_id;
    struct TrainingMeta {
        int epochs = 0;
        double final_loss = 0.0;
    } training_meta;
};

enum class Schedule { Cosine, Constant };

struct TrainConfig {
    double learning_rate = 0.05;
    double weight_decay = 0.005;
    int warmup_steps = 100;
    Schedule schedule = Schedule::Cosine;
    double focal_gamma = 2.0;
    // Unset: use the positive-class prevalence of the training data.
    std::optional<double> focal_alpha;
    int epochs = 2000;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Focal-weighted binary cross-entropy for one prediction.
///   label=1: -alpha   * (1-p)^gamma * log(p)
///   label=0: -(1-alpha) * p^gamma   * log(1-p)
/// With gamma=0, alpha=0.5 this is exactly half the standard BCE. Throws
/// DomainError for p outside (0,1); training clamps scores to
/// [1e-7, 1-1e-7] before the loss.
double focal_bce_loss(double p, int label, double gamma, double alpha);

/// Probability clamp applied before log terms.
inline constexpr double kProbEpsilon = 1e-7;

/// Mean focal loss plus (weight_decay/2)*||w||^2 over a featurized batch,
/// and its analytic gradient. Both reduce pairwise in a fixed order, so
/// results are deterministic and exactly invariant under whole-batch
/// duplication.
double batch_objective(const VerifierParams& params, std::span<const FeatureVector> features,
                       std::span<const int> labels, double gamma, double alpha,
                       double weight_decay);

struct Gradient {
    std::vector<double> weights;
    double bias = 0.0;
};

Gradient batch_gradient(const VerifierParams& params, std::span<const FeatureVector> features,
                        std::span<const int> labels, double gamma, double alpha,
                        double weight_decay);

/// Full-batch gradient descent with linear warmup followed by the configured
/// schedule. Deterministic for fixed data, config and seed. Throws
/// SingleClass when the data holds one label value, NonFinite on divergence.
VerifierParams train(const std::vector<LabeledPrefix>& data, const Featurizer& featurizer,
                     const TrainConfig& config);

/// Logistic score of the affine feature combination, in (0,1).
/// Throws SchemaMismatch when params and featurizer schemas differ.
double score(const VerifierParams& params, const TaskSpec& task, const TracePrefix& prefix,
             const Featurizer& featurizer);

// ---------------------------------------------------------------------------
// Aggregation and selection
// ---------------------------------------------------------------------------

enum class Aggregation { Mean, GeoMean, Min, Max, Last };

Aggregation aggregation_from_string(const std::string& s);
std::string to_string(Aggregation a);

struct AggregationStrategy {
    Aggregation variant = Aggregation::Mean;
    double threshold = 0.5;
};

/// Collapses per-subtask scores into one solution score. GeoMean of any zero
/// is zero. Throws EmptyScores.
double aggregate(const std::vector<double>& scores, const AggregationStrategy& strategy);

struct SelectionResult {
    std::size_t index = 0;
    double final_score = 0.0;
    bool accepted = false;
};

/// Argmax over aggregated candidate scores; ties break to the lowest index;
/// accepted iff the winner meets the threshold. Throws EmptyCandidates.
SelectionResult select_best(const std::vector<std::pair<Solution, std::vector<double>>>& candidates,
                            const AggregationStrategy& strategy);
SelectionResult select_best_scores(std::span<const double> aggregated, double threshold);

// ---------------------------------------------------------------------------
// LLM-as-a-Judge baseline
// ---------------------------------------------------------------------------

struct JudgeVerdict {
    double value = 0.0;  // expected ternary 0 / 0.5 / 1; other (0,1) values recorded verbatim
    std::string raw_reply;

    bool ternary() const { return value == 0.0 || value == 0.5 || value == 1.0; }
};

/// The judge prompt template with {task_description} and {step_text} slots.
const std::string& judge_prompt_template();

PromptBundle build_judge_prompt(const TaskSpec& task, const Subtask& sub);

/// Sends the filled template and parses the first numeric token of the
/// reply. Throws UnparseableReply when no leading numeric token exists.
JudgeVerdict judge_subtask(Model& judge, const TaskSpec& task, const Subtask& sub);

void save_params(const VerifierParams& params, const std::string& path);
VerifierParams load_params(const std::string& path);

}  // namespace vergsa
