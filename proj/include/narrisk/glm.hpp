#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "narrisk/features.hpp"

namespace narrisk {

enum class PenaltyKind { l2, l1 };

std::string_view to_string(PenaltyKind k);
std::optional<PenaltyKind> parse_penalty_kind(std::string_view s);

struct PenaltyConfig {
    PenaltyKind kind = PenaltyKind::l2;
    double c = 1.0;  ///< inverse regularization strength, multiplies the data loss
    double tolerance = 1e-8;
    int max_iterations = 1000;

    /// Throws std::invalid_argument unless C > 0, tolerance > 0 and
    /// max_iterations > 0.
    void check() const;
};

struct TrainingMetadata {
    std::string group;
    std::string language;
    std::uint64_t seed = 0;
    int iterations = 0;
    double optimality = 0.0;
};

struct TrainedModel {
    std::vector<std::string> feature_names;
    Eigen::VectorXd weights;
    double intercept = 0.0;
    PenaltyConfig penalty;
    TrainingMetadata metadata;

    /// Objective value after each solver iteration, starting with the
    /// initial point. Not serialized.
    std::vector<double> objective_trace;
};

struct TrainOptions {
    std::optional<Eigen::VectorXd> initial_weights;
    double initial_intercept = 0.0;
};

/// Minimize C * sum log(1 + exp(-s (w.x + b))) + penalty(w) on labeled rows.
/// L2 uses Newton with backtracking, L1 cyclic coordinate descent with
/// soft-thresholded Newton steps. Throws DomainError on single-class data
/// and ConvergenceError when the iteration budget runs out.
TrainedModel train(const FeatureMatrix& matrix, const PenaltyConfig& penalty, const TrainOptions& options = {});

/// Objective value of `model`'s parameters on `matrix`.
double objective(const TrainedModel& model, const FeatureMatrix& matrix);

/// Gradient of the training objective: one entry per weight, then the
/// intercept. For L1 the penalty contributes sign(w_j), or at w_j = 0 the
/// subgradient element of minimal norm.
Eigen::VectorXd loss_gradient(const TrainedModel& model, const FeatureMatrix& matrix);

/// Optimality measure used for the stopping rule (norm of loss_gradient).
double optimality(const TrainedModel& model, const FeatureMatrix& matrix);

/// sigmoid(w.x + b). Throws std::invalid_argument if names do not match.
double predict_proba(const TrainedModel& model, const FeatureVector& x);

/// 1 iff predict_proba >= threshold; threshold must lie in (0, 1).
int predict(const TrainedModel& model, const FeatureVector& x, double threshold = 0.5);

/// Row-wise predictions over a matrix with the model's columns.
std::vector<int> predict(const TrainedModel& model, const FeatureMatrix& matrix, double threshold = 0.5);
std::vector<int> predict(const TrainedModel& model, const Eigen::MatrixXd& values, double threshold = 0.5);

/// Flat "key value" text, version glm-v1, doubles round-trip exactly.
std::string serialize_model(const TrainedModel& model);
TrainedModel deserialize_model(std::string_view text);

// ---------------------------------------------------------------------------
// Keyword selection
// ---------------------------------------------------------------------------

/// Penalty schedule tried in order, from strongest to weakest.
inline constexpr std::array<double, 5> kKeywordSchedule{0.01, 0.1, 1.0, 10.0, 100.0};

struct KeywordSelection {
    KeywordSpec spec;
    std::vector<std::string> candidates;
    double chosen_c = 0.0;
    /// Fitted L1 weight of every candidate (and the story control) at chosen_c.
    std::vector<std::pair<std::string, double>> weights;
};

/// L1 settings used by select_keywords unless overridden.
PenaltyConfig l1_selection_defaults();

/// Fit L1 models over kKeywordSchedule and keep the k candidates with the
/// largest |weight| from the first fit that has at least k nonzero
/// candidate weights. Columns not named in `candidates` (the story control)
/// are always fitted and never count toward k.
KeywordSelection select_keywords(const std::vector<std::string>& candidates, const FeatureMatrix& matrix,
                                 Language language, std::size_t k = 10, PenaltyConfig base = l1_selection_defaults());


}  // namespace narrisk
