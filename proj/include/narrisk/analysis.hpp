#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "narrisk/features.hpp"
#include "narrisk/glm.hpp"

namespace narrisk {

struct ConfusionCounts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;

    std::size_t total() const noexcept { return tp + fp + tn + fn; }
    bool operator==(const ConfusionCounts&) const = default;
};

/// Positive class is RI = 1. Throws std::invalid_argument on length
/// mismatch or values outside {0, 1}.
ConfusionCounts confusion(std::span<const int> predictions, std::span<const int> labels);

/// Mean of the two per-class recalls. Throws DomainError if a class is absent.
double balanced_accuracy(const ConfusionCounts& cc);

/// 2tp / (2tp + fp + fn); 0 when tp = 0 but errors exist. Throws
/// DomainError with no positive labels and no positive predictions.
double f1(const ConfusionCounts& cc);

/// Score of predictions against labels; higher is better.
using Metric = std::function<double(std::span<const int> predictions, std::span<const int> labels)>;

double balanced_accuracy_metric(std::span<const int> predictions, std::span<const int> labels);

enum class CoefficientSign { positive, negative, zero };

std::string_view to_string(CoefficientSign s);

/// |w| below this renders as zero.
inline constexpr double kZeroWeight = 1e-12;

CoefficientSign coefficient_sign(double weight);

struct PfiResult {
    std::string feature_name;
    double baseline_score = 0.0;
    std::vector<double> drops;  ///< baseline - permuted score, per repetition
    double mean_drop = 0.0;
    double std_drop = 0.0;      ///< population standard deviation of drops
    CoefficientSign coefficient_sign = CoefficientSign::zero;
};

struct PfiOptions {
    int repetitions = 100;
    std::uint64_t master_seed = 0;
    /// Enumerate every row permutation instead of sampling when n! <= 5040.
    bool exhaustive = false;
    unsigned jobs = 1;
};

/// Shuffle each column in turn and record the score drop. Repetition r of
/// feature j uses a generator seeded from (master_seed, j, r), so results
/// do not depend on `jobs`.
std::vector<PfiResult> permutation_importance(const TrainedModel& model, const FeatureMatrix& matrix,
                                              const Metric& metric = balanced_accuracy_metric,
                                              const PfiOptions& options = {});

/// Results sorted by mean drop, largest first; ties keep feature order.
std::vector<PfiResult> ranked(std::vector<PfiResult> results);

/// CSV with columns feature, mean_drop, std_drop, coefficient_sign,
/// baseline_score, R.
std::string pfi_to_csv(const std::vector<PfiResult>& results);

struct BoxStats {
    double median = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
    double whisker_low = 0.0;
    double whisker_high = 0.0;
    std::vector<double> outliers;  ///< ascending
    double mean = 0.0;
};

/// Quartiles by linear interpolation between order statistics (inclusive
/// method); outliers lie beyond 1.5 IQR from the quartiles.
BoxStats box_stats(std::span<const double> values);

/// Inclusive-method quantile of sorted data, p in [0, 1].
double quantile_sorted(std::span<const double> sorted, double p);

}  // namespace narrisk
