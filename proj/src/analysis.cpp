#include "narrisk/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "narrisk/error.hpp"
#include "narrisk/format.hpp"
#include "narrisk/random.hpp"

namespace narrisk {

ConfusionCounts confusion(std::span<const int> predictions, std::span<const int> labels) {
    if (predictions.size() != labels.size()) throw std::invalid_argument("predictions and labels differ in length");
    ConfusionCounts cc;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int p = predictions[i];
        const int y = labels[i];
        if ((p != 0 && p != 1) || (y != 0 && y != 1)) throw std::invalid_argument("values must be 0 or 1");
        if (p == 1 && y == 1) ++cc.tp;
        else if (p == 1) ++cc.fp;
        else if (y == 0) ++cc.tn;
        else ++cc.fn;
    }
    return cc;
}

double balanced_accuracy(const ConfusionCounts& cc) {
    if (cc.tp + cc.fn == 0) throw DomainError("balanced accuracy undefined: no positive labels");
    if (cc.tn + cc.fp == 0) throw DomainError("balanced accuracy undefined: no negative labels");
    const double tpr = static_cast<double>(cc.tp) / static_cast<double>(cc.tp + cc.fn);
    const double tnr = static_cast<double>(cc.tn) / static_cast<double>(cc.tn + cc.fp);
    return 0.5 * (tpr + tnr);
}

double f1(const ConfusionCounts& cc) {
    if (cc.tp + cc.fp == 0 && cc.tp + cc.fn == 0) {
        throw DomainError("F1 undefined: no positive labels and no positive predictions");
    }
    const double tp2 = 2.0 * static_cast<double>(cc.tp);
    return tp2 / (tp2 + static_cast<double>(cc.fp) + static_cast<double>(cc.fn));
}

double balanced_accuracy_metric(std::span<const int> predictions, std::span<const int> labels) {
    return balanced_accuracy(confusion(predictions, labels));
}

std::string_view to_string(CoefficientSign s) {
    switch (s) {
        case CoefficientSign::positive: return "positive";
        case CoefficientSign::negative: return "negative";
        case CoefficientSign::zero: return "zero";
    }
    return "zero";
}

CoefficientSign coefficient_sign(double weight) {
    if (std::abs(weight) < kZeroWeight) return CoefficientSign::zero;
    return weight > 0.0 ? CoefficientSign::positive : CoefficientSign::negative;
}

namespace {

constexpr std::size_t kMaxExhaustive = 5040;

bool enumerable(std::size_t n) {
    std::size_t f = 1;
    for (std::size_t k = 2; k <= n; ++k) {
        f *= k;
        if (f > kMaxExhaustive) return false;
    }
    return true;
}

void summarize(PfiResult& r) {
    const double n = static_cast<double>(r.drops.size());
    r.mean_drop = std::accumulate(r.drops.begin(), r.drops.end(), 0.0) / n;
    double ss = 0.0;
    for (double d : r.drops) ss += (d - r.mean_drop) * (d - r.mean_drop);
    r.std_drop = std::sqrt(ss / n);
}

}  // namespace

std::vector<PfiResult> permutation_importance(const TrainedModel& model, const FeatureMatrix& matrix,
                                              const Metric& metric, const PfiOptions& options) {
    if (options.repetitions < 1) throw std::invalid_argument("repetitions must be at least 1");
    const FeatureMatrix data = matrix.labeled_only();
    if (data.rows() < 2) throw DomainError("permutation importance needs at least two labeled rows");
    if (data.names != model.feature_names) throw std::invalid_argument("feature names do not match the model");

    std::vector<int> labels(static_cast<std::size_t>(data.rows()));
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = *data.ri[i];

    const double baseline = metric(predict(model, data.values), labels);
    const auto n = static_cast<std::size_t>(data.rows());
    const bool exhaustive = options.exhaustive && enumerable(n);

    std::vector<PfiResult> results(data.names.size());
    auto score_feature = [&](std::size_t j) {
        PfiResult& res = results[j];
        res.feature_name = data.names[j];
        res.baseline_score = baseline;
        res.coefficient_sign = coefficient_sign(model.weights[static_cast<Eigen::Index>(j)]);

        Eigen::MatrixXd corrupted = data.values;
        const auto col = static_cast<Eigen::Index>(j);
        std::vector<std::size_t> order(n);
        auto rescore = [&] {
            for (std::size_t i = 0; i < n; ++i) {
                corrupted(static_cast<Eigen::Index>(i), col) = data.values(static_cast<Eigen::Index>(order[i]), col);
            }
            res.drops.push_back(baseline - metric(predict(model, corrupted), labels));
        };

        std::iota(order.begin(), order.end(), std::size_t{0});
        if (exhaustive) {
            do {
                rescore();
            } while (std::next_permutation(order.begin(), order.end()));
        } else {
            for (int r = 0; r < options.repetitions; ++r) {
                std::iota(order.begin(), order.end(), std::size_t{0});
                random::Generator gen(random::derive_seed(options.master_seed, j, static_cast<std::uint64_t>(r)));
                gen.shuffle(std::span<std::size_t>(order));
                rescore();
            }
        }
        summarize(res);
    };

    const std::size_t features = results.size();
    const std::size_t jobs = std::clamp<std::size_t>(options.jobs, 1, std::max<std::size_t>(features, 1));
    if (jobs == 1) {
        for (std::size_t j = 0; j < features; ++j) score_feature(j);
    } else {
        std::vector<std::exception_ptr> errors(jobs);
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < jobs; ++t) {
            pool.emplace_back([&, t] {
                try {
                    for (std::size_t j = t; j < features; j += jobs) score_feature(j);
                } catch (...) {
                    errors[t] = std::current_exception();
                }
            });
        }
        for (auto& th : pool) th.join();
        for (auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }
    }
    return results;
}

std::vector<PfiResult> ranked(std::vector<PfiResult> results) {
    std::stable_sort(results.begin(), results.end(),
                     [](const PfiResult& a, const PfiResult& b) { return a.mean_drop > b.mean_drop; });
    return results;
}

std::string pfi_to_csv(const std::vector<PfiResult>& results) {
    std::string out = "feature,mean_drop,std_drop,coefficient_sign,baseline_score,R\n";
    for (const auto& r : results) {
        out += r.feature_name + "," + shortest(r.mean_drop) + "," + shortest(r.std_drop) + "," +
               std::string(to_string(r.coefficient_sign)) + "," + shortest(r.baseline_score) + "," +
               std::to_string(r.drops.size()) + "\n";
    }
    return out;
}

double quantile_sorted(std::span<const double> sorted, double p) {
    if (sorted.empty()) throw DomainError("quantile of an empty sample");
    const double pos = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

BoxStats box_stats(std::span<const double> values) {
    if (values.empty()) throw DomainError("box statistics of an empty sample");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());

    BoxStats b;
    b.q1 = quantile_sorted(sorted, 0.25);
    b.median = quantile_sorted(sorted, 0.5);
    b.q3 = quantile_sorted(sorted, 0.75);
    const double iqr = b.q3 - b.q1;
    const double low_fence = b.q1 - 1.5 * iqr;
    const double high_fence = b.q3 + 1.5 * iqr;

    b.whisker_low = b.q1;
    b.whisker_high = b.q3;
    bool any_inlier = false;
    for (double v : sorted) {
        if (v < low_fence || v > high_fence) {
            b.outliers.push_back(v);
            continue;
        }
        if (!any_inlier) b.whisker_low = v;
        b.whisker_high = v;
        any_inlier = true;
    }
    b.mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(sorted.size());
    return b;
}

}  // namespace narrisk
