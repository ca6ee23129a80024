#include "narrisk/glm.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include "narrisk/error.hpp"
#include "narrisk/format.hpp"
#include "narrisk/logistic.hpp"

namespace narrisk {

namespace lg = logistic;

std::string_view to_string(PenaltyKind k) { return k == PenaltyKind::l2 ? "l2" : "l1"; }

std::optional<PenaltyKind> parse_penalty_kind(std::string_view s) {
    if (s == "l2") return PenaltyKind::l2;
    if (s == "l1") return PenaltyKind::l1;
    return std::nullopt;
}

void PenaltyConfig::check() const {
    if (!(c > 0.0) || !std::isfinite(c)) throw std::invalid_argument("penalty C must be positive and finite");
    if (!(tolerance > 0.0)) throw std::invalid_argument("solver tolerance must be positive");
    if (max_iterations <= 0) throw std::invalid_argument("max_iterations must be positive");
}

PenaltyConfig l1_selection_defaults() {
    PenaltyConfig p;
    p.kind = PenaltyKind::l1;
    return p;
}

namespace {

double penalty_value(PenaltyKind kind, const Eigen::VectorXd& w) {
    return kind == PenaltyKind::l2 ? 0.5 * w.squaredNorm() : w.lpNorm<1>();
}

double objective_at(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& w, double b,
                    const PenaltyConfig& p) {
    return lg::data_loss(lg::margins(x, w, b), y, p.c) + penalty_value(p.kind, w);
}

// Smooth-part gradient with respect to (w, b).
Eigen::VectorXd smooth_gradient(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                                double b, double c) {
    const Eigen::VectorXd r = lg::residuals(lg::margins(x, w, b), y, c);
    Eigen::VectorXd g(w.size() + 1);
    g.head(w.size()) = x.transpose() * r;
    g[w.size()] = r.sum();
    return g;
}

// Full gradient for L2; for L1 the minimal-norm element of the subdifferential.
Eigen::VectorXd objective_gradient(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                                   double b, const PenaltyConfig& p) {
    Eigen::VectorXd g = smooth_gradient(x, y, w, b, p.c);
    const Eigen::Index d = w.size();
    if (p.kind == PenaltyKind::l2) {
        g.head(d) += w;
        return g;
    }
    for (Eigen::Index j = 0; j < d; ++j) {
        if (w[j] > 0.0) {
            g[j] += 1.0;
        } else if (w[j] < 0.0) {
            g[j] -= 1.0;
        } else {
            const double shrunk = std::max(std::abs(g[j]) - 1.0, 0.0);
            g[j] = std::copysign(shrunk, g[j]);
        }
    }
    return g;
}

void require_two_classes(const Eigen::VectorXd& y) {
    const double positives = y.sum();
    if (positives < 0.5 || positives > static_cast<double>(y.size()) - 0.5) {
        throw DomainError("training data contains a single class");
    }
}

// Decrease of f below the rounding floor of its evaluation.
bool at_noise_floor(double predicted_decrease, double f) {
    return std::abs(predicted_decrease) <= 1e-13 * (1.0 + std::abs(f));
}

struct SolverState {
    Eigen::VectorXd w;
    double b = 0.0;
    int iterations = 0;
    double optimality = 0.0;
    std::vector<double> trace;
};

SolverState newton_l2(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const PenaltyConfig& p, SolverState s) {
    const Eigen::Index n = x.rows();
    const Eigen::Index d = x.cols();
    Eigen::MatrixXd xa(n, d + 1);
    xa << x, Eigen::VectorXd::Ones(n);

    double f = objective_at(x, y, s.w, s.b, p);
    s.trace.push_back(f);
    for (;;) {
        const Eigen::VectorXd g = objective_gradient(x, y, s.w, s.b, p);
        s.optimality = g.norm();
        if (s.optimality <= p.tolerance) return s;
        if (s.iterations >= p.max_iterations) {
            throw ConvergenceError("L2 Newton solver did not converge within " + std::to_string(p.max_iterations) +
                                       " iterations (gradient norm " + shortest(s.optimality) + ")",
                                   s.optimality, s.iterations);
        }

        const Eigen::VectorXd z = lg::margins(x, s.w, s.b);
        const Eigen::VectorXd curv = lg::curvature(z, p.c);
        Eigen::MatrixXd h = xa.transpose() * curv.asDiagonal() * xa;
        h.diagonal().head(d).array() += 1.0;
        const Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
        Eigen::VectorXd step = ldlt.solve(-g);
        double slope = g.dot(step);
        if (ldlt.info() != Eigen::Success || !step.allFinite() || slope >= 0.0) {
            step = -g;
            slope = -g.squaredNorm();
        }

        double t = 1.0;
        bool accepted = false;
        Eigen::VectorXd w_new;
        double b_new = 0.0;
        double f_new = f;
        for (int halvings = 0; halvings < 60; ++halvings, t *= 0.5) {
            w_new = s.w + t * step.head(d);
            b_new = s.b + t * step[d];
            f_new = objective_at(x, y, w_new, b_new, p);
            if (f_new <= f + 1e-4 * t * slope) {
                accepted = true;
                break;
            }
            // Full Newton steps whose decrease is lost in rounding are taken
            // as long as they shrink the gradient.
            if (halvings == 0 && at_noise_floor(slope, f) &&
                objective_gradient(x, y, w_new, b_new, p).norm() < s.optimality) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            throw ConvergenceError("L2 line search failed (gradient norm " + shortest(s.optimality) + ")",
                                   s.optimality, s.iterations);
        }
        s.w = std::move(w_new);
        s.b = b_new;
        f = std::min(f, f_new);
        s.trace.push_back(f_new);
        ++s.iterations;
    }
}

// Coordinate descent for C * loss + |w|_1 with per-coordinate Newton steps
// and backtracking on the composite objective.
class L1Solver {
public:
    L1Solver(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const PenaltyConfig& p)
        : x_(x), y_(y), p_(p), sign_(y.size()) {
        for (Eigen::Index i = 0; i < y.size(); ++i) sign_[i] = y[i] > 0.5 ? 1.0 : -1.0;
    }

    SolverState run(SolverState s) {
        z_ = lg::margins(x_, s.w, s.b);
        s.trace.push_back(objective_at(x_, y_, s.w, s.b, p_));
        for (;;) {
            s.optimality = objective_gradient(x_, y_, s.w, s.b, p_).norm();
            if (s.optimality <= p_.tolerance) return s;
            if (s.iterations >= p_.max_iterations) {
                throw ConvergenceError("L1 coordinate descent did not converge within " +
                                           std::to_string(p_.max_iterations) + " sweeps (subgradient norm " +
                                           shortest(s.optimality) + ")",
                                       s.optimality, s.iterations);
            }
            for (Eigen::Index j = 0; j < x_.cols(); ++j) update_weight(s.w[j], x_.col(j));
            update_intercept(s.b);
            // Resynchronize margins to keep incremental drift out of z.
            z_ = lg::margins(x_, s.w, s.b);
            refine_on_support(s.w, s.b);
            s.trace.push_back(objective_at(x_, y_, s.w, s.b, p_));
            ++s.iterations;
        }
    }

private:
    // Newton step restricted to the nonzero weights and the intercept, where
    // the penalty is linear. Skipped while some zero weight still violates
    // its optimality condition; the step stops at the first sign change.
    void refine_on_support(Eigen::VectorXd& w, double& b) {
        const Eigen::VectorXd smooth = smooth_gradient(x_, y_, w, b, p_.c);
        std::vector<Eigen::Index> support;
        for (Eigen::Index j = 0; j < w.size(); ++j) {
            if (w[j] != 0.0) {
                support.push_back(j);
            } else if (std::abs(smooth[j]) > 1.0) {
                return;
            }
        }
        const auto k = static_cast<Eigen::Index>(support.size());
        const Eigen::Index n = x_.rows();
        Eigen::MatrixXd xs(n, k + 1);
        Eigen::VectorXd g(k + 1);
        for (Eigen::Index a = 0; a < k; ++a) {
            const Eigen::Index j = support[static_cast<std::size_t>(a)];
            xs.col(a) = x_.col(j);
            g[a] = smooth[j] + (w[j] > 0.0 ? 1.0 : -1.0);
        }
        xs.col(k).setOnes();
        g[k] = smooth[w.size()];

        const Eigen::VectorXd curv = lg::curvature(z_, p_.c);
        const Eigen::MatrixXd h = xs.transpose() * curv.asDiagonal() * xs;
        const Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
        if (ldlt.info() != Eigen::Success) return;
        const Eigen::VectorXd step = ldlt.solve(-g);
        const double slope = g.dot(step);
        if (!step.allFinite() || !(slope < 0.0)) return;

        double t_max = 1.0;
        Eigen::Index blocking = -1;
        for (Eigen::Index a = 0; a < k; ++a) {
            const double wj = w[support[static_cast<std::size_t>(a)]];
            if (wj * step[a] < 0.0 && std::abs(step[a]) * t_max > std::abs(wj)) {
                t_max = std::abs(wj / step[a]);
                blocking = a;
            }
        }

        const double f = objective_at(x_, y_, w, b, p_);
        const double before = objective_gradient(x_, y_, w, b, p_).norm();
        double t = t_max;
        for (int halvings = 0; halvings < 40; ++halvings, t *= 0.5) {
            Eigen::VectorXd w_new = w;
            for (Eigen::Index a = 0; a < k; ++a) {
                const Eigen::Index j = support[static_cast<std::size_t>(a)];
                w_new[j] = (halvings == 0 && a == blocking) ? 0.0 : w[j] + t * step[a];
                if (w_new[j] * w[j] < 0.0) w_new[j] = 0.0;
            }
            const double b_new = b + t * step[k];
            const double f_new = objective_at(x_, y_, w_new, b_new, p_);
            const bool decrease = f_new <= f + 1e-4 * t * slope;
            const bool floor = halvings == 0 && at_noise_floor(slope, f) &&
                               objective_gradient(x_, y_, w_new, b_new, p_).norm() < before;
            if (decrease || floor) {
                w = std::move(w_new);
                b = b_new;
                z_ = lg::margins(x_, w, b);
                return;
            }
        }
    }

    double loss_change(const Eigen::Ref<const Eigen::VectorXd>& column, double delta) const {
        double change = 0.0;
        for (Eigen::Index i = 0; i < z_.size(); ++i) {
            if (column[i] == 0.0) continue;
            const double m = -sign_[i];
            change += lg::log1p_exp(m * (z_[i] + delta * column[i])) - lg::log1p_exp(m * z_[i]);
        }
        return p_.c * change;
    }

    void derivatives(const Eigen::Ref<const Eigen::VectorXd>& column, double& g, double& h) const {
        g = 0.0;
        h = 0.0;
        for (Eigen::Index i = 0; i < z_.size(); ++i) {
            if (column[i] == 0.0) continue;
            const double prob = lg::sigmoid(z_[i]);
            g += (prob - y_[i]) * column[i];
            h += prob * (1.0 - prob) * column[i] * column[i];
        }
        g *= p_.c;
        h = std::max(h * p_.c, 1e-12);
    }

    void apply(const Eigen::Ref<const Eigen::VectorXd>& column, double delta) {
        if (delta != 0.0) z_ += delta * column;
    }

    void update_weight(double& w, const Eigen::Ref<const Eigen::VectorXd>& column) {
        double g = 0.0;
        double h = 0.0;
        derivatives(column, g, h);
        double d = 0.0;
        if (g + 1.0 <= h * w) {
            d = -(g + 1.0) / h;
        } else if (g - 1.0 >= h * w) {
            d = -(g - 1.0) / h;
        } else {
            d = -w;
        }
        if (d == 0.0) return;

        const double predicted = g * d + std::abs(w + d) - std::abs(w);
        double t = 1.0;
        for (int halvings = 0; halvings < 40; ++halvings, t *= 0.5) {
            const double w_new = t == 1.0 ? w + d : w + t * d;
            const double change = loss_change(column, w_new - w) + std::abs(w_new) - std::abs(w);
            if (change <= 0.01 * t * predicted) {
                apply(column, w_new - w);
                w = w_new;
                return;
            }
        }
    }

    void update_intercept(double& b) {
        const Eigen::VectorXd ones = Eigen::VectorXd::Ones(z_.size());
        double g = 0.0;
        double h = 0.0;
        derivatives(ones, g, h);
        const double d = -g / h;
        if (d == 0.0) return;
        double t = 1.0;
        for (int halvings = 0; halvings < 40; ++halvings, t *= 0.5) {
            if (loss_change(ones, t * d) <= 0.01 * t * g * d) {
                apply(ones, t * d);
                b += t * d;
                return;
            }
        }
    }

    const Eigen::MatrixXd& x_;
    const Eigen::VectorXd& y_;
    const PenaltyConfig& p_;
    Eigen::VectorXd sign_;
    Eigen::VectorXd z_;
};

void require_aligned(const TrainedModel& model, const std::vector<std::string>& names) {
    if (names != model.feature_names) throw std::invalid_argument("feature names do not match the model");
}

}  // namespace

TrainedModel train(const FeatureMatrix& matrix, const PenaltyConfig& penalty, const TrainOptions& options) {
    penalty.check();
    const FeatureMatrix data = matrix.labeled_only();
    if (data.rows() == 0) throw DomainError("no labeled rows to train on");
    if (!data.values.allFinite()) throw DomainError("training features must be finite");
    const Eigen::VectorXd y = data.labels();
    require_two_classes(y);

    SolverState s;
    s.w = options.initial_weights.value_or(Eigen::VectorXd::Zero(data.cols()));
    if (s.w.size() != data.cols()) throw std::invalid_argument("initial weights have the wrong length");
    s.b = options.initial_intercept;

    s = penalty.kind == PenaltyKind::l2 ? newton_l2(data.values, y, penalty, std::move(s))
                                        : L1Solver(data.values, y, penalty).run(std::move(s));

    TrainedModel model;
    model.feature_names = data.names;
    model.weights = std::move(s.w);
    model.intercept = s.b;
    model.penalty = penalty;
    model.metadata.iterations = s.iterations;
    model.metadata.optimality = s.optimality;
    model.objective_trace = std::move(s.trace);
    return model;
}

double objective(const TrainedModel& model, const FeatureMatrix& matrix) {
    require_aligned(model, matrix.names);
    const FeatureMatrix data = matrix.labeled_only();
    return objective_at(data.values, data.labels(), model.weights, model.intercept, model.penalty);
}

Eigen::VectorXd loss_gradient(const TrainedModel& model, const FeatureMatrix& matrix) {
    require_aligned(model, matrix.names);
    const FeatureMatrix data = matrix.labeled_only();
    return objective_gradient(data.values, data.labels(), model.weights, model.intercept, model.penalty);
}

double optimality(const TrainedModel& model, const FeatureMatrix& matrix) {
    return loss_gradient(model, matrix).norm();
}

double predict_proba(const TrainedModel& model, const FeatureVector& x) {
    require_aligned(model, x.names);
    double z = model.intercept;
    for (std::size_t j = 0; j < x.values.size(); ++j) z += model.weights[static_cast<Eigen::Index>(j)] * x.values[j];
    return lg::sigmoid(z);
}

namespace {
void check_threshold(double threshold) {
    if (!(threshold > 0.0 && threshold < 1.0)) throw std::invalid_argument("threshold must lie in (0, 1)");
}
}  // namespace

int predict(const TrainedModel& model, const FeatureVector& x, double threshold) {
    check_threshold(threshold);
    return predict_proba(model, x) >= threshold ? 1 : 0;
}

std::vector<int> predict(const TrainedModel& model, const Eigen::MatrixXd& values, double threshold) {
    check_threshold(threshold);
    if (values.cols() != model.weights.size()) throw std::invalid_argument("column count does not match the model");
    std::vector<int> out(static_cast<std::size_t>(values.rows()));
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
        double z = model.intercept;
        for (Eigen::Index j = 0; j < values.cols(); ++j) z += model.weights[j] * values(i, j);
        out[static_cast<std::size_t>(i)] = lg::sigmoid(z) >= threshold ? 1 : 0;
    }
    return out;
}

std::vector<int> predict(const TrainedModel& model, const FeatureMatrix& matrix, double threshold) {
    require_aligned(model, matrix.names);
    return predict(model, matrix.values, threshold);
}

std::string serialize_model(const TrainedModel& model) {
    std::string out = "format\tglm-v1\nfeature_names";
    for (const auto& name : model.feature_names) out += "\t" + name;
    out += "\nweights";
    for (Eigen::Index j = 0; j < model.weights.size(); ++j) out += "\t" + shortest(model.weights[j]);
    out += "\nintercept\t" + shortest(model.intercept);
    out += "\npenalty\t" + std::string(to_string(model.penalty.kind));
    out += "\nC\t" + shortest(model.penalty.c);
    out += "\ntolerance\t" + shortest(model.penalty.tolerance);
    out += "\nmax_iterations\t" + std::to_string(model.penalty.max_iterations);
    out += "\ngroup\t" + model.metadata.group;
    out += "\nlanguage\t" + model.metadata.language;
    out += "\nseed\t" + std::to_string(model.metadata.seed);
    out += "\niterations\t" + std::to_string(model.metadata.iterations);
    out += "\noptimality\t" + shortest(model.metadata.optimality);
    out += "\n";
    return out;
}

TrainedModel deserialize_model(std::string_view text) {
    std::map<std::string, std::pair<std::vector<std::string>, std::size_t>> fields;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> parts;
        std::size_t pos = 0;
        for (;;) {
            const auto tab = line.find('\t', pos);
            parts.push_back(line.substr(pos, tab == std::string::npos ? std::string::npos : tab - pos));
            if (tab == std::string::npos) break;
            pos = tab + 1;
        }
        std::string key = parts.front();
        parts.erase(parts.begin());
        if (!fields.emplace(key, std::make_pair(std::move(parts), line_no)).second) {
            throw ParseError("duplicate key '" + key + "'", line_no);
        }
    }

    auto values = [&](const char* key) -> const std::vector<std::string>& {
        const auto it = fields.find(key);
        if (it == fields.end()) throw ParseError(std::string("missing key '") + key + "'", line_no);
        return it->second.first;
    };
    auto single = [&](const char* key) -> const std::string& {
        const auto& v = values(key);
        if (v.size() != 1) throw ParseError(std::string("key '") + key + "' needs one value", fields[key].second);
        return v.front();
    };
    auto number = [&](const char* key) {
        double out = 0.0;
        if (!parse_double(single(key), out)) throw ParseError(std::string("bad number for '") + key + "'", fields[key].second);
        return out;
    };

    if (single("format") != "glm-v1") throw ParseError("unsupported model format '" + single("format") + "'", 1);

    TrainedModel model;
    const auto& names = values("feature_names");
    model.feature_names = names.size() == 1 && names.front().empty() ? std::vector<std::string>{} : names;
    const auto& weights = values("weights");
    const std::size_t n_weights = weights.size() == 1 && weights.front().empty() ? 0 : weights.size();
    if (n_weights != model.feature_names.size()) {
        throw ParseError("weights and feature_names differ in length", fields["weights"].second);
    }
    model.weights.resize(static_cast<Eigen::Index>(n_weights));
    for (std::size_t j = 0; j < n_weights; ++j) {
        double w = 0.0;
        if (!parse_double(weights[j], w)) throw ParseError("bad weight '" + weights[j] + "'", fields["weights"].second);
        model.weights[static_cast<Eigen::Index>(j)] = w;
    }
    model.intercept = number("intercept");
    const auto kind = parse_penalty_kind(single("penalty"));
    if (!kind) throw ParseError("unknown penalty '" + single("penalty") + "'", fields["penalty"].second);
    model.penalty.kind = *kind;
    model.penalty.c = number("C");
    model.penalty.tolerance = number("tolerance");
    model.penalty.max_iterations = static_cast<int>(number("max_iterations"));
    model.metadata.group = single("group");
    model.metadata.language = single("language");
    model.metadata.seed = std::stoull(single("seed"));
    model.metadata.iterations = static_cast<int>(number("iterations"));
    model.metadata.optimality = number("optimality");
    if (!model.weights.allFinite() || !std::isfinite(model.intercept)) throw ParseError("non-finite parameters", 1);
    return model;
}

KeywordSelection select_keywords(const std::vector<std::string>& candidates, const FeatureMatrix& matrix,
                                 Language language, std::size_t k, PenaltyConfig base) {
    if (k == 0 || k > candidates.size()) throw std::invalid_argument("k must lie in [1, number of candidates]");
    std::vector<bool> is_candidate(matrix.names.size(), false);
    for (const auto& word : candidates) {
        const auto it = std::find(matrix.names.begin(), matrix.names.end(), word);
        if (it == matrix.names.end()) throw std::invalid_argument("candidate '" + word + "' has no matrix column");
        is_candidate[static_cast<std::size_t>(it - matrix.names.begin())] = true;
    }
    base.kind = PenaltyKind::l1;

    for (double c : kKeywordSchedule) {
        PenaltyConfig penalty = base;
        penalty.c = c;
        const TrainedModel model = train(matrix, penalty);

        std::vector<std::pair<std::string, double>> nonzero;
        for (std::size_t j = 0; j < matrix.names.size(); ++j) {
            const double w = model.weights[static_cast<Eigen::Index>(j)];
            if (is_candidate[j] && w != 0.0) nonzero.emplace_back(matrix.names[j], w);
        }
        if (nonzero.size() < k) continue;

        std::sort(nonzero.begin(), nonzero.end(), [](const auto& a, const auto& b) {
            if (std::abs(a.second) != std::abs(b.second)) return std::abs(a.second) > std::abs(b.second);
            return a.first < b.first;
        });

        KeywordSelection sel;
        sel.spec.language = language;
        sel.spec.include_story_control =
            std::find(matrix.names.begin(), matrix.names.end(), kStoryControlName) != matrix.names.end();
        for (std::size_t i = 0; i < k; ++i) sel.spec.keywords.push_back(nonzero[i].first);
        sel.candidates = candidates;
        sel.chosen_c = c;
        for (std::size_t j = 0; j < matrix.names.size(); ++j) {
            sel.weights.emplace_back(matrix.names[j], model.weights[static_cast<Eigen::Index>(j)]);
        }
        return sel;
    }
    throw DomainError("no penalty in the schedule (C up to " + shortest(kKeywordSchedule.back()) +
                      ") yields " + std::to_string(k) + " nonzero keyword weights; a larger C is needed");
}

}  // namespace narrisk
