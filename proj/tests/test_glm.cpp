#include <doctest.h>

#include <cmath>
#include <random>

#include "narrisk/error.hpp"
#include "narrisk/glm.hpp"
#include "oracles.hpp"

using namespace narrisk;

namespace {

FeatureMatrix make_matrix(const oracle::Rows& rows, const std::vector<int>& y, std::vector<std::string> names = {}) {
    FeatureMatrix m;
    const auto d = static_cast<Eigen::Index>(rows.front().size());
    if (names.empty()) {
        for (Eigen::Index j = 0; j < d; ++j) names.push_back("f" + std::to_string(j));
    }
    m.names = std::move(names);
    m.values.resize(static_cast<Eigen::Index>(rows.size()), d);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (Eigen::Index j = 0; j < d; ++j) m.values(static_cast<Eigen::Index>(i), j) = rows[i][j];
        m.ri.push_back(y[i]);
        m.record_ids.push_back("r" + std::to_string(i));
    }
    return m;
}

std::vector<double> theta_of(const TrainedModel& model) {
    std::vector<double> t(model.weights.data(), model.weights.data() + model.weights.size());
    t.push_back(model.intercept);
    return t;
}

const oracle::Rows kSixRows{{1.0, 2.0}, {2.0, 1.0}, {3.0, 4.0}, {4.0, 3.0}, {5.0, 5.0}, {0.5, 3.0}};
const std::vector<int> kSixLabels{0, 0, 1, 0, 1, 1};

struct Random {
    oracle::Rows x;
    std::vector<int> y;
};

Random random_instance(std::mt19937_64& rng, std::size_t n, std::size_t d) {
    std::normal_distribution<double> normal(0.0, 1.5);
    Random r;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> row;
        for (std::size_t j = 0; j < d; ++j) row.push_back(normal(rng));
        r.x.push_back(row);
        r.y.push_back(static_cast<int>(i % 2));
    }
    return r;
}

}  // namespace

TEST_CASE("L2 weights match a dense Newton oracle") {
    const auto m = make_matrix(kSixRows, kSixLabels);
    for (double c : {0.1, 1.0, 10.0}) {
        PenaltyConfig p;
        p.c = c;
        const auto model = train(m, p);
        const auto expected = oracle::newton_l2(kSixRows, kSixLabels, c);
        const auto got = theta_of(model);
        for (std::size_t k = 0; k < expected.size(); ++k) CHECK(std::abs(got[k] - expected[k]) < 1e-4);
        CHECK(optimality(model, m) <= p.tolerance);
    }
}

TEST_CASE("analytic gradient matches central differences") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        const auto inst = random_instance(rng, 8, 3);
        const auto m = make_matrix(inst.x, inst.y);
        for (bool l1 : {false, true}) {
            TrainedModel model;
            model.feature_names = m.names;
            model.weights = Eigen::VectorXd(3);
            // L1 is differentiable away from zero; keep weights clear of it.
            for (int j = 0; j < 3; ++j) {
                double w = normal(rng);
                if (l1 && std::abs(w) < 0.1) w = 0.5;
                model.weights[j] = w;
            }
            model.intercept = normal(rng);
            model.penalty.kind = l1 ? PenaltyKind::l1 : PenaltyKind::l2;
            model.penalty.c = 0.7;
            const auto g = loss_gradient(model, m);
            const auto fd = oracle::finite_difference_gradient(inst.x, inst.y, theta_of(model), 0.7, l1);
            for (std::size_t k = 0; k < fd.size(); ++k) {
                CHECK(std::abs(g[static_cast<Eigen::Index>(k)] - fd[k]) <= 1e-5 * std::max(1.0, std::abs(fd[k])));
            }
            CHECK(objective(model, m) == doctest::Approx(oracle::objective(inst.x, inst.y, theta_of(model), 0.7, l1)));
        }
    }
}

TEST_CASE("zero-weight gradient on centred antisymmetric data") {
    const oracle::Rows x{{1.0}, {-1.0}, {2.0}, {-2.0}};
    const auto m = make_matrix(x, {1, 1, 0, 0});
    TrainedModel model;
    model.feature_names = m.names;
    model.weights = Eigen::VectorXd::Zero(1);
    const auto g = loss_gradient(model, m);
    CHECK(g[0] == doctest::Approx(0.0));
}

TEST_CASE("symmetric uninformative feature gets zero weight") {
    // Second feature takes +v and -v once in every (x1, y) combination.
    oracle::Rows x;
    std::vector<int> y;
    const double informative[] = {0.5, 1.0, 2.5, 3.0, 1.5, 2.0};
    const int labels[] = {0, 0, 1, 1, 1, 0};
    const double noise[] = {0.3, 1.7, 2.2, 0.9, 4.0, 1.1};
    for (int i = 0; i < 6; ++i) {
        x.push_back({informative[i], noise[i]});
        x.push_back({informative[i], -noise[i]});
        y.push_back(labels[i]);
        y.push_back(labels[i]);
    }
    const auto model = train(make_matrix(x, y), PenaltyConfig{});
    CHECK(std::abs(model.weights[1]) < 1e-8);
    CHECK(std::abs(model.weights[0]) > 0.1);
}

TEST_CASE("strong L1 penalty gives exact zeros and the prior log-odds") {
    std::mt19937_64 rng(9);
    auto inst = random_instance(rng, 30, 4);
    for (std::size_t i = 0; i < inst.y.size(); ++i) inst.y[i] = (i % 3 == 0) ? 1 : 0;
    PenaltyConfig p;
    p.kind = PenaltyKind::l1;
    p.c = 1e-3;
    const auto model = train(make_matrix(inst.x, inst.y), p);
    for (Eigen::Index j = 0; j < model.weights.size(); ++j) CHECK(model.weights[j] == 0.0);
    CHECK(model.intercept == doctest::Approx(std::log(10.0 / 20.0)).epsilon(1e-6));
}

TEST_CASE("L2 solution does not depend on the starting point") {
    std::mt19937_64 rng(21);
    std::normal_distribution<double> normal(0.0, 3.0);
    for (int trial = 0; trial < 20; ++trial) {
        const auto inst = random_instance(rng, 25, 4);
        const auto m = make_matrix(inst.x, inst.y);
        PenaltyConfig p;
        const auto a = train(m, p);
        TrainOptions start;
        start.initial_weights = Eigen::VectorXd(4);
        for (int j = 0; j < 4; ++j) (*start.initial_weights)[j] = normal(rng);
        start.initial_intercept = normal(rng);
        const auto b = train(m, p, start);
        const auto ta = theta_of(a);
        const auto tb = theta_of(b);
        double dist = 0;
        for (std::size_t k = 0; k < ta.size(); ++k) dist += (ta[k] - tb[k]) * (ta[k] - tb[k]);
        CHECK(std::sqrt(dist) <= 10 * p.tolerance);
    }
}

TEST_CASE("objective never increases across iterations") {
    std::mt19937_64 rng(33);
    for (int trial = 0; trial < 20; ++trial) {
        const auto inst = random_instance(rng, 40, 5);
        for (auto kind : {PenaltyKind::l2, PenaltyKind::l1}) {
            PenaltyConfig p;
            p.kind = kind;
            p.c = 0.5 + trial;
            const auto model = train(make_matrix(inst.x, inst.y), p);
            REQUIRE(model.objective_trace.size() >= 2);
            for (std::size_t k = 1; k < model.objective_trace.size(); ++k) {
                const double prev = model.objective_trace[k - 1];
                CHECK(model.objective_trace[k] <= prev + 1e-12 * std::max(1.0, std::abs(prev)));
            }
        }
    }
}

TEST_CASE("separable data keeps finite, bounded weights") {
    const oracle::Rows x{{-3.0, 0.1}, {-2.0, 0.4}, {-1.0, 0.2}, {1.0, 0.3}, {2.0, 0.5}, {3.0, 0.1}};
    const std::vector<int> y{0, 0, 0, 1, 1, 1};
    for (double c : {1.0, 100.0, 10000.0}) {
        PenaltyConfig p;
        p.c = c;
        const auto model = train(make_matrix(x, y), p);
        // 0.5|w|^2 cannot exceed the objective at the origin, C n log 2.
        CHECK(model.weights.allFinite());
        CHECK(model.weights.norm() <= std::sqrt(2.0 * c * 6 * std::log(2.0)));
        CHECK(predict(model, make_matrix(x, y)) == y);
    }
}

TEST_CASE("L1 nonzero count is monotone over the schedule") {
    std::mt19937_64 rng(44);
    for (int trial = 0; trial < 5; ++trial) {
        auto inst = random_instance(rng, 60, 8);
        std::bernoulli_distribution flip(0.2);
        for (std::size_t i = 0; i < inst.y.size(); ++i) {
            const int truth = inst.x[i][0] + 0.5 * inst.x[i][1] > 0 ? 1 : 0;
            inst.y[i] = flip(rng) ? 1 - truth : truth;
        }
        const auto m = make_matrix(inst.x, inst.y);
        long previous = -1;
        for (double c : kKeywordSchedule) {
            PenaltyConfig p = l1_selection_defaults();
            p.c = c;
            const auto model = train(m, p);
            const long nonzero = (model.weights.array() != 0.0).count();
            CHECK(nonzero >= previous);
            previous = nonzero;
        }
    }
}

TEST_CASE("predict_proba and predict edges") {
    TrainedModel model;
    model.feature_names = {"a"};
    model.weights = Eigen::VectorXd::Zero(1);
    FeatureVector x;
    x.push("a", 3.0);
    CHECK(predict_proba(model, x) == 0.5);
    CHECK(predict(model, x, 0.5) == 1);
    model.intercept = std::log(0.49 / 0.51);
    CHECK(predict(model, x) == 0);
    model.intercept = 1e300;
    CHECK(predict_proba(model, x) == 1.0);
    model.intercept = -1e300;
    CHECK(predict_proba(model, x) == 0.0);
    CHECK_THROWS_AS(predict(model, x, 1.5), std::invalid_argument);
    CHECK_THROWS_AS(predict(model, x, 0.0), std::invalid_argument);
    FeatureVector wrong;
    wrong.push("b", 1.0);
    CHECK_THROWS_AS(predict_proba(model, wrong), std::invalid_argument);
}

TEST_CASE("appending a zero-weight feature leaves predictions unchanged") {
    const auto m = make_matrix(kSixRows, kSixLabels);
    const auto model = train(m, PenaltyConfig{});
    TrainedModel wider = model;
    wider.feature_names.push_back("extra");
    wider.weights.conservativeResize(3);
    wider.weights[2] = 0.0;
    Eigen::MatrixXd values(6, 3);
    values << m.values, Eigen::VectorXd::LinSpaced(6, -50, 50);
    CHECK(predict(wider, values) == predict(model, m.values));
}

TEST_CASE("serialization round-trips exactly") {
    auto model = train(make_matrix(kSixRows, kSixLabels), PenaltyConfig{});
    model.metadata.group = "proficiency";
    model.metadata.language = "afrikaans";
    model.metadata.seed = 1234567890123ULL;
    const auto back = deserialize_model(serialize_model(model));
    CHECK(back.feature_names == model.feature_names);
    CHECK(back.weights == model.weights);
    CHECK(back.intercept == model.intercept);
    CHECK(back.penalty.c == model.penalty.c);
    CHECK(back.penalty.kind == model.penalty.kind);
    CHECK(back.metadata.seed == model.metadata.seed);
    CHECK(back.metadata.group == "proficiency");
    CHECK(serialize_model(back) == serialize_model(model));
    CHECK_THROWS(deserialize_model("format\tglm-v0\n"));
}

TEST_CASE("training errors") {
    const auto single = make_matrix(kSixRows, {1, 1, 1, 1, 1, 1});
    CHECK_THROWS_AS(train(single, PenaltyConfig{}), DomainError);
    PenaltyConfig bad;
    bad.c = 0;
    CHECK_THROWS_AS(train(make_matrix(kSixRows, kSixLabels), bad), std::invalid_argument);
    PenaltyConfig tight;
    tight.max_iterations = 1;
    tight.tolerance = 1e-14;
    try {
        train(make_matrix(kSixRows, kSixLabels), tight);
        FAIL("expected ConvergenceError");
    } catch (const ConvergenceError& e) {
        CHECK(e.optimality() > 0);
        CHECK(e.iterations() == 1);
    }
}

namespace {

// Poisson counts for `d` candidate words; the label follows the first two.
FeatureMatrix planted(std::mt19937_64& rng, std::size_t n, std::size_t d) {
    std::poisson_distribution<int> count(2.0);
    std::bernoulli_distribution coin(0.5);
    oracle::Rows x;
    std::vector<int> y;
    std::vector<std::string> names;
    for (std::size_t j = 0; j < d; ++j) names.push_back("w" + std::to_string(j));
    names.push_back(std::string(kStoryControlName));
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> row;
        const int label = coin(rng) ? 1 : 0;
        for (std::size_t j = 0; j < d; ++j) {
            double v = count(rng);
            if (j == 0 && label == 1) v += 3;
            if (j == 1 && label == 0) v += 3;
            row.push_back(v);
        }
        row.push_back(coin(rng) ? 1.0 : 0.0);
        x.push_back(row);
        y.push_back(label);
    }
    return make_matrix(x, y, names);
}

}  // namespace

TEST_CASE("select_keywords keeps the planted words") {
    std::mt19937_64 rng(77);
    const auto m = planted(rng, 200, 20);
    std::vector<std::string> candidates(m.names.begin(), m.names.end() - 1);
    const auto sel = select_keywords(candidates, m, Language::isixhosa);
    REQUIRE(sel.spec.keywords.size() == 10);
    CHECK(std::find(sel.spec.keywords.begin(), sel.spec.keywords.end(), "w0") != sel.spec.keywords.end());
    CHECK(std::find(sel.spec.keywords.begin(), sel.spec.keywords.end(), "w1") != sel.spec.keywords.end());
    CHECK(sel.spec.include_story_control);
    CHECK(sel.spec.language == Language::isixhosa);
    CHECK_NOTHROW(sel.spec.check());
    CHECK(std::find(sel.spec.keywords.begin(), sel.spec.keywords.end(), std::string(kStoryControlName)) ==
          sel.spec.keywords.end());
}

TEST_CASE("select_keywords with k equal to the candidate count") {
    std::mt19937_64 rng(78);
    const auto m = planted(rng, 150, 4);
    std::vector<std::string> candidates(m.names.begin(), m.names.end() - 1);
    const auto sel = select_keywords(candidates, m, Language::afrikaans, 4);
    auto chosen = sel.spec.keywords;
    std::sort(chosen.begin(), chosen.end());
    CHECK(chosen == candidates);
}

TEST_CASE("select_keywords fails on all-zero candidates") {
    oracle::Rows x;
    std::vector<int> y;
    std::vector<std::string> names;
    for (int j = 0; j < 12; ++j) names.push_back("z" + std::to_string(j));
    for (int i = 0; i < 20; ++i) {
        x.push_back(std::vector<double>(12, 0.0));
        y.push_back(i % 2);
    }
    const auto m = make_matrix(x, y, names);
    CHECK_THROWS_AS(select_keywords(names, m, Language::afrikaans), DomainError);
}
