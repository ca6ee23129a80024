#pragma once

// Reference computations for tests. Nothing here calls into the library's
// numerical code: plain loops, std::vector, textbook algorithms.

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

namespace oracle {

using Rows = std::vector<std::vector<double>>;

/// C * sum log(1 + exp(-s z)) + 0.5|w|^2 (l2) or |w|_1 (l1); theta = (w, b).
inline double objective(const Rows& x, const std::vector<int>& y, const std::vector<double>& theta, double c, bool l1) {
    const std::size_t d = theta.size() - 1;
    double loss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double z = theta[d];
        for (std::size_t j = 0; j < d; ++j) z += theta[j] * x[i][j];
        const double m = (y[i] == 1 ? -z : z);
        loss += m > 0 ? m + std::log1p(std::exp(-m)) : std::log1p(std::exp(m));
    }
    double pen = 0.0;
    for (std::size_t j = 0; j < d; ++j) pen += l1 ? std::abs(theta[j]) : 0.5 * theta[j] * theta[j];
    return c * loss + pen;
}

/// Central differences of `objective` at theta.
inline std::vector<double> finite_difference_gradient(const Rows& x, const std::vector<int>& y,
                                                      const std::vector<double>& theta, double c, bool l1) {
    std::vector<double> g(theta.size());
    for (std::size_t k = 0; k < theta.size(); ++k) {
        const double h = 1e-5 * std::max(1.0, std::abs(theta[k]));
        auto plus = theta;
        auto minus = theta;
        plus[k] += h;
        minus[k] -= h;
        g[k] = (objective(x, y, plus, c, l1) - objective(x, y, minus, c, l1)) / (2 * h);
    }
    return g;
}

/// Solve A v = b by Gaussian elimination with partial pivoting.
inline std::vector<double> solve(std::vector<std::vector<double>> a, std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r) {
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        }
        std::swap(a[col], a[piv]);
        std::swap(b[col], b[piv]);
        if (a[col][col] == 0.0) throw std::runtime_error("singular system");
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a[r][col] / a[col][col];
            for (std::size_t k = col; k < n; ++k) a[r][k] -= f * a[col][k];
            b[r] -= f * b[col];
        }
    }
    std::vector<double> v(n);
    for (std::size_t r = n; r-- > 0;) {
        double s = b[r];
        for (std::size_t k = r + 1; k < n; ++k) s -= a[r][k] * v[k];
        v[r] = s / a[r][r];
    }
    return v;
}

/// Undamped Newton iterations for the L2 objective from theta = 0.
inline std::vector<double> newton_l2(const Rows& x, const std::vector<int>& y, double c, int iterations = 100) {
    const std::size_t d = x.front().size();
    std::vector<double> theta(d + 1, 0.0);
    for (int it = 0; it < iterations; ++it) {
        std::vector<double> g(d + 1, 0.0);
        std::vector<std::vector<double>> h(d + 1, std::vector<double>(d + 1, 0.0));
        for (std::size_t i = 0; i < x.size(); ++i) {
            std::vector<double> xa = x[i];
            xa.push_back(1.0);
            double z = 0.0;
            for (std::size_t j = 0; j <= d; ++j) z += theta[j] * xa[j];
            const double p = 1.0 / (1.0 + std::exp(-z));
            for (std::size_t j = 0; j <= d; ++j) {
                g[j] += c * (p - y[i]) * xa[j];
                for (std::size_t k = 0; k <= d; ++k) h[j][k] += c * p * (1 - p) * xa[j] * xa[k];
            }
        }
        for (std::size_t j = 0; j < d; ++j) {
            g[j] += theta[j];
            h[j][j] += 1.0;
        }
        for (auto& v : g) v = -v;
        const auto step = solve(h, g);
        for (std::size_t j = 0; j <= d; ++j) theta[j] += step[j];
    }
    return theta;
}

/// Every permutation of {0..n-1} by recursive swapping (Heap-free,
/// deliberately unlike std::next_permutation).
inline void for_each_permutation(std::size_t n, const std::function<void(const std::vector<std::size_t>&)>& fn) {
    std::vector<std::size_t> perm;
    std::vector<bool> used(n, false);
    std::function<void()> rec = [&] {
        if (perm.size() == n) {
            fn(perm);
            return;
        }
        for (std::size_t k = 0; k < n; ++k) {
            if (used[k]) continue;
            used[k] = true;
            perm.push_back(k);
            rec();
            perm.pop_back();
            used[k] = false;
        }
    };
    rec();
}

/// Balanced accuracy computed from scratch.
inline double balanced_accuracy(const std::vector<int>& pred, const std::vector<int>& y) {
    double tp = 0, fn = 0, tn = 0, fp = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] == 1) (pred[i] == 1 ? tp : fn) += 1;
        else (pred[i] == 0 ? tn : fp) += 1;
    }
    return 0.5 * (tp / (tp + fn) + tn / (tn + fp));
}

/// Predictions of a linear model with threshold 0.5 (z >= 0).
inline std::vector<int> predict(const Rows& x, const std::vector<double>& w, double b) {
    std::vector<int> out;
    for (const auto& row : x) {
        double z = b;
        for (std::size_t j = 0; j < w.size(); ++j) z += w[j] * row[j];
        out.push_back(1.0 / (1.0 + std::exp(-z)) >= 0.5 ? 1 : 0);
    }
    return out;
}

/// Exact PFI of column j: mean over all n! row permutations of the drop.
inline double exhaustive_mean_drop(const Rows& x, const std::vector<int>& y, const std::vector<double>& w, double b,
                                   std::size_t j) {
    const double base = balanced_accuracy(predict(x, w, b), y);
    double total = 0.0;
    double count = 0.0;
    for_each_permutation(x.size(), [&](const std::vector<std::size_t>& perm) {
        Rows shuffled = x;
        for (std::size_t i = 0; i < x.size(); ++i) shuffled[i][j] = x[perm[i]][j];
        total += base - balanced_accuracy(predict(shuffled, w, b), y);
        count += 1.0;
    });
    return total / count;
}

}  // namespace oracle
