#pragma once

// Dense logistic-loss kernels shared by the solvers. Labels are 0/1; the
// data term is C * sum_i log(1 + exp(-s_i z_i)) with s_i = 2y_i - 1 and
// z = X w + b.

#include <cmath>
#include <concepts>

#include <Eigen/Dense>

namespace narrisk::logistic {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// log(1 + exp(t)) without overflow.
template <std::floating_point Scalar>
Scalar log1p_exp(Scalar t) {
    using std::exp;
    using std::log1p;
    return t > Scalar(0) ? t + log1p(exp(-t)) : log1p(exp(t));
}

/// 1 / (1 + exp(-t)), saturating cleanly at both ends.
template <std::floating_point Scalar>
Scalar sigmoid(Scalar t) {
    using std::exp;
    if (t >= Scalar(0)) return Scalar(1) / (Scalar(1) + exp(-t));
    const Scalar e = exp(t);
    return e / (Scalar(1) + e);
}

template <typename Derived>
auto sigmoid(const Eigen::ArrayBase<Derived>& t) {
    using Scalar = typename Derived::Scalar;
    return t.unaryExpr([](Scalar v) { return sigmoid(v); });
}

/// Linear predictor z = X w + b.
template <typename DerivedX, typename DerivedW>
Vector<typename DerivedX::Scalar> margins(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedW>& w,
                                          typename DerivedX::Scalar b) {
    return (x * w).array() + b;
}

/// C * sum_i log(1 + exp(-s_i z_i)).
template <typename DerivedZ, typename DerivedY>
typename DerivedZ::Scalar data_loss(const Eigen::MatrixBase<DerivedZ>& z, const Eigen::MatrixBase<DerivedY>& y,
                                    typename DerivedZ::Scalar c) {
    using Scalar = typename DerivedZ::Scalar;
    Scalar total(0);
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        const Scalar sign = y[i] > Scalar(0.5) ? Scalar(1) : Scalar(-1);
        total += log1p_exp(-sign * z[i]);
    }
    return c * total;
}

/// d(data_loss)/dz = C (sigmoid(z) - y).
template <typename DerivedZ, typename DerivedY>
Vector<typename DerivedZ::Scalar> residuals(const Eigen::MatrixBase<DerivedZ>& z, const Eigen::MatrixBase<DerivedY>& y,
                                            typename DerivedZ::Scalar c) {
    return c * (sigmoid(z.array()).matrix() - y);
}

/// Curvature weights C sigmoid(z)(1 - sigmoid(z)).
template <typename DerivedZ>
Vector<typename DerivedZ::Scalar> curvature(const Eigen::MatrixBase<DerivedZ>& z, typename DerivedZ::Scalar c) {
    const auto p = sigmoid(z.array());
    return c * (p * (1 - p)).matrix();
}

}  // namespace narrisk::logistic
