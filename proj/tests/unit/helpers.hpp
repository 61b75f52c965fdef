#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "qmode/dataset.hpp"
#include "qmode/quantile_regression.hpp"

namespace testing {

inline qmode::Dataset random_dataset(std::mt19937_64& rng, long n, long d) {
    std::normal_distribution<double> z;
    Eigen::MatrixXd X(n, d);
    Eigen::VectorXd Y(n);
    for (long i = 0; i < n; ++i) {
        X(i, 0) = 1.0;
        for (long j = 1; j < d; ++j) X(i, j) = z(rng);
        Y(i) = z(rng) + 0.5 * X.row(i).sum();
    }
    return qmode::Dataset::make(X, Y);
}

//! Minimum check loss over every d-subset interpolation.
inline double brute_force_loss(const qmode::Dataset& data, double tau) {
    const long n = data.n();
    const long d = data.d();
    std::vector<int> pick(static_cast<std::size_t>(n), 0);
    std::fill(pick.begin(), pick.begin() + d, 1);
    std::sort(pick.begin(), pick.end());
    double best = std::numeric_limits<double>::infinity();
    do {
        Eigen::MatrixXd A(d, d);
        Eigen::VectorXd b(d);
        long r = 0;
        for (long i = 0; i < n; ++i) {
            if (pick[static_cast<std::size_t>(i)]) {
                A.row(r) = data.X.row(i);
                b(r) = data.Y(i);
                ++r;
            }
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
        if (lu.rank() < d) continue;
        best = std::min(best, qmode::check_loss(data, lu.solve(b), tau));
    } while (std::next_permutation(pick.begin(), pick.end()));
    return best;
}

//! Path whose fitted values at x = (1) are f(tau) on a uniform grid.
template <class F>
std::pair<std::vector<double>, std::vector<double>> tabulate(F f, double lo, double hi, std::size_t count) {
    std::vector<double> t(count);
    std::vector<double> v(count);
    for (std::size_t k = 0; k < count; ++k) {
        t[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(count - 1);
        v[k] = f(t[k]);
    }
    return {t, v};
}

}  // namespace testing
