#include "qmode/quantile_regression.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>

#include "qmode/errors.hpp"

namespace qmode {

namespace {

void check_tau(double tau) {
    if (!(tau > 0.0 && tau < 1.0)) {
        std::ostringstream os;
        os << "quantile level must lie in (0,1), got " << tau;
        throw ArgumentError(os.str());
    }
}

struct Breakpoint {
    double t;
    double weight;
    Eigen::Index row;
    bool operator>(const Breakpoint& o) const { return t > o.t || (t == o.t && row > o.row); }
};

}  // namespace

double check_loss(const Dataset& data, const Eigen::VectorXd& beta, double tau) {
    const Eigen::VectorXd r = data.Y - data.X * beta;
    double loss = 0.0;
    for (Eigen::Index i = 0; i < r.size(); ++i) {
        loss += r(i) > 0.0 ? tau * r(i) : (tau - 1.0) * r(i);
    }
    return loss;
}

QuantileSolver::QuantileSolver(const Dataset& data, long max_iterations)
    : data_(data),
      max_iterations_(max_iterations > 0 ? max_iterations : 100 * static_cast<long>(data.n()) + 1000),
      zero_tol_(1e-10 * (1.0 + data.Y.cwiseAbs().maxCoeff())),
      in_basis_(static_cast<std::size_t>(data.n()), 0) {}

void QuantileSolver::cold_start() {
    const Eigen::Index n = data_.n();
    const Eigen::Index d = data_.d();
    const Eigen::VectorXd ls = data_.X.colPivHouseholderQr().solve(data_.Y);
    const Eigen::VectorXd r = (data_.Y - data_.X * ls).cwiseAbs();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return r(a) < r(b); });

    basis_.clear();
    std::fill(in_basis_.begin(), in_basis_.end(), 0);
    Eigen::MatrixXd rows(0, d);
    for (Eigen::Index i : order) {
        Eigen::MatrixXd trial(rows.rows() + 1, d);
        trial << rows, data_.X.row(i);
        Eigen::FullPivLU<Eigen::MatrixXd> lu(trial);
        lu.setThreshold(1e-10);
        if (lu.rank() == trial.rows()) {
            rows = std::move(trial);
            basis_.push_back(i);
            in_basis_[static_cast<std::size_t>(i)] = 1;
            if (static_cast<Eigen::Index>(basis_.size()) == d) break;
        }
    }
    if (static_cast<Eigen::Index>(basis_.size()) < d) {
        throw EstimationError("quantile regression: design matrix is rank deficient");
    }
}

bool QuantileSolver::refresh() {
    const Eigen::Index d = data_.d();
    Eigen::MatrixXd xb(d, d);
    Eigen::VectorXd yb(d);
    for (Eigen::Index j = 0; j < d; ++j) {
        xb.row(j) = data_.X.row(basis_[static_cast<std::size_t>(j)]);
        yb(j) = data_.Y(basis_[static_cast<std::size_t>(j)]);
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(xb);
    if (!lu.isInvertible()) return false;
    basis_inverse_ = lu.inverse();
    beta_ = basis_inverse_ * yb;
    residual_ = data_.Y - data_.X * beta_;
    for (Eigen::Index b : basis_) residual_(b) = 0.0;
    return true;
}

Eigen::VectorXd QuantileSolver::solve(double tau) {
    check_tau(tau);
    const Eigen::Index n = data_.n();
    const Eigen::Index d = data_.d();
    if (basis_.empty()) cold_start();
    if (!refresh()) {
        cold_start();
        if (!refresh()) throw EstimationError("quantile regression: singular starting basis");
    }

    std::vector<Breakpoint> heap;
    heap.reserve(static_cast<std::size_t>(n));
    long iter = 0;
    for (;; ++iter) {
        if (iter >= max_iterations_) {
            last_iterations_ = iter;
            throw ConvergenceError("quantile regression: no convergence after " + std::to_string(iter) +
                                       " basis exchanges",
                                   iter);
        }
        const Eigen::MatrixXd A = data_.X * basis_inverse_;

        // Directional derivatives along +/- each edge.
        Eigen::VectorXd slope_sum = Eigen::VectorXd::Zero(d);
        Eigen::VectorXd zero_plus = Eigen::VectorXd::Zero(d);
        Eigen::VectorXd zero_minus = Eigen::VectorXd::Zero(d);
        Eigen::VectorXd abs_sum = Eigen::VectorXd::Zero(d);
        for (Eigen::Index i = 0; i < n; ++i) {
            if (in_basis_[static_cast<std::size_t>(i)]) continue;
            const double r = residual_(i);
            if (std::abs(r) <= zero_tol_) {
                for (Eigen::Index j = 0; j < d; ++j) {
                    const double a = A(i, j);
                    zero_plus(j) += a < 0.0 ? -tau * a : (1.0 - tau) * a;
                    zero_minus(j) += a > 0.0 ? tau * a : -(1.0 - tau) * a;
                    abs_sum(j) += std::abs(a);
                }
            } else {
                const double g = r > 0.0 ? -tau : 1.0 - tau;
                for (Eigen::Index j = 0; j < d; ++j) {
                    slope_sum(j) += g * A(i, j);
                    abs_sum(j) += std::abs(A(i, j));
                }
            }
        }
        double best = 0.0;
        Eigen::Index best_j = -1;
        double best_sign = 0.0;
        for (Eigen::Index j = 0; j < d; ++j) {
            const double tol = 1e-11 * (1.0 + abs_sum(j));
            const double up = slope_sum(j) + zero_plus(j) + (1.0 - tau);
            const double down = -slope_sum(j) + zero_minus(j) + tau;
            if (up < -tol && up < best) {
                best = up;
                best_j = j;
                best_sign = 1.0;
            }
            if (down < -tol && down < best) {
                best = down;
                best_j = j;
                best_sign = -1.0;
            }
        }
        if (best_j < 0) break;

        // Line search over residual sign changes along the chosen edge.
        heap.clear();
        double max_b = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (!in_basis_[static_cast<std::size_t>(i)]) max_b = std::max(max_b, std::abs(A(i, best_j)));
        }
        const double b_floor = 1e-13 * max_b;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (in_basis_[static_cast<std::size_t>(i)]) continue;
            const double r = residual_(i);
            if (std::abs(r) <= zero_tol_) continue;
            const double b = best_sign * A(i, best_j);
            if (std::abs(b) <= b_floor) continue;
            const double t = r / b;
            if (t > 0.0) heap.push_back({t, std::abs(b), i});
        }
        std::make_heap(heap.begin(), heap.end(), std::greater<>{});
        double slope = best;
        Eigen::Index entering = -1;
        while (!heap.empty()) {
            std::pop_heap(heap.begin(), heap.end(), std::greater<>{});
            const Breakpoint bp = heap.back();
            heap.pop_back();
            slope += bp.weight;
            if (slope >= 0.0) {
                entering = bp.row;
                break;
            }
        }
        if (entering < 0) {
            throw EstimationError("quantile regression: unbounded descent direction");
        }
        const Eigen::Index leaving = basis_[static_cast<std::size_t>(best_j)];
        in_basis_[static_cast<std::size_t>(leaving)] = 0;
        in_basis_[static_cast<std::size_t>(entering)] = 1;
        basis_[static_cast<std::size_t>(best_j)] = entering;
        if (!refresh()) {
            throw EstimationError("quantile regression: basis became singular");
        }
    }
    last_iterations_ = iter;
    return beta_;
}

Eigen::VectorXd fit_quantile(const Dataset& data, double tau) {
    check_tau(tau);
    QuantileSolver solver(data);
    return solver.solve(tau);
}

std::vector<double> QuantilePath::fitted(const Eigen::VectorXd& x) const {
    if (x.size() != betas.cols()) {
        throw ArgumentError("design point has dimension " + std::to_string(x.size()) + ", path has " +
                            std::to_string(betas.cols()));
    }
    const Eigen::VectorXd v = betas * x;
    return std::vector<double>(v.data(), v.data() + v.size());
}

QuantilePath fit_path(const Dataset& data, const std::vector<double>& taus, double epsilon) {
    if (taus.empty()) throw ArgumentError("fit_path: empty tau grid");
    for (std::size_t k = 0; k < taus.size(); ++k) {
        check_tau(taus[k]);
        if (k > 0 && !(taus[k] > taus[k - 1])) throw ArgumentError("fit_path: taus must be strictly increasing");
    }
    QuantilePath path;
    path.taus = taus;
    path.epsilon = epsilon;
    path.betas.resize(static_cast<Eigen::Index>(taus.size()), data.d());
    QuantileSolver solver(data);
    for (std::size_t k = 0; k < taus.size(); ++k) {
        try {
            path.betas.row(static_cast<Eigen::Index>(k)) = solver.solve(taus[k]).transpose();
        } catch (const ConvergenceError& e) {
            std::ostringstream os;
            os << e.what() << " (tau = " << taus[k] << ")";
            throw ConvergenceError(os.str(), e.iterations());
        } catch (const EstimationError& e) {
            std::ostringstream os;
            os << e.what() << " (tau = " << taus[k] << ")";
            throw EstimationError(os.str());
        }
    }
    return path;
}

std::vector<std::size_t> crossing_diagnostic(const QuantilePath& path, const Eigen::VectorXd& x) {
    const std::vector<double> q = path.fitted(x);
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k + 1 < q.size(); ++k) {
        if (q[k + 1] < q[k]) out.push_back(k);
    }
    return out;
}

std::vector<double> uniform_grid(double lo, double hi, double max_step) {
    if (!(hi >= lo) || !(max_step > 0.0)) throw ArgumentError("uniform_grid: invalid range or step");
    const auto cells = static_cast<std::size_t>(std::max(1.0, std::ceil((hi - lo) / max_step - 1e-9)));
    std::vector<double> grid(cells + 1);
    for (std::size_t k = 0; k <= cells; ++k) {
        grid[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(cells);
    }
    grid.back() = hi;
    return grid;
}

}  // namespace qmode
