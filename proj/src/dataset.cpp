#include <vector>

#include "qmode/dataset.hpp"
#include "qmode/errors.hpp"

namespace qmode {

Dataset Dataset::make(Eigen::MatrixXd X, Eigen::VectorXd Y) {
    if (X.rows() != Y.size()) {
        throw ArgumentError("Dataset: X has " + std::to_string(X.rows()) + " rows but Y has " +
                            std::to_string(Y.size()) + " entries");
    }
    if (X.cols() < 1 || X.rows() < X.cols()) {
        throw ArgumentError("Dataset: need n >= d >= 1");
    }
    if (!X.allFinite() || !Y.allFinite()) {
        throw ArgumentError("Dataset: non-finite entries");
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    if (qr.rank() < X.cols()) {
        throw EstimationError("Dataset: design matrix is rank deficient (rank " +
                              std::to_string(qr.rank()) + " < " + std::to_string(X.cols()) + ")");
    }
    return Dataset{std::move(X), std::move(Y)};
}

Dataset Dataset::affine_response(double a, double c) const {
    Dataset out{X, Y};
    out.Y = (a * Y.array() + c).matrix();
    return out;
}

Dataset Dataset::resample(const std::vector<Eigen::Index>& rows) const {
    Dataset out;
    out.X.resize(static_cast<Eigen::Index>(rows.size()), d());
    out.Y.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.X.row(static_cast<Eigen::Index>(i)) = X.row(rows[i]);
        out.Y(static_cast<Eigen::Index>(i)) = Y(rows[i]);
    }
    return out;
}

}  // namespace qmode
