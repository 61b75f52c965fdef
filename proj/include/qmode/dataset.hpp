#pragma once

#include <vector>

#include <Eigen/Dense>

namespace qmode {

//! Observed sample: design matrix X (n x d, intercept first by convention) and response Y.
struct Dataset {
    Eigen::MatrixXd X;
    Eigen::VectorXd Y;

    Eigen::Index n() const { return X.rows(); }
    Eigen::Index d() const { return X.cols(); }

    //! Validates shape, finiteness and full column rank.
    static Dataset make(Eigen::MatrixXd X, Eigen::VectorXd Y);

    //! Same X with Y replaced by a * Y + c.
    Dataset affine_response(double a, double c) const;

    //! Rows selected by index (with repetition), no rank check.
    Dataset resample(const std::vector<Eigen::Index>& rows) const;
};

}  // namespace qmode
