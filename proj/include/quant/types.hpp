#pragma once

#include <Eigen/Dense>

#include <string>

#include "quant/errors.hpp"

namespace quant {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

// A finite candidate set: n points of dimension d, optionally with a
// parallel matrix of score evaluations (same shape).
struct CandidateSet {
    Matrix points;  // n x d
    Matrix scores;  // n x d when has_scores, else 0 x 0
    bool has_scores = false;
    std::string provenance;

    Index size() const { return points.rows(); }
    Index dim() const { return points.cols(); }

    void validate() const {
        if (points.rows() == 0) throw DataError("candidate set is empty");
        if (!points.allFinite())
            throw DataError("candidate set contains non-finite values");
        if (has_scores) {
            if (scores.rows() != points.rows() || scores.cols() != points.cols())
                throw DataError("score matrix shape " + std::to_string(scores.rows()) + "x" +
                                std::to_string(scores.cols()) + " does not match candidate shape " +
                                std::to_string(points.rows()) + "x" + std::to_string(points.cols()));
            if (!scores.allFinite()) throw DataError("score matrix contains non-finite values");
        }
    }
};

}  // namespace quant
