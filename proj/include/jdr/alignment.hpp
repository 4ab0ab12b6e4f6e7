#pragma once

#include "jdr/spectral.hpp"

#include <Eigen/Dense>

namespace jdr {

/// Principal-angle profile between two L-dimensional subspaces of R^N.
/// `value` is the largest cosine, i.e. the spectral norm of V_L^T U_L.
struct AlignmentReport {
    int L = 0;
    double value = 0.0;
    Eigen::VectorXd principal_angle_cosines; // descending, in [0, 1]
};

/// Alignment between the span of the first L columns of each input.
/// Inputs are orthonormalized (thin QR) before measuring, so bases that are
/// only approximately orthonormal stay within [0, 1].
AlignmentReport subspace_alignment(const Eigen::MatrixXd& graph_basis,
                                   const Eigen::MatrixXd& feature_basis, int L);

AlignmentReport alignment(const SpectralBasis& va, const SvdBasis& ux, int L);

} // namespace jdr
