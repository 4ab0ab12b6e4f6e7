#include "jdr/alignment.hpp"

#include <stdexcept>

namespace jdr {

namespace {

Eigen::MatrixXd orthonormal_columns(const Eigen::MatrixXd& m) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
    Eigen::MatrixXd q = qr.householderQ() *
                        Eigen::MatrixXd::Identity(m.rows(), m.cols());
    return q;
}

} // namespace

AlignmentReport subspace_alignment(const Eigen::MatrixXd& graph_basis,
                                   const Eigen::MatrixXd& feature_basis, int L) {
    if (graph_basis.rows() != feature_basis.rows())
        throw std::invalid_argument("subspace_alignment: row counts differ");
    if (L < 1 || L > graph_basis.cols() || L > feature_basis.cols())
        throw std::invalid_argument("subspace_alignment: L exceeds available columns");

    Eigen::MatrixXd qa = orthonormal_columns(graph_basis.leftCols(L));
    Eigen::MatrixXd qb = orthonormal_columns(feature_basis.leftCols(L));
    Eigen::MatrixXd overlap = qa.transpose() * qb; // L x L
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(overlap);

    AlignmentReport report;
    report.L = L;
    report.principal_angle_cosines = svd.singularValues();
    report.value = report.principal_angle_cosines[0];
    return report;
}

AlignmentReport alignment(const SpectralBasis& va, const SvdBasis& ux, int L) {
    return subspace_alignment(va.vectors, ux.left_vectors, L);
}

} // namespace jdr
