#pragma once

#include "jdr/alignment.hpp"
#include "jdr/graph.hpp"
#include "jdr/spectral.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <vector>

namespace jdr {

/**
 * Adjacency of the current iterate, kept as the original sparse matrix plus
 * an accumulated symmetric low-rank correction  base + P diag(c) P^T.
 * The spectral remainder of the original matrix is never truncated.
 */
class AdjacencyOperator final : public SymOp {
public:
    explicit AdjacencyOperator(Eigen::SparseMatrix<double> base);

    int dim() const override { return n_; }
    void apply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const override;

    /// Record sum_i values[i] * (-old_i old_i^T + new_i new_i^T).
    void add_spectral_swap(const Eigen::MatrixXd& old_vectors,
                           const Eigen::VectorXd& values,
                           const Eigen::MatrixXd& new_vectors);

    int correction_rank() const { return static_cast<int>(corr_coeffs_.size()); }

    /// Dense rows [r0, r1). Each row is computed independently, so the
    /// result does not depend on how callers block the row range.
    Eigen::MatrixXd dense_rows(int r0, int r1) const;
    Eigen::MatrixXd to_dense() const; // exactly symmetric

private:
    int n_ = 0;
    Eigen::SparseMatrix<double, Eigen::RowMajor> base_;
    Eigen::MatrixXd corr_vecs_;   // n x r
    Eigen::VectorXd corr_coeffs_; // r
};

/**
 * Features of the current iterate: dense base plus low-rank correction
 * base + P Q^T, preserving the untouched part of the spectrum exactly.
 */
class FeatureOperator final : public RectOp {
public:
    explicit FeatureOperator(Eigen::MatrixXd base);

    int rows() const override { return static_cast<int>(base_.rows()); }
    int cols() const override { return static_cast<int>(base_.cols()); }
    void apply(const Eigen::VectorXd& w, Eigen::VectorXd& u) const override;
    void apply_t(const Eigen::VectorXd& u, Eigen::VectorXd& w) const override;

    void add_low_rank(const Eigen::MatrixXd& left, const Eigen::MatrixXd& right);
    int correction_rank() const { return static_cast<int>(left_.cols()); }

    Eigen::MatrixXd to_dense() const;

private:
    Eigen::MatrixXd base_;  // N x F
    Eigen::MatrixXd left_;  // N x r
    Eigen::MatrixXd right_; // F x r
};

struct JdrConfig {
    int iterations = 0;       // K
    int graph_rank = 1;       // eigenvectors of A interpolated per iteration
    int feature_rank = 1;     // singular vectors of X interpolated per iteration
    double eta_A = 0.0;       // graph interpolation rate; 0 = side inactive
    double eta_X1 = 0.0;      // feature interpolation rate; 0 = side inactive
    double eta_X2 = 0.0;      // final original-vs-denoised feature blend
    int top_k = 64;           // entries kept per node when densifying A
    EigenOrdering ordering = EigenOrdering::by_value_desc;
    bool binarize_features = false; // threshold blended features at 0.5
    bool binarize_graph = false;    // emit surviving edges with weight 1
    SolverConfig solver;
    int trace_L = 0;          // alignment-trace subspace dim; 0 = auto
    bool gauss_seidel = false; // rewire sees the freshly denoised features
    int update_block_rows = 256;
};

struct BasisMatch {
    int iteration = 0;
    char side = 'A'; // 'A' = rewire, 'X' = denoise
    int target = 0;
    int source = 0;
    double inner = 0.0;
    int sign = 1;
};

struct JdrOutput {
    Graph rewired_graph;
    FeatureMatrix denoised_features;
    std::vector<double> alignment_trace; // length K+1
    std::vector<BasisMatch> matching;
};

struct InterpolationResult {
    Eigen::MatrixXd vectors;
    std::vector<BasisMatch> matches;
};

/// For each target column, pick the source column of largest |<t, s>| (ties
/// to the smaller index; zero overlap counts as +1 sign) and form
/// (1 - eta) t + eta sign(<t, s>) s.  Outputs are not renormalized and the
/// same source may be reused by several targets.
InterpolationResult interpolate_basis(const Eigen::MatrixXd& targets,
                                      const Eigen::MatrixXd& sources, double eta);

/// One graph update A <- A + sum_i lambda_i (-v_i v_i^T + v~_i v~_i^T).
AdjacencyOperator rewire_step(const AdjacencyOperator& a,
                              const SpectralBasis& a_basis,
                              const SvdBasis& x_basis, const JdrConfig& cfg,
                              std::vector<BasisMatch>* matches = nullptr);

/// One feature update X <- X + sum_i sigma_i (u~_i - u_i) w_i^T.
FeatureOperator denoise_step(const FeatureOperator& x, const SvdBasis& x_basis,
                             const SpectralBasis& a_basis, const JdrConfig& cfg,
                             std::vector<BasisMatch>* matches = nullptr);

/// Densify the adjacency operator in row blocks and keep the top-k entries
/// per node (weighted output graph).
Graph update_graph(const AdjacencyOperator& a, const JdrConfig& cfg);

/// Final feature update (1 - eta_X2) X_original + eta_X2 X~, optionally
/// binarized at 0.5.
FeatureMatrix update_features(const FeatureOperator& x_tilde,
                              const FeatureMatrix& x_original,
                              const JdrConfig& cfg);

/// Run the full algorithm: K joint interpolation rounds (both sides read the
/// same iterate), then the final graph/feature updates.
JdrOutput jdr_run(const Dataset& d, const JdrConfig& cfg);

/// Alignment between the leading L-dim eigenspace of the graph and left
/// singular space of the features.
double dataset_alignment(const Dataset& d, int L, EigenOrdering ordering,
                         const SolverConfig& solver = {});

/// Alignment before and (when a config is supplied) after running the
/// algorithm, as (condition, value) rows.
std::vector<std::pair<std::string, double>>
alignment_sweep(const Dataset& d, int L, const JdrConfig* cfg = nullptr);

} // namespace jdr
