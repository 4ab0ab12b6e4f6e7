#include "jdr/jdr.hpp"
#include "jdr/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace jdr {

// --- operators ---------------------------------------------------------------

AdjacencyOperator::AdjacencyOperator(Eigen::SparseMatrix<double> base)
    : n_(static_cast<int>(base.rows())), base_(std::move(base)) {
    if (base_.rows() != base_.cols())
        throw std::invalid_argument("AdjacencyOperator: base not square");
    corr_vecs_.resize(n_, 0);
    corr_coeffs_.resize(0);
}

void AdjacencyOperator::apply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const {
    y.resize(n_);
    y.noalias() = base_ * x;
    if (corr_coeffs_.size() > 0)
        y.noalias() += corr_vecs_ *
                       (corr_coeffs_.cwiseProduct(corr_vecs_.transpose() * x));
}

void AdjacencyOperator::add_spectral_swap(const Eigen::MatrixXd& old_vectors,
                                          const Eigen::VectorXd& values,
                                          const Eigen::MatrixXd& new_vectors) {
    const int l = static_cast<int>(values.size());
    if (old_vectors.cols() != l || new_vectors.cols() != l ||
        old_vectors.rows() != n_ || new_vectors.rows() != n_)
        throw std::invalid_argument("add_spectral_swap: shape mismatch");
    const int r = correction_rank();
    corr_vecs_.conservativeResize(n_, r + 2 * l);
    corr_coeffs_.conservativeResize(r + 2 * l);
    corr_vecs_.middleCols(r, l) = old_vectors;
    corr_vecs_.middleCols(r + l, l) = new_vectors;
    corr_coeffs_.segment(r, l) = -values;
    corr_coeffs_.segment(r + l, l) = values;
}

Eigen::MatrixXd AdjacencyOperator::dense_rows(int r0, int r1) const {
    Eigen::MatrixXd block = Eigen::MatrixXd::Zero(r1 - r0, n_);
    for (int i = r0; i < r1; ++i) {
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(base_, i);
             it; ++it)
            block(i - r0, it.col()) += it.value();
        if (corr_coeffs_.size() > 0)
            block.row(i - r0).noalias() +=
                (corr_vecs_ *
                 corr_coeffs_.cwiseProduct(corr_vecs_.row(i).transpose()))
                    .transpose();
    }
    return block;
}

Eigen::MatrixXd AdjacencyOperator::to_dense() const {
    Eigen::MatrixXd out(n_, n_);
    Eigen::MatrixXd full = dense_rows(0, n_);
    // Mirror the upper triangle so the result is exactly symmetric.
    for (int j = 0; j < n_; ++j)
        for (int i = 0; i <= j; ++i) {
            out(i, j) = full(i, j);
            out(j, i) = full(i, j);
        }
    return out;
}

FeatureOperator::FeatureOperator(Eigen::MatrixXd base) : base_(std::move(base)) {
    left_.resize(base_.rows(), 0);
    right_.resize(base_.cols(), 0);
}

void FeatureOperator::apply(const Eigen::VectorXd& w, Eigen::VectorXd& u) const {
    u.resize(base_.rows());
    u.noalias() = base_ * w;
    if (left_.cols() > 0) u.noalias() += left_ * (right_.transpose() * w);
}

void FeatureOperator::apply_t(const Eigen::VectorXd& u, Eigen::VectorXd& w) const {
    w.resize(base_.cols());
    w.noalias() = base_.transpose() * u;
    if (left_.cols() > 0) w.noalias() += right_ * (left_.transpose() * u);
}

void FeatureOperator::add_low_rank(const Eigen::MatrixXd& left,
                                   const Eigen::MatrixXd& right) {
    if (left.rows() != base_.rows() || right.rows() != base_.cols() ||
        left.cols() != right.cols())
        throw std::invalid_argument("add_low_rank: shape mismatch");
    const int r = correction_rank();
    const int l = static_cast<int>(left.cols());
    left_.conservativeResize(Eigen::NoChange, r + l);
    right_.conservativeResize(Eigen::NoChange, r + l);
    left_.rightCols(l) = left;
    right_.rightCols(l) = right;
}

Eigen::MatrixXd FeatureOperator::to_dense() const {
    Eigen::MatrixXd out = base_;
    if (left_.cols() > 0) out.noalias() += left_ * right_.transpose();
    return out;
}

// --- steps ------------------------------------------------------------------

InterpolationResult interpolate_basis(const Eigen::MatrixXd& targets,
                                      const Eigen::MatrixXd& sources,
                                      double eta) {
    if (targets.rows() != sources.rows())
        throw std::invalid_argument("interpolate_basis: row counts differ");
    if (sources.cols() < 1)
        throw std::invalid_argument("interpolate_basis: no source columns");

    InterpolationResult res;
    res.vectors.resize(targets.rows(), targets.cols());
    Eigen::MatrixXd inner = sources.transpose() * targets; // Ls x Lt
    for (int i = 0; i < targets.cols(); ++i) {
        int best = 0;
        double best_abs = -1.0;
        for (int j = 0; j < sources.cols(); ++j) {
            double a = std::abs(inner(j, i));
            if (a > best_abs) { // strict: ties keep the smaller j
                best_abs = a;
                best = j;
            }
        }
        const double ip = inner(best, i);
        const int sign = ip < 0.0 ? -1 : 1;
        res.vectors.col(i) =
            (1.0 - eta) * targets.col(i) + eta * sign * sources.col(best);
        res.matches.push_back({0, '?', i, best, ip, sign});
    }
    return res;
}

AdjacencyOperator rewire_step(const AdjacencyOperator& a,
                              const SpectralBasis& a_basis,
                              const SvdBasis& x_basis, const JdrConfig& cfg,
                              std::vector<BasisMatch>* matches) {
    AdjacencyOperator out = a;
    const int l = std::min<int>(cfg.graph_rank, a_basis.vectors.cols());
    const int ls = std::min<int>(cfg.graph_rank, x_basis.left_vectors.cols());
    if (cfg.eta_A == 0.0 || l < 1) return out; // basis unchanged, no correction
    auto interp = interpolate_basis(a_basis.vectors.leftCols(l),
                                    x_basis.left_vectors.leftCols(ls), cfg.eta_A);
    out.add_spectral_swap(a_basis.vectors.leftCols(l), a_basis.values.head(l),
                          interp.vectors);
    if (matches)
        for (auto& m : interp.matches) {
            m.side = 'A';
            matches->push_back(m);
        }
    return out;
}

FeatureOperator denoise_step(const FeatureOperator& x, const SvdBasis& x_basis,
                             const SpectralBasis& a_basis, const JdrConfig& cfg,
                             std::vector<BasisMatch>* matches) {
    FeatureOperator out = x;
    const int l = std::min<int>(cfg.feature_rank, x_basis.left_vectors.cols());
    const int ls = std::min<int>(cfg.feature_rank, a_basis.vectors.cols());
    if (cfg.eta_X1 == 0.0 || l < 1) return out;
    auto interp = interpolate_basis(x_basis.left_vectors.leftCols(l),
                                    a_basis.vectors.leftCols(ls), cfg.eta_X1);
    Eigen::MatrixXd delta =
        (interp.vectors - x_basis.left_vectors.leftCols(l)) *
        x_basis.singular_values.head(l).asDiagonal();
    out.add_low_rank(delta, x_basis.right_vectors.leftCols(l));
    if (matches)
        for (auto& m : interp.matches) {
            m.side = 'X';
            matches->push_back(m);
        }
    return out;
}

Graph update_graph(const AdjacencyOperator& a, const JdrConfig& cfg) {
    const int n = a.dim();
    if (cfg.top_k < 1) throw std::invalid_argument("update_graph: top_k must be >= 1");
    const int k = std::min(cfg.top_k, n);
    const int block = std::max(1, cfg.update_block_rows);
    std::vector<WeightedEdge> kept;
    kept.reserve(static_cast<std::size_t>(n) * k);
    for (int r0 = 0; r0 < n; r0 += block) {
        const int r1 = std::min(n, r0 + block);
        Eigen::MatrixXd rows = a.dense_rows(r0, r1);
        for (int i = r0; i < r1; ++i)
            top_k_select_row(rows.row(i - r0).transpose(), i, k, kept);
    }
    if (cfg.binarize_graph)
        for (auto& e : kept) e.w = 1.0;
    return symmetrize_union(n, std::move(kept));
}

FeatureMatrix update_features(const FeatureOperator& x_tilde,
                              const FeatureMatrix& x_original,
                              const JdrConfig& cfg) {
    FeatureMatrix out;
    if (cfg.eta_X2 == 0.0)
        out = x_original;
    else if (cfg.eta_X2 == 1.0)
        out = x_tilde.to_dense();
    else
        out = (1.0 - cfg.eta_X2) * x_original + cfg.eta_X2 * x_tilde.to_dense();
    if (cfg.binarize_features)
        out = (out.array() >= 0.5).cast<double>();
    return out;
}

// --- main loop -----------------------------------------------------------------

namespace {

void validate_config(const JdrConfig& cfg) {
    auto in_unit = [](double eta) { return eta >= 0.0 && eta <= 1.0; };
    if (!in_unit(cfg.eta_A) || !in_unit(cfg.eta_X1) || !in_unit(cfg.eta_X2))
        throw std::invalid_argument("JdrConfig: interpolation rates must be in [0,1]");
    if (cfg.iterations < 0)
        throw std::invalid_argument("JdrConfig: iterations must be >= 0");
    if (cfg.eta_A > 0.0 && cfg.graph_rank < 1)
        throw std::invalid_argument("JdrConfig: graph_rank must be >= 1 when eta_A > 0");
    if (cfg.eta_X1 > 0.0 && cfg.feature_rank < 1)
        throw std::invalid_argument("JdrConfig: feature_rank must be >= 1 when eta_X1 > 0");
    if (cfg.top_k < 1) throw std::invalid_argument("JdrConfig: top_k must be >= 1");
}

int resolve_trace_length(const Dataset& d, const JdrConfig& cfg) {
    const int n = d.graph.n_nodes();
    const int f = static_cast<int>(d.features.cols());
    int l = cfg.trace_L;
    if (l <= 0) {
        if (d.labels && d.labels->n_classes >= 1)
            l = d.labels->n_classes;
        else
            l = std::min(std::max({cfg.graph_rank, cfg.feature_rank, 1}), 16);
    }
    return std::max(1, std::min({l, n, f}));
}

} // namespace

JdrOutput jdr_run(const Dataset& d, const JdrConfig& cfg) {
    validate_config(cfg);
    validate_dataset(d);
    if (d.features.size() == 0 || d.features.cwiseAbs().maxCoeff() == 0.0)
        throw std::invalid_argument("jdr_run: features are all zero");

    const int n = d.graph.n_nodes();
    const int f = static_cast<int>(d.features.cols());
    const bool graph_active = cfg.eta_A > 0.0;
    const bool feature_active = cfg.eta_X1 > 0.0;
    const int trace_l = resolve_trace_length(d, cfg);

    const int need_eig = std::min(
        n, std::max({trace_l, graph_active ? cfg.graph_rank : 0,
                     feature_active ? cfg.feature_rank : 0, 1}));
    const int need_svd = std::min(
        std::min(n, f), std::max({trace_l, graph_active ? cfg.graph_rank : 0,
                                  feature_active ? cfg.feature_rank : 0, 1}));

    AdjacencyOperator a_op(d.graph.adjacency());
    FeatureOperator x_op(d.features);

    SpectralBasis a_basis;
    SvdBasis x_basis;
    int eig_epoch = 0, svd_epoch = 0;
    auto refresh_eig = [&]() {
        SolverConfig sc = cfg.solver;
        sc.seed = derive_seed(cfg.solver.seed, "jdr.eigs", eig_epoch++);
        a_basis = eigs_top(a_op, need_eig, cfg.ordering, sc);
    };
    auto refresh_svd = [&]() {
        SolverConfig sc = cfg.solver;
        sc.seed = derive_seed(cfg.solver.seed, "jdr.svd", svd_epoch++);
        x_basis = svd_top(x_op, need_svd, sc);
    };
    refresh_eig();
    refresh_svd();

    JdrOutput out;
    out.alignment_trace.reserve(cfg.iterations + 1);
    out.alignment_trace.push_back(
        subspace_alignment(a_basis.vectors, x_basis.left_vectors, trace_l).value);

    for (int t = 1; t <= cfg.iterations; ++t) {
        std::vector<BasisMatch> iter_matches;
        if (cfg.gauss_seidel) {
            x_op = denoise_step(x_op, x_basis, a_basis, cfg, &iter_matches);
            if (feature_active) refresh_svd();
            a_op = rewire_step(a_op, a_basis, x_basis, cfg, &iter_matches);
        } else {
            // Jacobi: both sides read the same iterate, then both commit.
            FeatureOperator x_next =
                denoise_step(x_op, x_basis, a_basis, cfg, &iter_matches);
            a_op = rewire_step(a_op, a_basis, x_basis, cfg, &iter_matches);
            x_op = std::move(x_next);
            if (feature_active) refresh_svd();
        }
        if (graph_active) refresh_eig();
        for (auto& m : iter_matches) {
            m.iteration = t;
            out.matching.push_back(m);
        }
        out.alignment_trace.push_back(
            subspace_alignment(a_basis.vectors, x_basis.left_vectors, trace_l)
                .value);
    }

    out.rewired_graph = update_graph(a_op, cfg);
    out.denoised_features = update_features(x_op, d.features, cfg);
    return out;
}

double dataset_alignment(const Dataset& d, int L, EigenOrdering ordering,
                         const SolverConfig& solver) {
    const int n = d.graph.n_nodes();
    const int f = static_cast<int>(d.features.cols());
    if (L < 1 || L > std::min(n, f))
        throw std::invalid_argument("dataset_alignment: L exceeds available columns");
    SolverConfig eig_sc = solver;
    eig_sc.seed = derive_seed(solver.seed, "align.eigs");
    AdjacencyOperator a_op(d.graph.adjacency());
    SpectralBasis a_basis = eigs_top(a_op, L, ordering, eig_sc);
    SolverConfig svd_sc = solver;
    svd_sc.seed = derive_seed(solver.seed, "align.svd");
    DenseRectOp x_op(d.features);
    SvdBasis x_basis = svd_top(x_op, L, svd_sc);
    return subspace_alignment(a_basis.vectors, x_basis.left_vectors, L).value;
}

std::vector<std::pair<std::string, double>>
alignment_sweep(const Dataset& d, int L, const JdrConfig* cfg) {
    std::vector<std::pair<std::string, double>> rows;
    const EigenOrdering ordering =
        cfg ? cfg->ordering : EigenOrdering::by_value_desc;
    const SolverConfig solver = cfg ? cfg->solver : SolverConfig{};
    rows.emplace_back("before", dataset_alignment(d, L, ordering, solver));
    if (cfg) {
        JdrOutput out = jdr_run(d, *cfg);
        Dataset after;
        after.graph = out.rewired_graph;
        after.features = out.denoised_features;
        after.labels = d.labels;
        after.name = d.name + "_jdr";
        rows.emplace_back("after", dataset_alignment(after, L, ordering, solver));
    }
    return rows;
}

} // namespace jdr
