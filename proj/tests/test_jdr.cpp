#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "jdr/csbm.hpp"
#include "jdr/jdr.hpp"
#include "jdr/rng.hpp"

#include <Eigen/Dense>
#include <random>

using namespace jdr;

namespace {

Eigen::MatrixXd unit_col(int n, int idx) {
    Eigen::MatrixXd e = Eigen::MatrixXd::Zero(n, 1);
    e(idx, 0) = 1.0;
    return e;
}

/// Two weighted triangles {0,1,2} and {3,4,5} joined by one cross edge, with
/// community-indicator features (second block scaled to keep spectra simple).
Dataset two_triangle_dataset() {
    std::vector<WeightedEdge> edges{{0, 1, 1.0}, {0, 2, 1.0}, {1, 2, 1.0},
                                    {3, 4, 1.0}, {3, 5, 1.0}, {4, 5, 1.0},
                                    {2, 3, 1.0}};
    Dataset d;
    d.graph = Graph(6, edges, false);
    d.features = Eigen::MatrixXd::Zero(6, 2);
    for (int i = 0; i < 3; ++i) d.features(i, 0) = 1.0;
    for (int i = 3; i < 6; ++i) d.features(i, 1) = 0.9;
    d.name = "two_triangles";
    return d;
}

struct DenseState {
    Eigen::MatrixXd a;
    Eigen::MatrixXd x;
};

/// Independent dense reference for the main loop: full decompositions via
/// Eigen's direct solvers, the same matching rule re-implemented from
/// scratch, simultaneous commits.
DenseState dense_reference_jdr(const Dataset& d, const JdrConfig& cfg) {
    DenseState st{d.graph.dense_adjacency(), d.features};
    const int la = cfg.graph_rank;
    const int lx = cfg.feature_rank;
    for (int it = 0; it < cfg.iterations; ++it) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(st.a);
        // descending by value
        Eigen::VectorXd lam = es.eigenvalues().reverse();
        Eigen::MatrixXd v = es.eigenvectors().rowwise().reverse();
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(
            st.x, Eigen::ComputeThinU | Eigen::ComputeThinV);
        Eigen::MatrixXd u = svd.matrixU();
        Eigen::MatrixXd w = svd.matrixV();
        Eigen::VectorXd sig = svd.singularValues();

        Eigen::MatrixXd a_next = st.a;
        if (cfg.eta_A > 0.0) {
            for (int i = 0; i < la; ++i) {
                int best = 0;
                double best_abs = -1.0;
                for (int j = 0; j < la; ++j) {
                    double ip = std::abs(v.col(i).dot(u.col(j)));
                    if (ip > best_abs) {
                        best_abs = ip;
                        best = j;
                    }
                }
                double ip = v.col(i).dot(u.col(best));
                double sign = ip < 0 ? -1.0 : 1.0;
                Eigen::VectorXd vt =
                    (1.0 - cfg.eta_A) * v.col(i) + cfg.eta_A * sign * u.col(best);
                a_next += lam[i] * (vt * vt.transpose() -
                                    v.col(i) * v.col(i).transpose());
            }
        }
        Eigen::MatrixXd x_next = st.x;
        if (cfg.eta_X1 > 0.0) {
            for (int i = 0; i < lx; ++i) {
                int best = 0;
                double best_abs = -1.0;
                for (int j = 0; j < lx; ++j) {
                    double ip = std::abs(u.col(i).dot(v.col(j)));
                    if (ip > best_abs) {
                        best_abs = ip;
                        best = j;
                    }
                }
                double ip = u.col(i).dot(v.col(best));
                double sign = ip < 0 ? -1.0 : 1.0;
                Eigen::VectorXd ut =
                    (1.0 - cfg.eta_X1) * u.col(i) + cfg.eta_X1 * sign * v.col(best);
                x_next += sig[i] * (ut - u.col(i)) * w.col(i).transpose();
            }
        }
        st.a = a_next;
        st.x = x_next;
    }
    return st;
}

} // namespace

TEST_CASE("interpolate_basis handles the sign flip") {
    Eigen::MatrixXd t = unit_col(3, 0);
    Eigen::MatrixXd s = -unit_col(3, 0);
    auto res = interpolate_basis(t, s, 0.5);
    CHECK((res.vectors - t).cwiseAbs().maxCoeff() == 0.0);
    CHECK(res.matches[0].sign == -1);
}

TEST_CASE("interpolate_basis with eta 0 is the identity") {
    Eigen::MatrixXd t(4, 2);
    t << 1, 0, 0, 1, 0, 0, 0, 0;
    Eigen::MatrixXd s = unit_col(4, 3);
    auto res = interpolate_basis(t, s, 0.0);
    CHECK((res.vectors - t).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("interpolate_basis reuses a source for several targets") {
    Eigen::MatrixXd t(2, 2);
    t << 1, 0, 0, 1;
    Eigen::MatrixXd s(2, 1);
    s << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
    auto res = interpolate_basis(t, s, 1.0);
    CHECK((res.vectors.col(0) - s.col(0)).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((res.vectors.col(1) - s.col(0)).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(res.matches[0].source == 0);
    CHECK(res.matches[1].source == 0);
}

TEST_CASE("interpolate_basis breaks ties toward the smaller source index") {
    Eigen::MatrixXd t = unit_col(2, 0);
    Eigen::MatrixXd s(2, 2);
    s << 1, 1, 0, 0; // identical overlaps
    auto res = interpolate_basis(t, s, 0.5);
    CHECK(res.matches[0].source == 0);
}

TEST_CASE("rewire_step with eta 0 leaves the operator exactly equal to A") {
    Dataset d = two_triangle_dataset();
    AdjacencyOperator op(d.graph.adjacency());
    SpectralBasis eig = eigs_top(op, 2, EigenOrdering::by_value_desc);
    SvdBasis svd = svd_top(d.features, 2);
    JdrConfig cfg;
    cfg.eta_A = 0.0;
    cfg.graph_rank = 2;
    AdjacencyOperator out = rewire_step(op, eig, svd, cfg);
    CHECK(out.correction_rank() == 0);
    CHECK((out.to_dense() - d.graph.dense_adjacency()).cwiseAbs().maxCoeff() <=
          1e-12);
}

TEST_CASE("rewire_step fully replaces a rank-1 spectrum entry") {
    Eigen::SparseMatrix<double> a(3, 3);
    a.insert(0, 0) = 2.0;
    a.makeCompressed();
    AdjacencyOperator op(a);
    SpectralBasis eig = eigs_top(op, 1, EigenOrdering::by_value_desc);
    SvdBasis svd;
    svd.left_vectors = unit_col(3, 1);
    svd.singular_values = Eigen::VectorXd::Ones(1);
    svd.right_vectors = Eigen::MatrixXd::Ones(1, 1);
    JdrConfig cfg;
    cfg.eta_A = 1.0;
    cfg.graph_rank = 1;
    AdjacencyOperator out = rewire_step(op, eig, svd, cfg);
    Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(3, 3);
    expected(1, 1) = 2.0;
    CHECK((out.to_dense() - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("one rewire step shrinks the cross edge between communities") {
    Dataset d = two_triangle_dataset();
    JdrConfig cfg;
    cfg.iterations = 1;
    cfg.eta_A = 0.5;
    cfg.graph_rank = 2;
    cfg.eta_X1 = 0.0;
    cfg.eta_X2 = 0.0;
    DenseState ref = dense_reference_jdr(d, cfg);
    const double before = d.graph.dense_adjacency()(2, 3);
    CHECK(ref.a(2, 3) < before);

    // And the operator path agrees with the dense reference.
    AdjacencyOperator op(d.graph.adjacency());
    SpectralBasis eig = eigs_top(op, 2, EigenOrdering::by_value_desc);
    SvdBasis svd = svd_top(d.features, 2);
    AdjacencyOperator out = rewire_step(op, eig, svd, cfg);
    CHECK((out.to_dense() - ref.a).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("denoise_step with eta 0 keeps X exactly") {
    Dataset d = two_triangle_dataset();
    FeatureOperator op(d.features);
    SpectralBasis eig = eigs_top(d.graph.dense_adjacency(), 2,
                                 EigenOrdering::by_value_desc);
    SvdBasis svd = svd_top(d.features, 2);
    JdrConfig cfg;
    cfg.eta_X1 = 0.0;
    FeatureOperator out = denoise_step(op, svd, eig, cfg);
    CHECK(out.correction_rank() == 0);
    CHECK((out.to_dense() - d.features).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("denoise_step fully replaces a rank-1 left vector") {
    Eigen::VectorXd u = unit_col(4, 0), w(2);
    w << 0.6, 0.8;
    Eigen::MatrixXd x = u * w.transpose(); // sigma = 1
    FeatureOperator op(x);
    SvdBasis svd = svd_top(x, 1);
    SpectralBasis eig;
    eig.vectors = unit_col(4, 2); // orthogonal to u
    eig.values = Eigen::VectorXd::Ones(1);
    JdrConfig cfg;
    cfg.eta_X1 = 1.0;
    cfg.feature_rank = 1;
    FeatureOperator out = denoise_step(op, svd, eig, cfg);
    Eigen::MatrixXd expected = unit_col(4, 2) * w.transpose();
    CHECK((out.to_dense() - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("jdr_run with K=0 and identity updates is a no-op") {
    Dataset d = two_triangle_dataset();
    JdrConfig cfg;
    cfg.iterations = 0;
    cfg.eta_A = 0.0;
    cfg.eta_X1 = 0.0;
    cfg.eta_X2 = 0.0;
    cfg.top_k = 10; // above max degree
    JdrOutput out = jdr_run(d, cfg);
    CHECK(out.alignment_trace.size() == 1);
    CHECK(out.rewired_graph == d.graph);
    CHECK((out.denoised_features - d.features).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("identity configuration is a dataset no-op with weights preserved") {
    CsbmParams p = CsbmParams::from_phi(120, 60, 6.0, 0.5, 3.25, 5);
    Dataset d = sample_csbm(p);
    JdrConfig cfg;
    cfg.iterations = 3;
    cfg.eta_A = 0.0;
    cfg.eta_X1 = 0.0;
    cfg.eta_X2 = 0.0;
    cfg.top_k = d.graph.n_nodes();
    JdrOutput out = jdr_run(d, cfg);
    CHECK(out.rewired_graph == d.graph);
    CHECK((out.denoised_features - d.features).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("eta_A = 0 preserves the full operator even after decompositions") {
    Dataset d = two_triangle_dataset();
    AdjacencyOperator op(d.graph.adjacency());
    SpectralBasis eig = eigs_top(op, 3, EigenOrdering::by_value_desc);
    SvdBasis svd = svd_top(d.features, 2);
    JdrConfig cfg;
    cfg.eta_A = 0.0;
    cfg.graph_rank = 3;
    AdjacencyOperator out = rewire_step(op, eig, svd, cfg);
    CHECK((out.to_dense() - d.graph.dense_adjacency()).cwiseAbs().maxCoeff() <=
          1e-12);
}

TEST_CASE("three iterations match the dense reference implementation") {
    Dataset d = two_triangle_dataset();
    JdrConfig cfg;
    cfg.iterations = 3;
    cfg.eta_A = 0.5;
    cfg.graph_rank = 2;
    cfg.eta_X1 = 0.3;
    cfg.feature_rank = 2;
    cfg.eta_X2 = 1.0; // compare the synthesized features directly
    cfg.top_k = 6;    // keep every off-diagonal entry
    cfg.solver.tol = 1e-12;

    DenseState ref = dense_reference_jdr(d, cfg);
    JdrOutput out = jdr_run(d, cfg);

    // The reference graph goes through the same final sparsification.
    Graph ref_graph = top_k_sparsify(ref.a, cfg.top_k);
    CHECK((out.rewired_graph.dense_adjacency() - ref_graph.dense_adjacency())
              .cwiseAbs()
              .maxCoeff() < 1e-10);
    CHECK((out.denoised_features - ref.x).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(out.alignment_trace.size() == 4);
}

TEST_CASE("rewired operator stays numerically symmetric before sparsification") {
    Dataset d = two_triangle_dataset();
    AdjacencyOperator op(d.graph.adjacency());
    SpectralBasis eig = eigs_top(op, 2, EigenOrdering::by_value_desc);
    SvdBasis svd = svd_top(d.features, 2);
    JdrConfig cfg;
    cfg.eta_A = 0.7;
    cfg.graph_rank = 2;
    AdjacencyOperator out = rewire_step(op, eig, svd, cfg);
    Eigen::MatrixXd dense = out.dense_rows(0, 6);
    CHECK((dense - dense.transpose()).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("update_graph block size does not change the result") {
    Dataset d = two_triangle_dataset();
    AdjacencyOperator op(d.graph.adjacency());
    SpectralBasis eig = eigs_top(op, 2, EigenOrdering::by_value_desc);
    SvdBasis svd = svd_top(d.features, 2);
    JdrConfig cfg;
    cfg.eta_A = 0.5;
    cfg.graph_rank = 2;
    cfg.top_k = 3;
    AdjacencyOperator updated = rewire_step(op, eig, svd, cfg);

    cfg.update_block_rows = 1;
    Graph g1 = update_graph(updated, cfg);
    cfg.update_block_rows = 6;
    Graph g2 = update_graph(updated, cfg);
    CHECK(g1 == g2);
}

TEST_CASE("update_graph clamps top_k at N") {
    Dataset d = two_triangle_dataset();
    AdjacencyOperator op(d.graph.adjacency());
    JdrConfig cfg;
    cfg.top_k = 100;
    Graph g = update_graph(op, cfg);
    Eigen::MatrixXd expected = d.graph.dense_adjacency();
    expected.diagonal().setZero();
    CHECK((g.dense_adjacency() - expected).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("update_graph binarize mode keeps edges but levels weights") {
    std::vector<WeightedEdge> edges{{0, 1, 0.2}, {1, 2, 3.0}, {0, 2, 0.7}};
    Graph g(3, edges, false);
    AdjacencyOperator op(g.adjacency());
    JdrConfig cfg;
    cfg.top_k = 3;
    cfg.binarize_graph = true;
    Graph out = update_graph(op, cfg);
    CHECK(out.n_edges() == 3);
    for (auto& e : out.edges()) CHECK(e.w == 1.0);
}

TEST_CASE("update_features blends and binarizes") {
    Eigen::MatrixXd x0(2, 2), xt(2, 2);
    x0 << 1, 0, 0, 1;
    xt << 0, 1, 1, 0;
    FeatureOperator op(xt);
    JdrConfig cfg;

    cfg.eta_X2 = 0.0;
    CHECK((update_features(op, x0, cfg) - x0).cwiseAbs().maxCoeff() == 0.0);

    cfg.eta_X2 = 1.0;
    CHECK((update_features(op, x0, cfg) - xt).cwiseAbs().maxCoeff() == 0.0);

    cfg.eta_X2 = 0.5;
    Eigen::MatrixXd mid = update_features(op, x0, cfg);
    CHECK((mid.array() == 0.5).all());

    cfg.binarize_features = true;
    Eigen::MatrixXd bin = update_features(op, x0, cfg);
    CHECK((bin.array() == 1.0).all()); // 0.5 thresholds up
}

TEST_CASE("jdr_run is deterministic") {
    CsbmParams p = CsbmParams::from_phi(150, 60, 6.0, 0.0, 3.25, 9);
    Dataset d = sample_csbm(p);
    JdrConfig cfg;
    cfg.iterations = 4;
    cfg.eta_A = 1.0;
    cfg.graph_rank = 1;
    cfg.top_k = 16;
    cfg.solver.seed = 11;
    JdrOutput a = jdr_run(d, cfg);
    JdrOutput b = jdr_run(d, cfg);
    CHECK(a.rewired_graph == b.rewired_graph);
    CHECK((a.denoised_features - b.denoised_features).cwiseAbs().maxCoeff() == 0.0);
    CHECK(a.alignment_trace == b.alignment_trace);
}

TEST_CASE("full graph replacement drives the alignment trace upward") {
    // Pure-feature-signal regime: replacing the top eigenvector by the
    // leading feature direction should raise alignment monotonically at
    // first.
    CsbmParams p = CsbmParams::from_phi(500, 200, 5.0, 0.0, 3.25, 77);
    Dataset d = sample_csbm(p);
    JdrConfig cfg;
    cfg.iterations = 8;
    cfg.graph_rank = 1;
    cfg.eta_A = 1.0;
    cfg.top_k = 64;
    JdrOutput out = jdr_run(d, cfg);
    REQUIRE(out.alignment_trace.size() == 9);
    for (int t = 1; t <= 4; ++t)
        CHECK(out.alignment_trace[t] > out.alignment_trace[t - 1]);
    CHECK(out.alignment_trace.back() > 5 * out.alignment_trace.front());
}

TEST_CASE("gauss_seidel ordering runs and is deterministic") {
    Dataset d = two_triangle_dataset();
    JdrConfig cfg;
    cfg.iterations = 2;
    cfg.eta_A = 0.4;
    cfg.graph_rank = 2;
    cfg.eta_X1 = 0.3;
    cfg.feature_rank = 2;
    cfg.eta_X2 = 1.0;
    cfg.top_k = 6;
    cfg.gauss_seidel = true;
    JdrOutput a = jdr_run(d, cfg);
    JdrOutput b = jdr_run(d, cfg);
    CHECK(a.rewired_graph == b.rewired_graph);
    CHECK(a.alignment_trace.size() == 3);
}

TEST_CASE("jdr_run rejects all-zero features") {
    Dataset d;
    d.graph = Graph(3, {{0, 1, 1.0}}, false);
    d.features = Eigen::MatrixXd::Zero(3, 2);
    JdrConfig cfg;
    cfg.iterations = 1;
    CHECK_THROWS_WITH_AS(jdr_run(d, cfg), doctest::Contains("all zero"),
                         std::invalid_argument);
}

TEST_CASE("a denoise step pulls the leading feature vector toward the labels") {
    // Monte-Carlo check of the improvement direction on synthetic data with a
    // strong graph and weak features.
    const int n = 400, f = 160, trials = 20;
    double mean_before = 0.0, mean_after = 0.0;
    for (int t = 0; t < trials; ++t) {
        CsbmParams p = CsbmParams::from_phi(n, f, 10.0, 0.75, 3.25, 1000 + t);
        Dataset d = sample_csbm(p);
        Eigen::VectorXd y_tilde(n);
        for (int i = 0; i < n; ++i)
            y_tilde[i] = (d.labels->labels[i] == 0 ? -1.0 : 1.0) / std::sqrt(n);

        SvdBasis before = svd_top(d.features, 1);
        mean_before += std::abs(before.left_vectors.col(0).dot(y_tilde));

        JdrConfig cfg;
        cfg.iterations = 1;
        cfg.eta_A = 0.0;
        cfg.eta_X1 = 0.3;
        cfg.feature_rank = 2; // sources include the label-bearing eigenvector
        cfg.eta_X2 = 1.0;
        cfg.top_k = n;
        JdrOutput out = jdr_run(d, cfg);
        SvdBasis after = svd_top(out.denoised_features, 1);
        mean_after += std::abs(after.left_vectors.col(0).dot(y_tilde));
    }
    mean_before /= trials;
    mean_after /= trials;
    CHECK(mean_after > mean_before);
}
