#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "jdr/alignment.hpp"
#include "jdr/csbm.hpp"
#include "jdr/jdr.hpp"
#include "jdr/rng.hpp"

#include <Eigen/Dense>
#include <random>

using namespace jdr;

namespace {

Eigen::MatrixXd random_orthonormal(int n, int l, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    Eigen::MatrixXd m(n, l);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < l; ++j) m(i, j) = normal(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
    return qr.householderQ() * Eigen::MatrixXd::Identity(n, l);
}

} // namespace

TEST_CASE("identical subspaces have alignment 1") {
    Eigen::MatrixXd q = random_orthonormal(10, 2, 1);
    auto rep = subspace_alignment(q, q, 2);
    CHECK(rep.value == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(rep.principal_angle_cosines[1] == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("orthogonal one-dimensional subspaces have alignment 0") {
    Eigen::MatrixXd e1 = Eigen::MatrixXd::Zero(4, 1);
    Eigen::MatrixXd e2 = Eigen::MatrixXd::Zero(4, 1);
    e1(0, 0) = 1.0;
    e2(1, 0) = 1.0;
    CHECK(subspace_alignment(e1, e2, 1).value == doctest::Approx(0.0));
}

TEST_CASE("analytic 45-degree angle") {
    Eigen::MatrixXd e1 = Eigen::MatrixXd::Zero(4, 1);
    Eigen::MatrixXd diag = Eigen::MatrixXd::Zero(4, 1);
    e1(0, 0) = 1.0;
    diag(0, 0) = diag(1, 0) = 1.0 / std::sqrt(2.0);
    CHECK(subspace_alignment(e1, diag, 1).value ==
          doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("alignment is invariant under rotations of either basis") {
    std::mt19937_64 rng(derive_seed(3, "rot"));
    std::normal_distribution<double> normal;
    const int n = 40, l = 3;
    Eigen::MatrixXd va = random_orthonormal(n, l, 10);
    Eigen::MatrixXd ux = random_orthonormal(n, l, 11);
    double base = subspace_alignment(va, ux, l).value;
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::MatrixXd g(l, l), h(l, l);
        for (int i = 0; i < l; ++i)
            for (int j = 0; j < l; ++j) {
                g(i, j) = normal(rng);
                h(i, j) = normal(rng);
            }
        Eigen::HouseholderQR<Eigen::MatrixXd> qg(g), qh(h);
        Eigen::MatrixXd q = qg.householderQ() * Eigen::MatrixXd::Identity(l, l);
        Eigen::MatrixXd r = qh.householderQ() * Eigen::MatrixXd::Identity(l, l);
        double rotated = subspace_alignment(va * q, ux * r, l).value;
        CHECK(std::abs(rotated - base) < 1e-10);
    }
}

TEST_CASE("range stays in [0, 1] and errors on oversized L") {
    Eigen::MatrixXd va = random_orthonormal(25, 4, 5);
    Eigen::MatrixXd ux = random_orthonormal(25, 4, 6);
    auto rep = subspace_alignment(va, ux, 4);
    for (int i = 0; i < 4; ++i) {
        CHECK(rep.principal_angle_cosines[i] >= 0.0);
        CHECK(rep.principal_angle_cosines[i] <= 1.0 + 1e-10);
    }
    CHECK_THROWS_AS(subspace_alignment(va, ux, 5), std::invalid_argument);
}

TEST_CASE("approximately orthonormal inputs are re-orthonormalized") {
    // Scaled and slightly mixed columns must not push the value above 1.
    Eigen::MatrixXd q = random_orthonormal(30, 2, 9);
    Eigen::MatrixXd skewed = q;
    skewed.col(0) = 3.0 * q.col(0) + 0.1 * q.col(1);
    auto rep = subspace_alignment(skewed, q, 2);
    CHECK(rep.value <= 1.0 + 1e-10);
    CHECK(rep.value == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("typed alignment overload reads the basis factors") {
    CsbmParams p = CsbmParams::from_phi(200, 80, 6.0, 0.75, 3.25, 13);
    Dataset d = sample_csbm(p);
    SpectralBasis va = eigs_top(d.graph.adjacency(), 3,
                                EigenOrdering::by_value_desc);
    SvdBasis ux = svd_top(d.features, 3);
    AlignmentReport rep = alignment(va, ux, 2);
    CHECK(rep.L == 2);
    CHECK(rep.value ==
          subspace_alignment(va.vectors, ux.left_vectors, 2).value);
    CHECK_THROWS_AS(alignment(va, ux, 4), std::invalid_argument);
}

TEST_CASE("alignment_sweep with an identity config changes nothing") {
    CsbmParams p = CsbmParams::from_phi(300, 120, 5.0, 0.5, 3.25, 77);
    Dataset d = sample_csbm(p);
    JdrConfig cfg;
    cfg.iterations = 2;
    cfg.eta_A = 0.0;
    cfg.eta_X1 = 0.0;
    cfg.eta_X2 = 0.0;
    cfg.top_k = 10000; // above max degree: sparsification keeps everything
    auto rows = alignment_sweep(d, 2, &cfg);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].first == "before");
    CHECK(rows[1].first == "after");
    CHECK(std::abs(rows[0].second - rows[1].second) < 1e-10);
}

TEST_CASE("unrelated graph and features align weakly") {
    // Null behavior: an unstructured graph and pure-noise features.
    std::mt19937_64 rng(derive_seed(8, "null"));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> normal;
    const int n = 500;
    double worst = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<WeightedEdge> edges;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                if (unif(rng) < 8.0 / n) edges.push_back({i, j, 1.0});
        Dataset d;
        d.graph = Graph(n, edges, false);
        d.features.resize(n, 120);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < 120; ++j) d.features(i, j) = normal(rng);
        auto rows = alignment_sweep(d, 2, nullptr);
        worst = std::max(worst, rows[0].second);
    }
    CHECK(worst < 0.2);
}
