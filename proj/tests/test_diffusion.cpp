#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "jdr/diffusion.hpp"
#include "jdr/rng.hpp"

#include <Eigen/Dense>
#include <random>

using namespace jdr;

TEST_CASE("alpha = 1 is the identity kernel and empties the graph") {
    Graph g(4, {{0, 1, 1.0}, {1, 2, 1.0}, {2, 3, 1.0}}, false);
    DiglConfig cfg;
    cfg.alpha = 1.0;
    cfg.top_k = 64;
    PprResult res = ppr_diffuse(g, cfg);
    CHECK(res.identity_kernel);
    CHECK(res.graph.n_edges() == 0);
}

TEST_CASE("alpha = 0 is rejected") {
    Graph g(2, {{0, 1, 1.0}}, false);
    DiglConfig cfg;
    cfg.alpha = 0.0;
    CHECK_THROWS_AS(ppr_diffuse(g, cfg), std::invalid_argument);
}

TEST_CASE("two-node kernel matches the closed-form inverse") {
    // Single edge: T = [[0,1],[1,0]], S = a (I - (1-a) T)^{-1}
    //            = a / (1 - (1-a)^2) * [[1, 1-a], [1-a, 1]].
    Graph g(2, {{0, 1, 1.0}}, false);
    DiglConfig cfg;
    cfg.alpha = 0.5;
    cfg.top_k = 2;
    cfg.tol = 1e-14;
    PprResult res = ppr_diffuse(g, cfg);
    const double a = 0.5;
    const double off = a * (1 - a) / (1 - (1 - a) * (1 - a));
    Eigen::MatrixXd got = res.graph.dense_adjacency();
    CHECK(got(0, 1) == doctest::Approx(off).epsilon(1e-10));
    CHECK(got(1, 0) == doctest::Approx(off).epsilon(1e-10));
    // Diagonal entries are dropped by sparsification.
    CHECK(got(0, 0) == 0.0);
}

TEST_CASE("diffusion adds edges on a connected graph") {
    // 100-node planted-partition graph; keep everything (top_k = N) and check
    // the result is strictly denser than the input.
    std::mt19937_64 rng(derive_seed(9, "sbm"));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const int n = 100;
    std::vector<WeightedEdge> edges;
    // ring backbone guarantees connectivity
    for (int i = 0; i < n; ++i) edges.push_back({i, (i + 1) % n, 1.0});
    for (int i = 0; i < n; ++i)
        for (int j = i + 2; j < n; ++j) {
            bool same = (i < n / 2) == (j < n / 2);
            if (unif(rng) < (same ? 0.08 : 0.01)) edges.push_back({i, j, 1.0});
        }
    Graph g(n, edges, false);
    REQUIRE(g.n_components() == 1);

    DiglConfig cfg;
    cfg.alpha = 0.05;
    cfg.top_k = n;
    cfg.tol = 1e-10;
    PprResult res = ppr_diffuse(g, cfg);
    CHECK(res.graph.n_edges() > g.n_edges());
    // Kernel entries are nonnegative.
    for (auto& e : res.graph.edges()) CHECK(e.w >= 0.0);
}

TEST_CASE("column solves are symmetric and independent of order") {
    Graph g(5, {{0, 1, 1.0}, {1, 2, 2.0}, {2, 3, 1.0}, {3, 4, 1.0}, {0, 4, 0.5}},
            false);
    DiglConfig cfg;
    cfg.alpha = 0.2;
    cfg.top_k = 5;
    cfg.tol = 1e-13;
    PprResult a = ppr_diffuse(g, cfg);
    PprResult b = ppr_diffuse(g, cfg);
    CHECK(a.graph == b.graph);
    Eigen::MatrixXd m = a.graph.dense_adjacency();
    CHECK((m - m.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("isolated nodes get a self-loop before normalization") {
    Graph g(3, {{0, 1, 1.0}}, false); // node 2 isolated
    DiglConfig cfg;
    cfg.alpha = 0.3;
    cfg.top_k = 3;
    PprResult res = ppr_diffuse(g, cfg); // must not divide by zero
    CHECK(res.graph.n_nodes() == 3);
}
