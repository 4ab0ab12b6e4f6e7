#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "jdr/csbm.hpp"
#include "jdr/eval.hpp"
#include "jdr/rng.hpp"

#include <cmath>
#include <random>

using namespace jdr;

TEST_CASE("kmeans is deterministic and finds obvious clusters") {
    Eigen::MatrixXd pts(6, 1);
    pts << 0.0, 0.1, 0.05, 5.0, 5.1, 5.05;
    KmeansResult a = kmeans(pts, 2, 10, 300, 3);
    KmeansResult b = kmeans(pts, 2, 10, 300, 3);
    CHECK(a.assignments == b.assignments);
    CHECK(a.inertia == b.inertia);
    CHECK(a.assignments[0] == a.assignments[1]);
    CHECK(a.assignments[3] == a.assignments[4]);
    CHECK(a.assignments[0] != a.assignments[3]);
}

TEST_CASE("hungarian assignment on a known matrix") {
    Eigen::MatrixXd score(3, 3);
    score << 1, 9, 1,
             8, 1, 1,
             1, 1, 7;
    auto match = hungarian_max_assignment(score);
    CHECK(match == std::vector<int>{1, 0, 2});
}

TEST_CASE("hungarian agrees with exhaustive matching on random instances") {
    std::mt19937_64 rng(derive_seed(1, "hungarian"));
    std::uniform_real_distribution<double> unif(0.0, 10.0);
    for (int trial = 0; trial < 20; ++trial) {
        const int k = 5;
        Eigen::MatrixXd score(k, k);
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j) score(i, j) = unif(rng);
        auto match = hungarian_max_assignment(score);
        double got = 0.0;
        for (int i = 0; i < k; ++i) got += score(i, match[i]);

        std::vector<int> perm{0, 1, 2, 3, 4};
        double best = -1.0;
        do {
            double s = 0.0;
            for (int i = 0; i < k; ++i) s += score(i, perm[i]);
            best = std::max(best, s);
        } while (std::next_permutation(perm.begin(), perm.end()));
        CHECK(got == doctest::Approx(best).epsilon(1e-12));
    }
}

TEST_CASE("permutation matching never lowers raw agreement") {
    std::mt19937_64 rng(derive_seed(2, "acc"));
    std::uniform_int_distribution<int> cls(0, 3);
    LabelVector y;
    y.n_classes = 4;
    std::vector<int> assign;
    for (int i = 0; i < 200; ++i) {
        y.labels.push_back(cls(rng));
        assign.push_back(cls(rng));
    }
    double raw = 0.0;
    for (int i = 0; i < 200; ++i) raw += assign[i] == y.labels[i] ? 1.0 : 0.0;
    raw /= 200;
    CHECK(permutation_matched_accuracy(assign, y) >= raw);
}

TEST_CASE("accuracy is invariant under class relabeling") {
    LabelVector y;
    y.n_classes = 3;
    y.labels = {0, 0, 1, 1, 2, 2, 0, 1, 2};
    std::vector<int> assign{1, 1, 2, 2, 0, 0, 1, 2, 0};
    double acc = permutation_matched_accuracy(assign, y);
    CHECK(acc == 1.0);

    LabelVector y_relabeled;
    y_relabeled.n_classes = 3;
    for (int c : y.labels) y_relabeled.labels.push_back((c + 1) % 3);
    CHECK(permutation_matched_accuracy(assign, y_relabeled) == acc);
}

TEST_CASE("spectral clustering separates two disjoint cliques perfectly") {
    std::vector<WeightedEdge> edges;
    for (int i = 0; i < 10; ++i)
        for (int j = i + 1; j < 10; ++j) {
            edges.push_back({i, j, 1.0});
            edges.push_back({i + 10, j + 10, 1.0});
        }
    Graph g(20, edges, false);
    LabelVector y;
    y.n_classes = 2;
    for (int i = 0; i < 20; ++i) y.labels.push_back(i / 10);

    ClusteringOptions opts;
    opts.skip_first = false; // keep both component indicator vectors
    ClusteringResult res = spectral_cluster(g, 2, opts, &y);
    CHECK(res.accuracy == 1.0);
    CHECK(res.disconnected_warning);
    CHECK(res.n_components == 2);
}

TEST_CASE("feature clustering separates well-separated blobs") {
    std::mt19937_64 rng(derive_seed(4, "blobs"));
    std::normal_distribution<double> normal;
    const int n1 = 60, n2 = 40;
    Eigen::MatrixXd x(n1 + n2, 2);
    LabelVector y;
    y.n_classes = 2;
    for (int i = 0; i < n1; ++i) {
        x(i, 0) = normal(rng) * 0.3;
        x(i, 1) = normal(rng) * 0.3;
        y.labels.push_back(0);
    }
    for (int i = 0; i < n2; ++i) {
        x(n1 + i, 0) = 8.0 + normal(rng) * 0.3;
        x(n1 + i, 1) = 8.0 + normal(rng) * 0.3;
        y.labels.push_back(1);
    }
    ClusteringOptions opts;
    opts.seed = 17;
    ClusteringResult res = spectral_cluster_features(x, 2, 5, KnnMetric::euclidean,
                                                     opts, &y);
    CHECK(res.accuracy >= 0.95);
}

TEST_CASE("check_overlap_step with eta 0 reports exactly zero change") {
    OverlapStepReport rep =
        check_overlap_step(300, 120, 1.5, 2.0, 0.0, InterpSide::graph, 5, 42);
    CHECK(rep.mean_overlap_after == rep.mean_overlap_before);
    CHECK(rep.fraction_improved == 0.0);

    OverlapStepReport repx =
        check_overlap_step(300, 120, 1.5, 2.0, 0.0, InterpSide::features, 5, 42);
    CHECK(repx.mean_overlap_after == repx.mean_overlap_before);
}

TEST_CASE("check_overlap_step improves overlaps at moderate size") {
    // Small-scale version of the full acceptance run.
    OverlapStepReport rep =
        check_overlap_step(800, 320, 1.5, 2.0, 0.05, InterpSide::graph, 10, 7);
    CHECK(rep.above_transition);
    CHECK(rep.mean_overlap_after > rep.mean_overlap_before);
    OverlapStepReport repx =
        check_overlap_step(800, 320, 1.5, 2.0, 0.05, InterpSide::features, 10, 7);
    CHECK(repx.mean_overlap_after > repx.mean_overlap_before);
}

TEST_CASE("ridge limit: huge r drives the weights to zero") {
    GaussianCsbm g = sample_gaussian_csbm_nonsym(400, 200, 1.0, 1.0, 11);
    double mse = ridge_gcn_mse(g.a, g.x, g.y, 1e12);
    CHECK(mse == doctest::Approx(1.0).epsilon(1e-3)); // (1/N)||y||^2 = 1
}

TEST_CASE("ridge solves an exactly solvable rank-1 system") {
    // Z = A X has y in its column span, no noise.
    const int n = 50, f = 3;
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y[i] = i < n / 2 ? -1.0 : 1.0;
    Eigen::MatrixXd x(n, f);
    std::mt19937_64 rng(derive_seed(5, "ridge"));
    std::normal_distribution<double> normal;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < f; ++j) x(i, j) = normal(rng);
    x.col(0) = y; // A = I, omega = e_0 reproduces y exactly
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n);
    double mse = ridge_gcn_mse(a, x, y, 1e-8);
    CHECK(mse < 1e-6);
}

TEST_CASE("ridge matches an independent normal-equations oracle") {
    GaussianCsbm g = sample_gaussian_csbm_nonsym(1000, 500, 1.0, 1.0, 13);
    const double r = 0.5;
    double mse = ridge_gcn_mse(g.a, g.x, g.y, r);

    // Oracle: explicit dense solve with a different factorization.
    Eigen::MatrixXd z = g.a * g.x;
    Eigen::MatrixXd gram =
        z.transpose() * z + r * Eigen::MatrixXd::Identity(500, 500);
    Eigen::VectorXd omega = gram.fullPivLu().solve(z.transpose() * g.y);
    double oracle = (z * omega - g.y).squaredNorm() / 1000.0;
    CHECK(mse == doctest::Approx(oracle).epsilon(1e-8));
}

TEST_CASE("ridge mse is monotone non-decreasing in r") {
    GaussianCsbm g = sample_gaussian_csbm_nonsym(300, 150, 1.0, 1.0, 17);
    double prev = -1.0;
    for (double r : {1e-4, 1e-2, 1.0, 1e2, 1e4}) {
        double mse = ridge_gcn_mse(g.a, g.x, g.y, r);
        CHECK(mse >= prev - 1e-12);
        prev = mse;
    }
}

TEST_CASE("ridge r=0 on a singular system raises a helpful error") {
    // Rank-deficient Z: duplicate feature columns.
    const int n = 30;
    Eigen::MatrixXd x(n, 4);
    std::mt19937_64 rng(derive_seed(6, "sing"));
    std::normal_distribution<double> normal;
    for (int i = 0; i < n; ++i) {
        x(i, 0) = normal(rng);
        x(i, 1) = x(i, 0);
        x(i, 2) = normal(rng);
        x(i, 3) = x(i, 2);
    }
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd y = Eigen::VectorXd::Ones(n);
    CHECK_THROWS_WITH_AS(ridge_gcn_mse(a, x, y, 0.0), doctest::Contains("r > 0"),
                         std::runtime_error);
}

TEST_CASE("ridge_denoise_sweep eta=0 entry equals the baseline") {
    std::vector<double> grid{0.0, 0.1};
    RidgeMseReport rep =
        ridge_denoise_sweep(200, 100, 1.0, 1.0, DenoiseSide::A, grid, 3, 0.1, 23);
    // Recompute the baseline by hand for the same trials.
    double mean0 = 0.0;
    for (int t = 0; t < 3; ++t) {
        GaussianCsbm g = sample_gaussian_csbm_nonsym(
            200, 100, 1.0, 1.0, derive_seed(23, "ridge.trial", t));
        mean0 += ridge_gcn_mse(g.a, g.x, g.y, 0.1);
    }
    mean0 /= 3;
    CHECK(rep.points[0].mean_mse == doctest::Approx(mean0).epsilon(1e-12));
}
