#include "jdr/eval.hpp"
#include "jdr/csbm.hpp"
#include "jdr/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace jdr {

// --- k-means -----------------------------------------------------------------

namespace {

double squared_distance(const Eigen::MatrixXd& pts, int i,
                        const Eigen::MatrixXd& centers, int c) {
    return (pts.row(i) - centers.row(c)).squaredNorm();
}

KmeansResult kmeans_single(const Eigen::MatrixXd& pts, int k, int max_iter,
                           std::mt19937_64& rng) {
    const int n = static_cast<int>(pts.rows());
    const int d = static_cast<int>(pts.cols());
    Eigen::MatrixXd centers(k, d);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    // k-means++ seeding
    std::uniform_int_distribution<int> pick(0, n - 1);
    centers.row(0) = pts.row(pick(rng));
    Eigen::VectorXd min_d2 =
        (pts.rowwise() - centers.row(0)).rowwise().squaredNorm();
    for (int c = 1; c < k; ++c) {
        double total = min_d2.sum();
        int chosen = 0;
        if (total > 0.0) {
            double target = unif(rng) * total;
            double acc = 0.0;
            chosen = n - 1;
            for (int i = 0; i < n; ++i) {
                acc += min_d2[i];
                if (acc >= target) {
                    chosen = i;
                    break;
                }
            }
        } else {
            chosen = pick(rng);
        }
        centers.row(c) = pts.row(chosen);
        min_d2 = min_d2.cwiseMin(
            (pts.rowwise() - centers.row(c)).rowwise().squaredNorm());
    }

    std::vector<int> assign(n, 0);
    std::vector<int> counts(k, 0);
    for (int iter = 0; iter < max_iter; ++iter) {
        bool changed = false;
        for (int i = 0; i < n; ++i) {
            int best = 0;
            double best_d = squared_distance(pts, i, centers, 0);
            for (int c = 1; c < k; ++c) {
                double dc = squared_distance(pts, i, centers, c);
                if (dc < best_d) {
                    best_d = dc;
                    best = c;
                }
            }
            if (assign[i] != best) {
                assign[i] = best;
                changed = true;
            }
        }
        std::fill(counts.begin(), counts.end(), 0);
        centers.setZero();
        for (int i = 0; i < n; ++i) {
            centers.row(assign[i]) += pts.row(i);
            counts[assign[i]]++;
        }
        for (int c = 0; c < k; ++c)
            if (counts[c] > 0) centers.row(c) /= counts[c];
        for (int c = 0; c < k; ++c) {
            if (counts[c] == 0) {
                // Re-seed an empty cluster at the point farthest from its
                // (already normalized) center.
                int far = 0;
                double far_d = -1.0;
                for (int i = 0; i < n; ++i) {
                    if (counts[assign[i]] == 0) continue;
                    double di = squared_distance(pts, i, centers, assign[i]);
                    if (di > far_d) {
                        far_d = di;
                        far = i;
                    }
                }
                centers.row(c) = pts.row(far);
                changed = true;
            }
        }
        if (!changed && iter > 0) break;
    }

    double inertia = 0.0;
    for (int i = 0; i < n; ++i)
        inertia += squared_distance(pts, i, centers, assign[i]);
    return {std::move(assign), inertia};
}

} // namespace

KmeansResult kmeans(const Eigen::MatrixXd& points, int k, int restarts,
                    int max_iter, std::uint64_t seed) {
    if (k < 1 || k > points.rows())
        throw std::invalid_argument("kmeans: need 1 <= k <= n_points");
    KmeansResult best;
    best.inertia = std::numeric_limits<double>::infinity();
    for (int r = 0; r < std::max(1, restarts); ++r) {
        auto rng = make_rng(seed, "kmeans.restart", r);
        KmeansResult cur = kmeans_single(points, k, max_iter, rng);
        if (cur.inertia < best.inertia) best = std::move(cur);
    }
    return best;
}

// --- assignment matching -------------------------------------------------------

std::vector<int> hungarian_max_assignment(const Eigen::MatrixXd& score) {
    if (score.rows() != score.cols())
        throw std::invalid_argument("hungarian_max_assignment: matrix not square");
    const int n = static_cast<int>(score.rows());
    // Classic O(n^3) potentials formulation on the minimization problem.
    Eigen::MatrixXd cost = -score;
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<char> used(n + 1, false);
        do {
            used[j0] = true;
            int i0 = p[j0], j1 = 0;
            double delta = inf;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    std::vector<int> match(n, -1);
    for (int j = 1; j <= n; ++j)
        if (p[j] > 0) match[p[j] - 1] = j - 1;
    return match;
}

double permutation_matched_accuracy(const std::vector<int>& assignments,
                                    const LabelVector& y,
                                    std::vector<int>* permutation) {
    const int n = static_cast<int>(assignments.size());
    if (static_cast<int>(y.labels.size()) != n)
        throw std::invalid_argument("permutation_matched_accuracy: size mismatch");
    const int k = y.n_classes;
    Eigen::MatrixXd confusion = Eigen::MatrixXd::Zero(k, k);
    for (int i = 0; i < n; ++i) {
        if (assignments[i] < 0 || assignments[i] >= k)
            throw std::invalid_argument(
                "permutation_matched_accuracy: cluster id out of range");
        confusion(assignments[i], y.labels[i]) += 1.0;
    }

    std::vector<int> best_perm(k);
    double best_agree = -1.0;
    if (k <= 8) {
        std::vector<int> perm(k);
        std::iota(perm.begin(), perm.end(), 0);
        do {
            double agree = 0.0;
            for (int c = 0; c < k; ++c) agree += confusion(c, perm[c]);
            if (agree > best_agree) {
                best_agree = agree;
                best_perm = perm;
            }
        } while (std::next_permutation(perm.begin(), perm.end()));
    } else {
        best_perm = hungarian_max_assignment(confusion);
        best_agree = 0.0;
        for (int c = 0; c < k; ++c) best_agree += confusion(c, best_perm[c]);
    }
    if (permutation) *permutation = best_perm;
    return best_agree / n;
}

// --- spectral clustering ---------------------------------------------------------

ClusteringResult spectral_cluster(const Graph& g, int k,
                                  const ClusteringOptions& opts,
                                  const LabelVector* labels) {
    if (k < 2) throw std::invalid_argument("spectral_cluster: need k >= 2");
    if (g.n_nodes() < k)
        throw std::invalid_argument("spectral_cluster: fewer nodes than clusters");

    Eigen::SparseMatrix<double> a = g.adjacency();
    if (opts.use_laplacian) {
        // Smallest Laplacian modes = largest modes of -(D - A).
        Eigen::VectorXd deg = a * Eigen::VectorXd::Ones(a.cols());
        Eigen::SparseMatrix<double> d(a.rows(), a.cols());
        std::vector<Eigen::Triplet<double>> trips;
        for (int i = 0; i < a.rows(); ++i) trips.emplace_back(i, i, deg[i]);
        d.setFromTriplets(trips.begin(), trips.end());
        a = Eigen::SparseMatrix<double>(a - d);
    }

    const int n_components = g.n_components();
    // Dropping the leading eigenvector assumes it is the near-constant mode
    // of a connected graph. On a disconnected graph the leading vectors are
    // component indicators, so the drop would erase a cluster.
    const bool skip_first = opts.skip_first && n_components == 1;

    const int m = k + (skip_first ? 1 : 0);
    SolverConfig sc = opts.solver;
    sc.seed = derive_seed(opts.seed, "sc.eigs");
    SparseSymOp op(a);
    SpectralBasis basis = eigs_top(op, std::min(m, g.n_nodes()),
                                   opts.use_laplacian
                                       ? EigenOrdering::by_value_desc
                                       : opts.ordering,
                                   sc);

    Eigen::MatrixXd coords =
        skip_first ? basis.vectors.rightCols(basis.vectors.cols() - 1)
                   : basis.vectors;

    KmeansResult km = kmeans(coords, k, opts.kmeans_restarts,
                             opts.kmeans_max_iter, derive_seed(opts.seed, "sc.kmeans"));

    ClusteringResult res;
    res.assignments = std::move(km.assignments);
    res.kmeans_inertia = km.inertia;
    res.n_components = n_components;
    res.disconnected_warning = res.n_components > 1;
    res.skip_first = skip_first;
    res.ordering = opts.ordering;
    if (labels) {
        if (labels->n_classes != k)
            throw std::invalid_argument(
                "spectral_cluster: labels have a different class count than k");
        res.accuracy =
            permutation_matched_accuracy(res.assignments, *labels, &res.permutation);
    }
    return res;
}

ClusteringResult spectral_cluster_features(const FeatureMatrix& x, int k,
                                           int knn_k, KnnMetric metric,
                                           const ClusteringOptions& opts,
                                           const LabelVector* labels) {
    Graph g = build_knn_graph(x, knn_k, metric);
    return spectral_cluster(g, k, opts, labels);
}

// --- Prop-1 style one-step check ------------------------------------------------

namespace {

class DensePlusLowRankOp final : public SymOp {
public:
    DensePlusLowRankOp(const Eigen::MatrixXd& base, Eigen::MatrixXd vecs,
                       Eigen::VectorXd coeffs)
        : base_(base), vecs_(std::move(vecs)), coeffs_(std::move(coeffs)) {}
    int dim() const override { return static_cast<int>(base_.rows()); }
    void apply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const override {
        y.resize(base_.rows());
        y.noalias() = base_ * x;
        if (coeffs_.size() > 0)
            y.noalias() += vecs_ * (coeffs_.cwiseProduct(vecs_.transpose() * x));
    }

private:
    const Eigen::MatrixXd& base_;
    Eigen::MatrixXd vecs_;
    Eigen::VectorXd coeffs_;
};

class DensePlusRankOneRectOp final : public RectOp {
public:
    DensePlusRankOneRectOp(const Eigen::MatrixXd& base, Eigen::VectorXd left,
                           Eigen::VectorXd right)
        : base_(base), left_(std::move(left)), right_(std::move(right)) {}
    int rows() const override { return static_cast<int>(base_.rows()); }
    int cols() const override { return static_cast<int>(base_.cols()); }
    void apply(const Eigen::VectorXd& w, Eigen::VectorXd& u) const override {
        u.resize(base_.rows());
        u.noalias() = base_ * w;
        u.noalias() += left_ * right_.dot(w);
    }
    void apply_t(const Eigen::VectorXd& u, Eigen::VectorXd& w) const override {
        w.resize(base_.cols());
        w.noalias() = base_.transpose() * u;
        w.noalias() += right_ * left_.dot(u);
    }

private:
    const Eigen::MatrixXd& base_;
    Eigen::VectorXd left_;
    Eigen::VectorXd right_;
};

} // namespace

OverlapStepReport check_overlap_step(int n, int f, double lambda, double mu, double eta,
                        InterpSide side, int n_trials, std::uint64_t seed) {
    if (n_trials < 1) throw std::invalid_argument("check_overlap_step: need n_trials >= 1");
    if (eta < 0.0 || eta > 1.0)
        throw std::invalid_argument("check_overlap_step: eta must be in [0,1]");

    OverlapStepReport rep;
    rep.n_trials = n_trials;
    rep.eta = eta;
    const double gamma = static_cast<double>(n) / f;
    rep.above_transition = lambda > 1.0 && mu > std::sqrt(gamma);

    double sum_before = 0.0, sum_after = 0.0;
    int improved = 0;
    for (int t = 0; t < n_trials; ++t) {
        const std::uint64_t trial_seed = derive_seed(seed, "overlap.trial", t);
        SpikedPair sp = sample_spiked_pair(n, f, lambda, mu, trial_seed);
        const Eigen::VectorXd y_tilde = sp.y / std::sqrt(double(n));

        SolverConfig sc;
        sc.tol = 1e-8;
        sc.seed = derive_seed(trial_seed, "overlap.solve");

        DenseSymOp a_op(sp.a_c);
        SpectralBasis eig = eigs_top(a_op, 1, EigenOrdering::by_value_desc, sc);
        DenseRectOp x_op(sp.x);
        SvdBasis svd = svd_top(x_op, 1, sc);

        const Eigen::VectorXd v_a = eig.vectors.col(0);
        const Eigen::VectorXd u_x = svd.left_vectors.col(0);
        const double ip = v_a.dot(u_x);
        const double sign = ip < 0.0 ? -1.0 : 1.0;

        double before = 0.0, after = 0.0;
        if (side == InterpSide::graph) {
            before = std::pow(v_a.dot(y_tilde), 2);
            if (eta == 0.0) {
                // Identical operator and solver seed: the recomputation is
                // bitwise identical.
                SpectralBasis eig2 =
                    eigs_top(a_op, 1, EigenOrdering::by_value_desc, sc);
                after = std::pow(eig2.vectors.col(0).dot(y_tilde), 2);
            } else {
                // The interpolated direction is renormalized so the update
                // rotates the spike without shrinking it; with the raw
                // combination (norm < 1) the outlier eigenvalue slides back
                // into the spectral bulk and the comparison measures the
                // outlier's disappearance rather than its rotation.
                Eigen::VectorXd v_new =
                    ((1.0 - eta) * v_a + eta * sign * u_x).normalized();
                Eigen::MatrixXd vecs(n, 2);
                vecs.col(0) = v_a;
                vecs.col(1) = v_new;
                Eigen::VectorXd coeffs(2);
                coeffs << -eig.values[0], eig.values[0];
                DensePlusLowRankOp updated(sp.a_c, std::move(vecs), std::move(coeffs));
                SpectralBasis eig2 =
                    eigs_top(updated, 1, EigenOrdering::by_value_desc, sc);
                after = std::pow(eig2.vectors.col(0).dot(y_tilde), 2);
            }
        } else {
            before = std::pow(u_x.dot(y_tilde), 2);
            if (eta == 0.0) {
                SvdBasis svd2 = svd_top(x_op, 1, sc);
                after = std::pow(svd2.left_vectors.col(0).dot(y_tilde), 2);
            } else {
                Eigen::VectorXd u_new =
                    ((1.0 - eta) * u_x + eta * sign * v_a).normalized();
                Eigen::VectorXd left = svd.singular_values[0] * (u_new - u_x);
                DensePlusRankOneRectOp updated(sp.x, std::move(left),
                                               svd.right_vectors.col(0));
                SvdBasis svd2 = svd_top(updated, 1, sc);
                after = std::pow(svd2.left_vectors.col(0).dot(y_tilde), 2);
            }
        }
        sum_before += before;
        sum_after += after;
        if (after > before) ++improved;
    }
    rep.mean_overlap_before = sum_before / n_trials;
    rep.mean_overlap_after = sum_after / n_trials;
    rep.fraction_improved = static_cast<double>(improved) / n_trials;
    return rep;
}

// --- ridge ----------------------------------------------------------------------

double ridge_gcn_mse(const Eigen::MatrixXd& a, const Eigen::MatrixXd& x,
                     const Eigen::VectorXd& y, double r) {
    if (a.cols() != x.rows() || a.rows() != y.size())
        throw std::invalid_argument("ridge_gcn_mse: shape mismatch");
    if (r < 0) throw std::invalid_argument("ridge_gcn_mse: r must be >= 0");
    const auto n = a.rows();

    Eigen::MatrixXd z = a * x; // N x F
    Eigen::MatrixXd gram = z.transpose() * z;
    if (r > 0) gram.diagonal().array() += r;

    if (r == 0.0) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
        const double lmax = es.eigenvalues().maxCoeff();
        const double lmin = es.eigenvalues().minCoeff();
        if (lmin <= 0.0 || lmax / lmin > 1e12)
            throw std::runtime_error(
                "ridge_gcn_mse: singular system at r=0 (condition estimate > "
                "1e12); use r > 0");
    }
    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("ridge_gcn_mse: normal equations not positive "
                                 "definite; use a larger r");
    Eigen::VectorXd omega = llt.solve(z.transpose() * y);
    return (z * omega - y).squaredNorm() / static_cast<double>(n);
}

RidgeMseReport ridge_denoise_sweep(int n, int f, double lambda, double mu,
                                   DenoiseSide side,
                                   const std::vector<double>& eta_grid,
                                   int n_trials, double r, std::uint64_t seed) {
    if (n_trials < 1)
        throw std::invalid_argument("ridge_denoise_sweep: need n_trials >= 1");
    RidgeMseReport rep;
    rep.points.resize(eta_grid.size());
    std::vector<std::vector<double>> mses(eta_grid.size());

    for (int t = 0; t < n_trials; ++t) {
        GaussianCsbm g = sample_gaussian_csbm_nonsym(
            n, f, lambda, mu, derive_seed(seed, "ridge.trial", t));
        Eigen::MatrixXd xxt, ax;
        if (side == DenoiseSide::A)
            xxt.noalias() = g.x * g.x.transpose();
        else
            ax.noalias() = g.a * g.x;
        for (std::size_t e = 0; e < eta_grid.size(); ++e) {
            const double eta = eta_grid[e];
            double mse;
            if (eta == 0.0) {
                mse = ridge_gcn_mse(g.a, g.x, g.y, r);
            } else if (side == DenoiseSide::A) {
                mse = ridge_gcn_mse(g.a + eta * xxt, g.x, g.y, r);
            } else {
                mse = ridge_gcn_mse(g.a, g.x + eta * ax, g.y, r);
            }
            mses[e].push_back(mse);
        }
    }

    for (std::size_t e = 0; e < eta_grid.size(); ++e) {
        const auto& v = mses[e];
        double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
        double var = 0.0;
        for (double m : v) var += (m - mean) * (m - mean);
        var = v.size() > 1 ? var / (v.size() - 1) : 0.0;
        rep.points[e] = {eta_grid[e], mean, std::sqrt(var)};
    }
    return rep;
}

} // namespace jdr
