#pragma once

#include "jdr/graph.hpp"
#include "jdr/spectral.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace jdr {

struct ClusteringOptions {
    bool skip_first = true; // drop the leading eigenvector (near constant on raw graphs)
    EigenOrdering ordering = EigenOrdering::by_value_desc;
    bool use_laplacian = false; // cluster on -(D - A) instead of A
    int kmeans_restarts = 10;
    int kmeans_max_iter = 300;
    SolverConfig solver;
    std::uint64_t seed = 0;
};

struct ClusteringResult {
    std::vector<int> assignments;
    double accuracy = -1.0;       // set when labels are supplied
    std::vector<int> permutation; // cluster id -> class id mapping applied
    double kmeans_inertia = 0.0;
    int n_components = 1;
    bool disconnected_warning = false;
    // Provenance of the run, recorded per report.
    bool skip_first = true;
    EigenOrdering ordering = EigenOrdering::by_value_desc;
};

/// k-means (k-means++ init, best inertia over restarts) on the rows of the
/// top eigenvectors of the symmetrized adjacency. Accuracy is the best
/// agreement over cluster-to-class assignments.
ClusteringResult spectral_cluster(const Graph& g, int k,
                                  const ClusteringOptions& opts = {},
                                  const LabelVector* labels = nullptr);

/// Build a kNN graph from the features, then cluster it.
ClusteringResult spectral_cluster_features(const FeatureMatrix& x, int k,
                                           int knn_k,
                                           KnnMetric metric = KnnMetric::cosine,
                                           const ClusteringOptions& opts = {},
                                           const LabelVector* labels = nullptr);

struct KmeansResult {
    std::vector<int> assignments;
    double inertia = 0.0;
};

KmeansResult kmeans(const Eigen::MatrixXd& points, int k, int restarts,
                    int max_iter, std::uint64_t seed);

/// Best-agreement accuracy over cluster-to-class mappings (exhaustive for
/// k <= 8, Hungarian otherwise).
double permutation_matched_accuracy(const std::vector<int>& assignments,
                                    const LabelVector& y,
                                    std::vector<int>* permutation = nullptr);

/// Maximum-score assignment on a square score matrix; returns column chosen
/// for each row.
std::vector<int> hungarian_max_assignment(const Eigen::MatrixXd& score);

// --- one-step interpolation check on the spiked surrogate -------------------

enum class InterpSide { graph, features };

struct OverlapStepReport {
    int n_trials = 0;
    double eta = 0.0;
    double mean_overlap_before = 0.0;
    double mean_overlap_after = 0.0;
    double fraction_improved = 0.0;
    bool above_transition = true; // lambda > 1 and mu > sqrt(gamma)
};

/// Per trial: sample a spiked pair, swap the leading spectral direction for
/// its interpolation (renormalized, so the spike magnitude is preserved and
/// only its direction moves) with rate eta, and compare squared overlaps of
/// the leading vector with y / sqrt(N) before and after.
OverlapStepReport check_overlap_step(int n, int f, double lambda, double mu, double eta,
                        InterpSide side, int n_trials, std::uint64_t seed);

// --- ridge regression on AX -------------------------------------------------

/// Closed-form ridge minimizer for (1/N) ||A X w - y||^2 + (r/N) ||w||^2;
/// returns the residual term (1/N) ||A X w* - y||^2.
double ridge_gcn_mse(const Eigen::MatrixXd& a, const Eigen::MatrixXd& x,
                     const Eigen::VectorXd& y, double r);

enum class DenoiseSide { A, X };

struct RidgeMsePoint {
    double eta = 0.0;
    double mean_mse = 0.0;
    double std_mse = 0.0;
};

struct RidgeMseReport {
    std::vector<RidgeMsePoint> points;
};

/// MSE curve over an eta grid for A_den = A + eta X X^T (side A) or
/// X_den = X + eta A X (side X), averaged over Gaussian-surrogate trials.
RidgeMseReport ridge_denoise_sweep(int n, int f, double lambda, double mu,
                                   DenoiseSide side,
                                   const std::vector<double>& eta_grid,
                                   int n_trials, double r, std::uint64_t seed);

} // namespace jdr
