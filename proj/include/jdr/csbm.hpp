#pragma once

#include "jdr/graph.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <utility>

namespace jdr {

/**
 * Two-class contextual SBM: a balanced planted-partition graph with average
 * degree d and edge probabilities (d +- lambda sqrt(d)) / N, paired with
 * Gaussian-mixture features X_i = sqrt(mu/N) y_i xi + z_i / sqrt(F).
 *
 * (phi, epsilon) parameterize (lambda, mu) along lambda^2 + mu^2/gamma = 1 + epsilon
 * with phi = (2/pi) atan(lambda sqrt(gamma) / mu).
 */
struct CsbmParams {
    int n = 0;
    int f = 0;
    double avg_degree = 5.0;
    double lambda = 0.0;
    double mu = 0.0; // the value whose square is tabulated alongside phi
    double gamma = 0.0;
    double phi = 0.0;
    double epsilon = 0.0;
    std::uint64_t seed = 0;

    double c_in() const;
    double c_out() const;
    void validate() const;

    static CsbmParams from_phi(int n, int f, double avg_degree, double phi,
                               double epsilon, std::uint64_t seed);
};

/// Solve the (phi, epsilon, gamma) parameterization for (lambda, mu^2).
std::pair<double, double> phi_to_lambda_mu(double phi, double epsilon,
                                           double gamma);

Dataset sample_csbm(const CsbmParams& p);

/// Spiked GOE surrogate: A^c = (lambda/N) y y^T + O_A / sqrt(N) with GOE
/// noise (off-diagonal variance 1, diagonal variance 2), plus the Gaussian
/// feature model above.
struct SpikedPair {
    Eigen::MatrixXd a_c; // N x N symmetric
    Eigen::MatrixXd x;   // N x F
    Eigen::VectorXd y;   // +-1, balanced to within 1
    double lambda = 0.0;
    double mu = 0.0;
    double gamma = 0.0;
};

SpikedPair sample_spiked_pair(int n, int f, double lambda, double mu,
                              std::uint64_t seed);

/// Non-symmetric Gaussian surrogate in the rescaled convention
/// A = (lambda/N) y y^T + Xi_A (iid var 1/N),
/// X = (mu/N) y u^T + Xi_X (iid var 1/F), u ~ N(0, I_F).
struct GaussianCsbm {
    Eigen::MatrixXd a; // N x N, not symmetric
    Eigen::MatrixXd x; // N x F
    Eigen::VectorXd y; // +-1 balanced
};

GaussianCsbm sample_gaussian_csbm_nonsym(int n, int f, double lambda, double mu,
                                         std::uint64_t seed);

} // namespace jdr
