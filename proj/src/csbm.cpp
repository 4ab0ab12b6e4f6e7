#include "jdr/csbm.hpp"
#include "jdr/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace jdr {

double CsbmParams::c_in() const { return avg_degree + lambda * std::sqrt(avg_degree); }
double CsbmParams::c_out() const { return avg_degree - lambda * std::sqrt(avg_degree); }

void CsbmParams::validate() const {
    if (n < 2 || f < 1) throw std::invalid_argument("CsbmParams: need n >= 2, f >= 1");
    if (avg_degree <= 0) throw std::invalid_argument("CsbmParams: avg_degree must be > 0");
    if (mu < 0) throw std::invalid_argument("CsbmParams: mu must be >= 0");
    if (c_in() < 0 || c_out() < 0)
        throw std::invalid_argument(
            "CsbmParams: |lambda| too large for avg_degree (edge probability "
            "would be negative)");
    if (c_in() > n || c_out() > n)
        throw std::invalid_argument("CsbmParams: edge probability exceeds 1");
}

std::pair<double, double> phi_to_lambda_mu(double phi, double epsilon,
                                           double gamma) {
    if (std::abs(phi) > 1.0)
        throw std::invalid_argument("phi_to_lambda_mu: need |phi| <= 1");
    if (epsilon <= -1.0)
        throw std::invalid_argument("phi_to_lambda_mu: need epsilon > -1");
    if (gamma <= 0.0)
        throw std::invalid_argument("phi_to_lambda_mu: need gamma > 0");
    const double s = 1.0 + epsilon;
    const double half_angle = phi * M_PI / 2.0;
    const double lambda = std::sqrt(s) * std::sin(half_angle);
    const double cosv = std::cos(half_angle);
    const double mu_squared = gamma * s * cosv * cosv;
    return {lambda, mu_squared};
}

CsbmParams CsbmParams::from_phi(int n, int f, double avg_degree, double phi,
                                double epsilon, std::uint64_t seed) {
    CsbmParams p;
    p.n = n;
    p.f = f;
    p.avg_degree = avg_degree;
    p.phi = phi;
    p.epsilon = epsilon;
    p.gamma = static_cast<double>(n) / f;
    auto [lambda, mu_squared] = phi_to_lambda_mu(phi, epsilon, p.gamma);
    p.lambda = lambda;
    p.mu = std::sqrt(std::max(0.0, mu_squared));
    p.seed = seed;
    p.validate();
    return p;
}

namespace {

/// +-1 labels, first half -1, balanced to within 1.
Eigen::VectorXd balanced_signs(int n) {
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y[i] = i < n / 2 ? -1.0 : 1.0;
    return y;
}

} // namespace

Dataset sample_csbm(const CsbmParams& p) {
    p.validate();
    const int n = p.n, f = p.f;

    // Balanced signed labels, then a seeded permutation of node identities so
    // downstream code cannot exploit the ordering.
    std::vector<double> signs(n);
    for (int i = 0; i < n; ++i) signs[i] = i < n / 2 ? -1.0 : 1.0;
    auto label_rng = make_rng(p.seed, "csbm.labels");
    std::shuffle(signs.begin(), signs.end(), label_rng);

    const double p_in = p.c_in() / n;
    const double p_out = p.c_out() / n;
    auto edge_rng = make_rng(p.seed, "csbm.edges");
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<WeightedEdge> edges;
    edges.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(p.avg_degree));
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const double prob = signs[i] == signs[j] ? p_in : p_out;
            if (unif(edge_rng) < prob) edges.push_back({i, j, 1.0});
        }

    auto feat_rng = make_rng(p.seed, "csbm.features");
    std::normal_distribution<double> normal;
    Eigen::VectorXd xi(f);
    const double xi_scale = 1.0 / std::sqrt(static_cast<double>(f));
    for (int j = 0; j < f; ++j) xi[j] = normal(feat_rng) * xi_scale;

    FeatureMatrix x(n, f);
    const double spike_scale = std::sqrt(p.mu / n);
    const double noise_scale = 1.0 / std::sqrt(static_cast<double>(f));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < f; ++j)
            x(i, j) = spike_scale * signs[i] * xi[j] + normal(feat_rng) * noise_scale;

    Dataset d;
    d.graph = Graph(n, std::move(edges), false);
    d.features = std::move(x);
    LabelVector y;
    y.n_classes = 2;
    y.labels.resize(n);
    for (int i = 0; i < n; ++i) y.labels[i] = signs[i] < 0 ? 0 : 1;
    d.labels = std::move(y);
    d.name = "csbm_phi" + std::to_string(p.phi) + "_seed" + std::to_string(p.seed);
    return d;
}

SpikedPair sample_spiked_pair(int n, int f, double lambda, double mu,
                              std::uint64_t seed) {
    if (n < 2 || f < 2)
        throw std::invalid_argument("sample_spiked_pair: need n, f >= 2");
    if (mu < 0) throw std::invalid_argument("sample_spiked_pair: mu must be >= 0");

    SpikedPair sp;
    sp.lambda = lambda;
    sp.mu = mu;
    sp.gamma = static_cast<double>(n) / f;
    sp.y = balanced_signs(n);

    auto goe_rng = make_rng(seed, "spiked.goe");
    std::normal_distribution<double> normal;
    const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));
    sp.a_c.resize(n, n);
    for (int i = 0; i < n; ++i) {
        // GOE convention: diagonal variance 2, off-diagonal variance 1.
        sp.a_c(i, i) = lambda / n + std::sqrt(2.0) * normal(goe_rng) * inv_sqrt_n;
        for (int j = i + 1; j < n; ++j) {
            const double v =
                lambda / n * sp.y[i] * sp.y[j] + normal(goe_rng) * inv_sqrt_n;
            sp.a_c(i, j) = v;
            sp.a_c(j, i) = v;
        }
    }

    auto feat_rng = make_rng(seed, "spiked.features");
    Eigen::VectorXd xi(f);
    const double xi_scale = 1.0 / std::sqrt(static_cast<double>(f));
    for (int j = 0; j < f; ++j) xi[j] = normal(feat_rng) * xi_scale;
    const double spike_scale = std::sqrt(mu / n);
    const double noise_scale = 1.0 / std::sqrt(static_cast<double>(f));
    sp.x.resize(n, f);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < f; ++j)
            sp.x(i, j) =
                spike_scale * sp.y[i] * xi[j] + normal(feat_rng) * noise_scale;
    return sp;
}

GaussianCsbm sample_gaussian_csbm_nonsym(int n, int f, double lambda, double mu,
                                         std::uint64_t seed) {
    if (n < 2 || f < 2)
        throw std::invalid_argument("sample_gaussian_csbm_nonsym: need n, f >= 2");

    GaussianCsbm g;
    g.y = balanced_signs(n);

    auto a_rng = make_rng(seed, "gauss.adjacency");
    std::normal_distribution<double> normal;
    const double a_noise = 1.0 / std::sqrt(static_cast<double>(n));
    g.a.resize(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            g.a(i, j) = lambda / n * g.y[i] * g.y[j] + normal(a_rng) * a_noise;

    auto x_rng = make_rng(seed, "gauss.features");
    Eigen::VectorXd u(f);
    for (int j = 0; j < f; ++j) u[j] = normal(x_rng);
    const double x_noise = 1.0 / std::sqrt(static_cast<double>(f));
    g.x.resize(n, f);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < f; ++j)
            g.x(i, j) = mu / n * g.y[i] * u[j] + normal(x_rng) * x_noise;
    return g;
}

} // namespace jdr
