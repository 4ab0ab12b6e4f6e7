#include "jdr/diffusion.hpp"

#include <Eigen/Sparse>

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace jdr {

PprResult ppr_diffuse(const Graph& g, const DiglConfig& cfg) {
    if (cfg.alpha <= 0.0 || cfg.alpha > 1.0)
        throw std::invalid_argument(
            "ppr_diffuse: alpha must be in (0, 1] (the kernel is undefined at 0)");
    if (cfg.top_k < 1) throw std::invalid_argument("ppr_diffuse: top_k must be >= 1");

    const int n = g.n_nodes();
    Eigen::SparseMatrix<double> a = g.adjacency();

    // Degree-0 nodes get a self-loop so the normalization is defined.
    Eigen::VectorXd deg = a * Eigen::VectorXd::Ones(n);
    std::vector<Eigen::Triplet<double>> loops;
    for (int i = 0; i < n; ++i)
        if (deg[i] == 0.0) {
            loops.emplace_back(i, i, 1.0);
            deg[i] = 1.0;
        }
    if (!loops.empty()) {
        Eigen::SparseMatrix<double> add(n, n);
        add.setFromTriplets(loops.begin(), loops.end());
        a += add;
    }

    Eigen::VectorXd dinv_sqrt = deg.array().rsqrt();
    Eigen::SparseMatrix<double> t =
        dinv_sqrt.asDiagonal() * a * dinv_sqrt.asDiagonal();

    const double alpha = cfg.alpha;
    const double rate = 1.0 - alpha;
    int max_iter = cfg.max_iter;
    if (max_iter <= 0) {
        max_iter = rate > 0.0
                       ? static_cast<int>(std::ceil(std::log(std::max(cfg.tol, 1e-300)) /
                                                    std::log(rate))) +
                             16
                       : 2;
        max_iter = std::min(max_iter, 100000);
    }

    PprResult res;
    res.identity_kernel = alpha == 1.0;

    const int k = std::min(cfg.top_k, n);
    std::vector<WeightedEdge> kept;
    kept.reserve(static_cast<std::size_t>(n) * k);

    Eigen::VectorXd s(n), next(n), resid(n);
    for (int col = 0; col < n; ++col) {
        s.setZero();
        s[col] = alpha;
        int used = 0;
        double rnorm = 0.0;
        for (int it = 0; it < max_iter; ++it) {
            next.noalias() = rate * (t * s);
            next[col] += alpha;
            resid = next - s;
            s = next;
            ++used;
            rnorm = resid.norm();
            if (rnorm <= cfg.tol) break;
        }
        if (rnorm > cfg.tol) {
            std::ostringstream msg;
            msg << "ppr_diffuse: column " << col << " did not converge in "
                << max_iter << " iterations (residual " << rnorm << ")";
            throw std::runtime_error(msg.str());
        }
        res.max_iterations_used = std::max(res.max_iterations_used, used);
        res.worst_residual = std::max(res.worst_residual, rnorm);
        // The kernel is symmetric, so column `col` is also row `col`.
        top_k_select_row(s, col, k, kept);
    }

    res.graph = symmetrize_union(n, std::move(kept));
    return res;
}

} // namespace jdr
