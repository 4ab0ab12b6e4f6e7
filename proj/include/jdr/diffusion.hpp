#pragma once

#include "jdr/graph.hpp"

#include <cstdint>

namespace jdr {

/// Personalized-PageRank diffusion settings. The kernel is
/// S = alpha (I - (1 - alpha) T)^{-1} with T the symmetric-normalized
/// adjacency; the result is sparsified with top_k entries per node.
struct DiglConfig {
    double alpha = 0.15;
    int top_k = 64;
    double tol = 1e-12;
    int max_iter = 0; // 0 = derived from the geometric rate (1 - alpha)
};

struct PprResult {
    Graph graph;
    bool identity_kernel = false; // alpha == 1: S = I, graph empties out
    double worst_residual = 0.0;
    int max_iterations_used = 0;
};

/// Column-wise fixed-point solves s <- alpha e_i + (1 - alpha) T s, then
/// per-node top-k sparsification of the (symmetric) kernel.
PprResult ppr_diffuse(const Graph& g, const DiglConfig& cfg);

} // namespace jdr
