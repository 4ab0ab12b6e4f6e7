#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace jdr {

using FeatureMatrix = Eigen::MatrixXd; // rows = nodes, cols = feature dims

struct WeightedEdge {
    int u = 0;
    int v = 0;
    double w = 1.0;
};

enum class KnnMetric { cosine, euclidean };

/**
 * Undirected (or stored-directed) weighted graph over nodes [0, n).
 *
 * Edges are kept in canonical form: for undirected graphs u <= v, sorted
 * lexicographically, no duplicates. Directed graphs keep (u, v) as given;
 * all algorithms operate on the symmetrized view, where the weight of an
 * unordered pair is the max over both directions.
 */
class Graph {
public:
    Graph() = default;
    Graph(int n_nodes, std::vector<WeightedEdge> edges, bool directed = false);

    int n_nodes() const { return n_nodes_; }
    bool directed() const { return directed_; }
    const std::vector<WeightedEdge>& edges() const { return edges_; }
    std::size_t n_edges() const { return edges_.size(); }

    /// Unordered-pair edge list (u < v, plus self loops), max-weight rule
    /// applied to directed inputs. For undirected graphs this is `edges()`.
    std::vector<WeightedEdge> symmetrized_edges() const;

    /// Symmetric sparse adjacency of the symmetrized view.
    Eigen::SparseMatrix<double> adjacency() const;
    Eigen::MatrixXd dense_adjacency() const;

    std::vector<int> degrees() const; // symmetrized view, self loops count once
    int n_components() const;         // connected components of symmetrized view

    bool operator==(const Graph& other) const;

private:
    int n_nodes_ = 0;
    bool directed_ = false;
    std::vector<WeightedEdge> edges_;
};

struct LabelVector {
    std::vector<int> labels;
    int n_classes = 0;
};

struct Dataset {
    Graph graph;
    FeatureMatrix features;
    std::optional<LabelVector> labels;
    std::string name;
};

/// Throws if graph/features/labels dimensions are inconsistent or features
/// contain non-finite values.
void validate_dataset(const Dataset& d);

// --- directory I/O -------------------------------------------------------
//
// A dataset directory holds:
//   meta          key=value lines: n_nodes, n_features, n_classes, directed
//   edges.tsv     u <TAB> v [<TAB> w]         (w defaults to 1.0)
//   features.tsv  row <TAB> col <TAB> value   (sparse triplets), or
//   features.csv  one comma-separated row per node
//   labels.tsv    node <TAB> class            (optional)

Dataset load_dataset(const std::string& dir);
void save_dataset(const Dataset& d, const std::string& dir);

// --- operations ----------------------------------------------------------

/// Keep the k largest entries per row by signed value (ties to the lower
/// column index), excluding the diagonal and exact zeros, then symmetrize
/// by union keeping the entry of larger absolute value per unordered pair.
Graph top_k_sparsify(const Eigen::MatrixXd& dense_adjacency, int k);

/// Per-row top-k selection used by top_k_sparsify; exposed for streamed
/// densification. For row `row` of a matrix, appends surviving
/// (row, col, value) entries to `out`.
void top_k_select_row(const Eigen::VectorXd& row_values, int row, int k,
                      std::vector<WeightedEdge>& out);

/// Union-symmetrize directed survivors into an undirected graph.
Graph symmetrize_union(int n_nodes, std::vector<WeightedEdge> entries);

/// Fraction of symmetrized, deduplicated edges whose endpoints share a
/// label. Throws on an edgeless graph.
double edge_homophily(const Graph& g, const LabelVector& y);

/// Fraction of same-label neighbors averaged over nodes (secondary measure).
double node_homophily(const Graph& g, const LabelVector& y);

/// Connect each node to its k nearest neighbors (self excluded, ties to the
/// lower node index), union-symmetrized with weight 1.
Graph build_knn_graph(const FeatureMatrix& x, int k,
                      KnnMetric metric = KnnMetric::cosine);

} // namespace jdr
