#include "jdr/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace fs = std::filesystem;

namespace jdr {

namespace {

[[noreturn]] void parse_fail(const std::string& file, std::size_t line,
                             const std::string& what) {
    throw std::runtime_error("parse error in " + file + ":" +
                             std::to_string(line) + ": " + what);
}

std::uint64_t pair_key(int u, int v) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(u)) << 32) |
           static_cast<std::uint32_t>(v);
}

} // namespace

Graph::Graph(int n_nodes, std::vector<WeightedEdge> edges, bool directed)
    : n_nodes_(n_nodes), directed_(directed) {
    if (n_nodes < 0) throw std::invalid_argument("Graph: negative node count");
    // Canonicalize: orient undirected edges u <= v, deduplicate with the
    // max-weight rule, sort.
    std::map<std::pair<int, int>, double> canon;
    for (auto& e : edges) {
        if (e.u < 0 || e.u >= n_nodes || e.v < 0 || e.v >= n_nodes)
            throw std::out_of_range("Graph: edge (" + std::to_string(e.u) + "," +
                                    std::to_string(e.v) + ") out of range for " +
                                    std::to_string(n_nodes) + " nodes");
        if (!std::isfinite(e.w))
            throw std::invalid_argument("Graph: non-finite edge weight");
        int u = e.u, v = e.v;
        if (!directed_ && u > v) std::swap(u, v);
        auto [it, inserted] = canon.emplace(std::make_pair(u, v), e.w);
        if (!inserted) it->second = std::max(it->second, e.w);
    }
    edges_.reserve(canon.size());
    for (auto& [key, w] : canon) edges_.push_back({key.first, key.second, w});
}

std::vector<WeightedEdge> Graph::symmetrized_edges() const {
    if (!directed_) return edges_;
    std::map<std::pair<int, int>, double> canon;
    for (auto& e : edges_) {
        int u = e.u, v = e.v;
        if (u > v) std::swap(u, v);
        auto [it, inserted] = canon.emplace(std::make_pair(u, v), e.w);
        if (!inserted) it->second = std::max(it->second, e.w);
    }
    std::vector<WeightedEdge> out;
    out.reserve(canon.size());
    for (auto& [key, w] : canon) out.push_back({key.first, key.second, w});
    return out;
}

Eigen::SparseMatrix<double> Graph::adjacency() const {
    std::vector<Eigen::Triplet<double>> trips;
    auto sym = symmetrized_edges();
    trips.reserve(2 * sym.size());
    for (auto& e : sym) {
        trips.emplace_back(e.u, e.v, e.w);
        if (e.u != e.v) trips.emplace_back(e.v, e.u, e.w);
    }
    Eigen::SparseMatrix<double> a(n_nodes_, n_nodes_);
    a.setFromTriplets(trips.begin(), trips.end());
    a.makeCompressed();
    return a;
}

Eigen::MatrixXd Graph::dense_adjacency() const {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n_nodes_, n_nodes_);
    for (auto& e : symmetrized_edges()) {
        a(e.u, e.v) = e.w;
        a(e.v, e.u) = e.w;
    }
    return a;
}

std::vector<int> Graph::degrees() const {
    std::vector<int> deg(n_nodes_, 0);
    for (auto& e : symmetrized_edges()) {
        deg[e.u]++;
        if (e.u != e.v) deg[e.v]++;
    }
    return deg;
}

int Graph::n_components() const {
    std::vector<int> parent(n_nodes_);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };
    for (auto& e : symmetrized_edges()) {
        int a = find(e.u), b = find(e.v);
        if (a != b) parent[a] = b;
    }
    int count = 0;
    for (int i = 0; i < n_nodes_; ++i)
        if (find(i) == i) count++;
    return count;
}

bool Graph::operator==(const Graph& other) const {
    if (n_nodes_ != other.n_nodes_ || directed_ != other.directed_ ||
        edges_.size() != other.edges_.size())
        return false;
    for (std::size_t i = 0; i < edges_.size(); ++i) {
        if (edges_[i].u != other.edges_[i].u || edges_[i].v != other.edges_[i].v ||
            edges_[i].w != other.edges_[i].w)
            return false;
    }
    return true;
}

void validate_dataset(const Dataset& d) {
    if (d.features.rows() != d.graph.n_nodes())
        throw std::invalid_argument("dataset '" + d.name + "': features have " +
                                    std::to_string(d.features.rows()) +
                                    " rows but graph has " +
                                    std::to_string(d.graph.n_nodes()) + " nodes");
    if (!d.features.allFinite())
        throw std::invalid_argument("dataset '" + d.name +
                                    "': non-finite feature value");
    if (d.labels) {
        if (static_cast<int>(d.labels->labels.size()) != d.graph.n_nodes())
            throw std::invalid_argument("dataset '" + d.name +
                                        "': label count != node count");
        for (int c : d.labels->labels)
            if (c < 0 || c >= d.labels->n_classes)
                throw std::invalid_argument("dataset '" + d.name +
                                            "': class id out of range");
    }
}

// --- I/O -------------------------------------------------------------------

namespace {

std::unordered_map<std::string, std::string> read_meta(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("missing file: " + path);
    std::unordered_map<std::string, std::string> kv;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) parse_fail(path, lineno, "expected key=value");
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return kv;
}

double parse_double(const std::string& tok, const std::string& file,
                    std::size_t line) {
    std::size_t pos = 0;
    double v = 0;
    try {
        v = std::stod(tok, &pos);
    } catch (const std::exception&) {
        parse_fail(file, line, "bad number '" + tok + "'");
    }
    if (pos != tok.size()) parse_fail(file, line, "bad number '" + tok + "'");
    if (!std::isfinite(v)) parse_fail(file, line, "non-finite value '" + tok + "'");
    return v;
}

long parse_long(const std::string& tok, const std::string& file,
                std::size_t line) {
    std::size_t pos = 0;
    long v = 0;
    try {
        v = std::stol(tok, &pos);
    } catch (const std::exception&) {
        parse_fail(file, line, "bad integer '" + tok + "'");
    }
    if (pos != tok.size()) parse_fail(file, line, "bad integer '" + tok + "'");
    return v;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> toks;
    std::string tok;
    std::istringstream ss(line);
    while (std::getline(ss, tok, sep)) toks.push_back(tok);
    return toks;
}

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

Dataset load_dataset(const std::string& dir) {
    const std::string meta_path = (fs::path(dir) / "meta").string();
    auto meta = read_meta(meta_path);
    auto need = [&](const std::string& key) -> std::string {
        auto it = meta.find(key);
        if (it == meta.end())
            throw std::runtime_error(meta_path + ": missing key '" + key + "'");
        return it->second;
    };
    const int n_nodes = static_cast<int>(parse_long(need("n_nodes"), meta_path, 0));
    const int n_features =
        static_cast<int>(parse_long(need("n_features"), meta_path, 0));
    const bool directed = meta.count("directed") && (meta["directed"] == "true" ||
                                                     meta["directed"] == "1");

    // edges
    const std::string edges_path = (fs::path(dir) / "edges.tsv").string();
    std::ifstream ein(edges_path);
    if (!ein) throw std::runtime_error("missing file: " + edges_path);
    std::vector<WeightedEdge> edges;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(ein, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        auto toks = split(line, '\t');
        if (toks.size() < 2 || toks.size() > 3)
            parse_fail(edges_path, lineno, "expected 'u<TAB>v[<TAB>w]'");
        WeightedEdge e;
        e.u = static_cast<int>(parse_long(toks[0], edges_path, lineno));
        e.v = static_cast<int>(parse_long(toks[1], edges_path, lineno));
        e.w = toks.size() == 3 ? parse_double(toks[2], edges_path, lineno) : 1.0;
        if (e.u < 0 || e.u >= n_nodes || e.v < 0 || e.v >= n_nodes)
            parse_fail(edges_path, lineno, "node id out of range [0," +
                                               std::to_string(n_nodes) + ")");
        edges.push_back(e);
    }

    // features: sparse triplets or dense csv
    FeatureMatrix x = FeatureMatrix::Zero(n_nodes, n_features);
    const std::string tsv_path = (fs::path(dir) / "features.tsv").string();
    const std::string csv_path = (fs::path(dir) / "features.csv").string();
    if (fs::exists(tsv_path)) {
        std::ifstream fin(tsv_path);
        lineno = 0;
        while (std::getline(fin, line)) {
            ++lineno;
            if (line.empty() || line[0] == '#') continue;
            auto toks = split(line, '\t');
            if (toks.size() != 3)
                parse_fail(tsv_path, lineno, "expected 'row<TAB>col<TAB>value'");
            long r = parse_long(toks[0], tsv_path, lineno);
            long c = parse_long(toks[1], tsv_path, lineno);
            if (r < 0 || r >= n_nodes || c < 0 || c >= n_features)
                parse_fail(tsv_path, lineno, "feature index out of range");
            x(r, c) = parse_double(toks[2], tsv_path, lineno);
        }
    } else if (fs::exists(csv_path)) {
        std::ifstream fin(csv_path);
        lineno = 0;
        int row = 0;
        while (std::getline(fin, line)) {
            ++lineno;
            if (line.empty()) continue;
            if (row >= n_nodes) parse_fail(csv_path, lineno, "more rows than n_nodes");
            auto toks = split(line, ',');
            if (static_cast<int>(toks.size()) != n_features)
                parse_fail(csv_path, lineno,
                           "expected " + std::to_string(n_features) + " columns, got " +
                               std::to_string(toks.size()));
            for (int c = 0; c < n_features; ++c)
                x(row, c) = parse_double(toks[c], csv_path, lineno);
            ++row;
        }
        if (row != n_nodes)
            parse_fail(csv_path, lineno, "expected " + std::to_string(n_nodes) +
                                             " rows, got " + std::to_string(row));
    } else {
        throw std::runtime_error("missing file: " + tsv_path + " (or features.csv)");
    }

    Dataset d;
    d.graph = Graph(n_nodes, std::move(edges), directed);
    d.features = std::move(x);
    d.name = fs::path(dir).filename().string();

    const std::string labels_path = (fs::path(dir) / "labels.tsv").string();
    if (fs::exists(labels_path)) {
        const int n_classes =
            static_cast<int>(parse_long(need("n_classes"), meta_path, 0));
        std::ifstream lin(labels_path);
        LabelVector y;
        y.n_classes = n_classes;
        y.labels.assign(n_nodes, -1);
        lineno = 0;
        while (std::getline(lin, line)) {
            ++lineno;
            if (line.empty() || line[0] == '#') continue;
            auto toks = split(line, '\t');
            if (toks.size() != 2)
                parse_fail(labels_path, lineno, "expected 'node<TAB>class'");
            long node = parse_long(toks[0], labels_path, lineno);
            long cls = parse_long(toks[1], labels_path, lineno);
            if (node < 0 || node >= n_nodes)
                parse_fail(labels_path, lineno, "node id out of range");
            if (cls < 0 || cls >= n_classes)
                parse_fail(labels_path, lineno, "class id out of range");
            y.labels[node] = static_cast<int>(cls);
        }
        for (int i = 0; i < n_nodes; ++i)
            if (y.labels[i] < 0)
                throw std::runtime_error(labels_path + ": node " + std::to_string(i) +
                                         " has no label");
        d.labels = std::move(y);
    }

    validate_dataset(d);
    return d;
}

void save_dataset(const Dataset& d, const std::string& dir) {
    validate_dataset(d);
    std::error_code ec;
    fs::create_directories(dir, ec);
    auto open_out = [&](const std::string& name) {
        std::ofstream out(fs::path(dir) / name);
        if (!out)
            throw std::runtime_error("cannot write " + (fs::path(dir) / name).string());
        return out;
    };

    {
        auto out = open_out("meta");
        out << "n_nodes=" << d.graph.n_nodes() << "\n";
        out << "n_features=" << d.features.cols() << "\n";
        out << "n_classes=" << (d.labels ? d.labels->n_classes : 0) << "\n";
        out << "directed=" << (d.graph.directed() ? "true" : "false") << "\n";
        // Directed inputs are symmetrized with the max-weight rule downstream.
        out << "symmetrization=max\n";
        if (!out) throw std::runtime_error("I/O failure writing meta in " + dir);
    }
    {
        auto out = open_out("edges.tsv");
        for (auto& e : d.graph.edges())
            out << e.u << '\t' << e.v << '\t' << fmt17(e.w) << '\n';
        if (!out) throw std::runtime_error("I/O failure writing edges.tsv in " + dir);
    }
    {
        auto out = open_out("features.csv");
        for (Eigen::Index i = 0; i < d.features.rows(); ++i) {
            for (Eigen::Index j = 0; j < d.features.cols(); ++j) {
                if (j) out << ',';
                out << fmt17(d.features(i, j));
            }
            out << '\n';
        }
        if (!out)
            throw std::runtime_error("I/O failure writing features.csv in " + dir);
    }
    if (d.labels) {
        auto out = open_out("labels.tsv");
        for (std::size_t i = 0; i < d.labels->labels.size(); ++i)
            out << i << '\t' << d.labels->labels[i] << '\n';
        if (!out) throw std::runtime_error("I/O failure writing labels.tsv in " + dir);
    }
}

// --- sparsification ----------------------------------------------------------

void top_k_select_row(const Eigen::VectorXd& row_values, int row, int k,
                      std::vector<WeightedEdge>& out) {
    const int n = static_cast<int>(row_values.size());
    std::vector<int> cols;
    cols.reserve(n);
    for (int j = 0; j < n; ++j)
        if (j != row && row_values[j] != 0.0) cols.push_back(j);
    const int keep = std::min<int>(k, static_cast<int>(cols.size()));
    // Largest signed value first, ties to the lower column index.
    std::partial_sort(cols.begin(), cols.begin() + keep, cols.end(),
                      [&](int a, int b) {
                          if (row_values[a] != row_values[b])
                              return row_values[a] > row_values[b];
                          return a < b;
                      });
    for (int i = 0; i < keep; ++i)
        out.push_back({row, cols[i], row_values[cols[i]]});
}

Graph symmetrize_union(int n_nodes, std::vector<WeightedEdge> entries) {
    std::unordered_map<std::uint64_t, double> best;
    best.reserve(entries.size());
    for (auto& e : entries) {
        int u = e.u, v = e.v;
        if (u > v) std::swap(u, v);
        auto key = pair_key(u, v);
        auto [it, inserted] = best.emplace(key, e.w);
        if (!inserted) {
            // Keep the entry of larger absolute value; prefer the larger
            // signed value when magnitudes tie.
            double cur = it->second;
            if (std::abs(e.w) > std::abs(cur) ||
                (std::abs(e.w) == std::abs(cur) && e.w > cur))
                it->second = e.w;
        }
    }
    std::vector<WeightedEdge> edges;
    edges.reserve(best.size());
    for (auto& [key, w] : best)
        edges.push_back({static_cast<int>(key >> 32),
                         static_cast<int>(key & 0xffffffffULL), w});
    return Graph(n_nodes, std::move(edges), false);
}

Graph top_k_sparsify(const Eigen::MatrixXd& dense_adjacency, int k) {
    if (dense_adjacency.rows() != dense_adjacency.cols())
        throw std::invalid_argument("top_k_sparsify: matrix not square");
    if (k < 1) throw std::invalid_argument("top_k_sparsify: k must be >= 1");
    const int n = static_cast<int>(dense_adjacency.rows());
    k = std::min(k, n);
    std::vector<WeightedEdge> kept;
    kept.reserve(static_cast<std::size_t>(n) * std::min(k, n));
    for (int i = 0; i < n; ++i)
        top_k_select_row(dense_adjacency.row(i).transpose(), i, k, kept);
    return symmetrize_union(n, std::move(kept));
}

// --- homophily ----------------------------------------------------------------

double edge_homophily(const Graph& g, const LabelVector& y) {
    if (static_cast<int>(y.labels.size()) != g.n_nodes())
        throw std::invalid_argument("edge_homophily: label count != node count");
    std::size_t total = 0, same = 0;
    for (auto& e : g.symmetrized_edges()) {
        if (e.u == e.v) continue;
        ++total;
        if (y.labels[e.u] == y.labels[e.v]) ++same;
    }
    if (total == 0) throw std::runtime_error("edge_homophily: undefined homophily (edgeless graph)");
    return static_cast<double>(same) / static_cast<double>(total);
}

double node_homophily(const Graph& g, const LabelVector& y) {
    if (static_cast<int>(y.labels.size()) != g.n_nodes())
        throw std::invalid_argument("node_homophily: label count != node count");
    const int n = g.n_nodes();
    std::vector<int> same(n, 0), deg(n, 0);
    for (auto& e : g.symmetrized_edges()) {
        if (e.u == e.v) continue;
        deg[e.u]++;
        deg[e.v]++;
        if (y.labels[e.u] == y.labels[e.v]) {
            same[e.u]++;
            same[e.v]++;
        }
    }
    double sum = 0;
    int counted = 0;
    for (int i = 0; i < n; ++i) {
        if (deg[i] == 0) continue;
        sum += static_cast<double>(same[i]) / deg[i];
        ++counted;
    }
    if (counted == 0)
        throw std::runtime_error("node_homophily: undefined homophily (edgeless graph)");
    return sum / counted;
}

// --- kNN graph ------------------------------------------------------------------

Graph build_knn_graph(const FeatureMatrix& x, int k, KnnMetric metric) {
    const int n = static_cast<int>(x.rows());
    if (k < 1 || k >= n)
        throw std::invalid_argument("build_knn_graph: need 1 <= k < n_rows");

    Eigen::MatrixXd rows = x;
    if (metric == KnnMetric::cosine) {
        for (int i = 0; i < n; ++i) {
            double norm = rows.row(i).norm();
            if (norm == 0.0)
                throw std::invalid_argument("build_knn_graph: row " + std::to_string(i) +
                                            " has zero norm under cosine metric");
            rows.row(i) /= norm;
        }
    }

    // Pairwise scores blockwise: for cosine, similarity (higher = closer);
    // for euclidean, squared distance (lower = closer).
    Eigen::VectorXd sq;
    if (metric == KnnMetric::euclidean) sq = rows.rowwise().squaredNorm();

    std::vector<WeightedEdge> entries;
    entries.reserve(static_cast<std::size_t>(n) * k);
    const int block = 512;
    Eigen::MatrixXd scores;
    std::vector<int> idx(n);
    for (int r0 = 0; r0 < n; r0 += block) {
        const int r1 = std::min(n, r0 + block);
        scores.noalias() = rows.middleRows(r0, r1 - r0) * rows.transpose();
        for (int i = r0; i < r1; ++i) {
            std::iota(idx.begin(), idx.end(), 0);
            auto closer = [&](int a, int b) {
                double sa, sb;
                if (metric == KnnMetric::cosine) {
                    sa = -scores(i - r0, a);
                    sb = -scores(i - r0, b);
                } else {
                    sa = sq[i] + sq[a] - 2.0 * scores(i - r0, a);
                    sb = sq[i] + sq[b] - 2.0 * scores(i - r0, b);
                }
                if (sa != sb) return sa < sb;
                return a < b;
            };
            // Self excluded by swapping it to the back before selection.
            std::swap(idx[i], idx[n - 1]);
            std::partial_sort(idx.begin(), idx.begin() + k, idx.end() - 1, closer);
            for (int j = 0; j < k; ++j) entries.push_back({i, idx[j], 1.0});
        }
    }
    return symmetrize_union(n, std::move(entries));
}

} // namespace jdr
