#include "jdr/experiment.hpp"
#include "jdr/csbm.hpp"
#include "jdr/eval.hpp"
#include "jdr/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;

namespace jdr {

// --- config parsing ---------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    auto e = s.find_last_not_of(" \t\r");
    if (b == std::string::npos) return "";
    return s.substr(b, e - b + 1);
}

} // namespace

KeyValueConfig KeyValueConfig::parse_string(const std::string& text,
                                            const std::string& origin) {
    KeyValueConfig cfg;
    cfg.origin_ = origin;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(lineno) +
                              ": expected 'key = value'");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
        cfg.kv_[key] = value;
    }
    return cfg;
}

KeyValueConfig KeyValueConfig::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_string(ss.str(), path);
}

bool KeyValueConfig::has(const std::string& key) const { return kv_.count(key) > 0; }

std::string KeyValueConfig::get_string(const std::string& key) const {
    auto it = kv_.find(key);
    if (it == kv_.end())
        throw ConfigError(origin_ + ": missing required key '" + key + "'");
    return it->second;
}

std::string KeyValueConfig::get_string(const std::string& key,
                                       const std::string& dflt) const {
    auto it = kv_.find(key);
    return it == kv_.end() ? dflt : it->second;
}

double KeyValueConfig::get_double(const std::string& key) const {
    const std::string raw = get_string(key);
    try {
        std::size_t pos = 0;
        double v = std::stod(raw, &pos);
        if (pos != raw.size()) throw std::invalid_argument(raw);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(origin_ + ": key '" + key + "' is not a number: '" +
                          raw + "'");
    }
}

double KeyValueConfig::get_double(const std::string& key, double dflt) const {
    return has(key) ? get_double(key) : dflt;
}

long KeyValueConfig::get_int(const std::string& key) const {
    const std::string raw = get_string(key);
    try {
        std::size_t pos = 0;
        long v = std::stol(raw, &pos);
        if (pos != raw.size()) throw std::invalid_argument(raw);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(origin_ + ": key '" + key + "' is not an integer: '" +
                          raw + "'");
    }
}

long KeyValueConfig::get_int(const std::string& key, long dflt) const {
    return has(key) ? get_int(key) : dflt;
}

bool KeyValueConfig::get_bool(const std::string& key, bool dflt) const {
    if (!has(key)) return dflt;
    const std::string raw = get_string(key);
    if (raw == "true" || raw == "1" || raw == "yes") return true;
    if (raw == "false" || raw == "0" || raw == "no") return false;
    throw ConfigError(origin_ + ": key '" + key + "' is not a boolean: '" + raw + "'");
}

std::vector<double> KeyValueConfig::get_double_list(const std::string& key) const {
    const std::string raw = get_string(key);
    std::vector<double> out;
    std::istringstream ss(raw);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        tok = trim(tok);
        if (tok.empty()) continue;
        try {
            out.push_back(std::stod(tok));
        } catch (const std::exception&) {
            throw ConfigError(origin_ + ": key '" + key +
                              "' has a non-numeric entry: '" + tok + "'");
        }
    }
    if (out.empty())
        throw ConfigError(origin_ + ": key '" + key + "' is an empty list");
    return out;
}

// --- tabulated hyperparameters -------------------------------------------------

namespace {

struct TableRow {
    double phi;
    int k;
    int l_a;    // -1 = side inactive
    int l_x;    // -1 = side inactive
    double eta_a;
    double eta_x1;
    double eta_x2;
    double digl_alpha;
};

// Synthetic-sweep hyperparameters; -1 / 0.0 encode the inactive side.
const TableRow kTable[] = {
    {-1.000, 28, -1, 10, 0.000, 0.482, 0.916, 1.00},
    {-0.875, 41, 5, 8, 0.101, 0.479, 0.858, 1.00},
    {-0.750, 40, 6, 9, 0.042, 0.498, 0.846, 1.00},
    {-0.625, 48, 6, 8, 0.036, 0.453, 0.862, 1.00},
    {-0.500, 50, 9, 10, 0.189, 0.412, 0.991, 1.00},
    {-0.375, 48, 8, 10, 0.879, 0.973, 0.773, 1.00},
    {-0.250, 80, 1, 1, 1.000, 0.000, 0.000, 1.00},
    {-0.125, 80, 1, 1, 1.000, 0.000, 0.000, 1.00},
    {0.000, 80, 1, 1, 1.000, 0.000, 0.000, 0.95},
    {0.125, 76, 1, -1, 0.650, 0.000, 0.000, 1.00},
    {0.250, 33, 1, -1, 0.951, 0.000, 0.000, 0.50},
    {0.375, 18, 10, 10, 0.856, 0.023, 0.228, 0.05},
    {0.500, 18, 10, 9, 0.415, 0.263, 0.880, 0.05},
    {0.625, 22, 8, 7, 0.264, 0.340, 0.807, 0.05},
    {0.750, 15, 7, 9, 0.056, 0.474, 0.778, 0.05},
    {0.875, 16, 10, 8, 0.035, 0.228, 0.981, 0.05},
    {1.000, 80, -1, 1, 0.000, 1.000, 1.000, 0.05},
};

const TableRow& find_row(double phi) {
    for (const auto& row : kTable)
        if (std::abs(row.phi - phi) < 1e-9) return row;
    std::ostringstream msg;
    msg << "no tabulated configuration for phi=" << phi << "; valid values:";
    for (const auto& row : kTable) msg << ' ' << row.phi;
    throw ConfigError(msg.str());
}

} // namespace

const std::vector<double>& tabulated_phis() {
    static const std::vector<double> phis = [] {
        std::vector<double> v;
        for (const auto& row : kTable) v.push_back(row.phi);
        return v;
    }();
    return phis;
}

JdrConfig tabulated_jdr_config(double phi, int k_cap) {
    const TableRow& row = find_row(phi);
    JdrConfig cfg;
    cfg.iterations = k_cap > 0 ? std::min(row.k, k_cap) : row.k;
    cfg.graph_rank = row.l_a > 0 ? row.l_a : 1;
    cfg.feature_rank = row.l_x > 0 ? row.l_x : 1;
    cfg.eta_A = row.l_a > 0 ? row.eta_a : 0.0;
    cfg.eta_X1 = row.l_x > 0 ? row.eta_x1 : 0.0;
    cfg.eta_X2 = row.l_x > 0 ? row.eta_x2 : 0.0;
    cfg.top_k = 64;
    // Heterophilic settings order eigenvalues by magnitude.
    cfg.ordering = phi < 0.0 ? EigenOrdering::by_abs_desc
                             : EigenOrdering::by_value_desc;
    return cfg;
}

double tabulated_digl_alpha(double phi) { return find_row(phi).digl_alpha; }

// --- bootstrap -------------------------------------------------------------------

double percentile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.empty())
        throw std::invalid_argument("percentile_sorted: empty sample");
    if (q <= 0.0) return sorted.front();
    if (q >= 1.0) return sorted.back();
    const double pos = q * (sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const double frac = pos - lo;
    if (lo + 1 >= sorted.size()) return sorted.back();
    return sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac;
}

BootstrapSummary bootstrap_ci(const std::vector<double>& values,
                              int n_resamples, std::uint64_t seed) {
    if (values.empty())
        throw std::invalid_argument("bootstrap_ci: empty sample");
    BootstrapSummary s;
    s.n = static_cast<int>(values.size());
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / values.size();
    if (values.size() == 1) {
        s.ci_low = s.ci_high = values[0];
        return s;
    }
    auto rng = make_rng(seed, "bootstrap");
    std::uniform_int_distribution<std::size_t> pick(0, values.size() - 1);
    std::vector<double> means(n_resamples);
    for (int b = 0; b < n_resamples; ++b) {
        double acc = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i) acc += values[pick(rng)];
        means[b] = acc / values.size();
    }
    std::sort(means.begin(), means.end());
    s.ci_low = percentile_sorted(means, 0.025);
    s.ci_high = percentile_sorted(means, 0.975);
    return s;
}

// --- output files ------------------------------------------------------------------

namespace {

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

void write_results_csv(const std::vector<ResultRecord>& records,
                       const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "experiment,seed,condition,metric,value,wall_ms\n";
    for (const auto& r : records)
        out << r.experiment << ',' << r.seed << ',' << r.condition << ','
            << r.metric << ',' << fmt17(r.value) << ',' << fmt17(r.wall_ms)
            << '\n';
    if (!out) throw std::runtime_error("I/O failure writing " + path);
}

void write_summary_json(const std::vector<ResultRecord>& records,
                        const std::string& path, int n_resamples,
                        std::uint64_t seed) {
    // Group by (experiment, condition, metric), preserving insertion order.
    std::vector<std::tuple<std::string, std::string, std::string>> order;
    std::map<std::tuple<std::string, std::string, std::string>,
             std::vector<double>>
        groups;
    for (const auto& r : records) {
        auto key = std::make_tuple(r.experiment, r.condition, r.metric);
        auto [it, inserted] = groups.try_emplace(key);
        if (inserted) order.push_back(key);
        it->second.push_back(r.value);
    }

    nlohmann::ordered_json root;
    root["n_resamples"] = n_resamples;
    root["seed"] = seed;
    nlohmann::ordered_json exps = nlohmann::ordered_json::object();
    for (const auto& key : order) {
        const auto& [exp, cond, metric] = key;
        auto s = bootstrap_ci(groups[key], n_resamples,
                              derive_seed(seed, exp + "/" + cond + "/" + metric));
        nlohmann::ordered_json entry;
        entry["n"] = s.n;
        entry["mean"] = s.mean;
        entry["ci_low"] = s.ci_low;
        entry["ci_high"] = s.ci_high;
        exps[exp][cond][metric] = entry;
    }
    root["experiments"] = exps;

    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << root.dump(2) << '\n';
    if (!out) throw std::runtime_error("I/O failure writing " + path);
}

// --- runner ------------------------------------------------------------------------

namespace {

struct ExperimentSpec {
    std::string kind;
    std::uint64_t root_seed = 0;
    int n_seeds = 1;
    std::string out_dir;
    KeyValueConfig raw;
};

JdrConfig jdr_config_from(const KeyValueConfig& cfg, std::uint64_t solver_seed) {
    JdrConfig j;
    j.iterations = static_cast<int>(cfg.get_int("jdr.K"));
    j.eta_A = cfg.get_double("jdr.eta_A");
    j.eta_X1 = cfg.get_double("jdr.eta_X1");
    j.eta_X2 = cfg.get_double("jdr.eta_X2");
    if (j.eta_A > 0.0) j.graph_rank = static_cast<int>(cfg.get_int("jdr.L_A"));
    else j.graph_rank = static_cast<int>(cfg.get_int("jdr.L_A", 1));
    if (j.eta_X1 > 0.0) j.feature_rank = static_cast<int>(cfg.get_int("jdr.L_X"));
    else j.feature_rank = static_cast<int>(cfg.get_int("jdr.L_X", 1));
    j.top_k = static_cast<int>(cfg.get_int("jdr.top_k", 64));
    const std::string ord = cfg.get_string("jdr.ordering", "by_value");
    if (ord == "by_value")
        j.ordering = EigenOrdering::by_value_desc;
    else if (ord == "by_abs")
        j.ordering = EigenOrdering::by_abs_desc;
    else
        throw ConfigError("key 'jdr.ordering' must be by_value or by_abs, got '" +
                          ord + "'");
    j.binarize_features = cfg.get_bool("jdr.binarize_features", false);
    j.binarize_graph = cfg.get_bool("jdr.binarize_graph", false);
    j.gauss_seidel = cfg.get_bool("jdr.gauss_seidel", false);
    j.trace_L = static_cast<int>(cfg.get_int("jdr.trace_L", 0));
    j.solver.tol = cfg.get_double("jdr.tol", 1e-8);
    j.solver.max_iter = static_cast<int>(cfg.get_int("jdr.max_iter", 0));
    j.solver.seed = solver_seed;
    return j;
}

JdrConfig resolve_jdr_config(const ExperimentSpec& spec, double phi,
                             std::uint64_t solver_seed) {
    if (spec.raw.get_bool("jdr.replay", false)) {
        JdrConfig j =
            tabulated_jdr_config(phi, static_cast<int>(spec.raw.get_int("jdr.K_cap", 0)));
        j.solver.tol = spec.raw.get_double("jdr.tol", 1e-8);
        j.solver.seed = solver_seed;
        j.trace_L = static_cast<int>(spec.raw.get_int("jdr.trace_L", 0));
        j.binarize_graph = spec.raw.get_bool("jdr.binarize_graph", false);
        return j;
    }
    return jdr_config_from(spec.raw, solver_seed);
}

Dataset make_dataset(const ExperimentSpec& spec, double phi, std::uint64_t seed) {
    if (spec.raw.has("dataset.path")) return load_dataset(spec.raw.get_string("dataset.path"));
    CsbmParams p = CsbmParams::from_phi(
        static_cast<int>(spec.raw.get_int("csbm.n")),
        static_cast<int>(spec.raw.get_int("csbm.f")),
        spec.raw.get_double("csbm.d", 5.0), phi,
        spec.raw.get_double("csbm.epsilon", 3.25), seed);
    return sample_csbm(p);
}

std::string phi_label(double phi) {
    std::ostringstream ss;
    ss << "phi=" << phi;
    return ss.str();
}

void append_sc_accuracy(std::vector<ResultRecord>& rows, const std::string& exp,
                        std::uint64_t seed, const std::string& condition,
                        const Graph& g, const LabelVector& labels, bool raw_graph,
                        EigenOrdering ordering, std::uint64_t sc_seed) {
    ClusteringOptions opts;
    opts.skip_first = raw_graph; // JDR/diffusion outputs keep their first mode
    opts.ordering = ordering;
    opts.seed = sc_seed;
    auto res = spectral_cluster(g, labels.n_classes, opts, &labels);
    rows.push_back({exp, seed, condition, "sc_accuracy", res.accuracy, 0.0});
}

std::vector<ResultRecord> run_sweep_cell(const ExperimentSpec& spec, double phi,
                                         int seed_idx, bool with_sc) {
    const std::uint64_t seed = derive_seed(spec.root_seed, "seed", seed_idx);
    const std::string exp = spec.kind + "/" + phi_label(phi);
    std::vector<ResultRecord> rows;

    Dataset d = make_dataset(spec, phi, derive_seed(seed, "dataset"));
    JdrConfig jcfg = resolve_jdr_config(spec, phi, derive_seed(seed, "solver"));
    const int align_l = static_cast<int>(spec.raw.get_int(
        "eval.alignment_L", d.labels ? d.labels->n_classes : 2));

    rows.push_back({exp, seed, "none", "alignment_before",
                    dataset_alignment(d, align_l, jcfg.ordering, jcfg.solver),
                    0.0});

    JdrOutput out = jdr_run(d, jcfg);
    Dataset after;
    after.graph = out.rewired_graph;
    after.features = out.denoised_features;
    after.labels = d.labels;
    rows.push_back({exp, seed, "jdr", "alignment_after",
                    dataset_alignment(after, align_l, jcfg.ordering, jcfg.solver),
                    0.0});
    if (with_sc && d.labels) {
        if (spec.raw.get_bool("eval.sc_baseline", false))
            append_sc_accuracy(rows, exp, seed, "none", d.graph, *d.labels, true,
                               jcfg.ordering, derive_seed(seed, "sc.base"));
        append_sc_accuracy(rows, exp, seed, "jdr", out.rewired_graph, *d.labels,
                           false, jcfg.ordering, derive_seed(seed, "sc.jdr"));
    }

    if (spec.raw.has("digl.alpha") || spec.raw.get_bool("digl.replay", false)) {
        DiglConfig dcfg;
        dcfg.alpha = spec.raw.get_bool("digl.replay", false)
                         ? tabulated_digl_alpha(phi)
                         : spec.raw.get_double("digl.alpha");
        dcfg.top_k = static_cast<int>(spec.raw.get_int("digl.top_k", 64));
        PprResult ppr = ppr_diffuse(d.graph, dcfg);
        Dataset diffused;
        diffused.graph = ppr.graph;
        diffused.features = d.features;
        diffused.labels = d.labels;
        if (ppr.graph.n_edges() > 0)
            rows.push_back({exp, seed, "digl", "alignment_after",
                            dataset_alignment(diffused, align_l, jcfg.ordering,
                                              jcfg.solver),
                            0.0});
        if (with_sc && d.labels && ppr.graph.n_edges() > 0)
            append_sc_accuracy(rows, exp, seed, "digl", ppr.graph, *d.labels,
                               false, jcfg.ordering, derive_seed(seed, "sc.digl"));
    }
    return rows;
}

std::vector<ResultRecord> run_real_dataset(const ExperimentSpec& spec,
                                           int seed_idx) {
    const std::uint64_t seed = derive_seed(spec.root_seed, "seed", seed_idx);
    const std::string exp = spec.kind;
    std::vector<ResultRecord> rows;
    Dataset d = load_dataset(spec.raw.get_string("dataset.path"));
    JdrConfig jcfg = jdr_config_from(spec.raw, derive_seed(seed, "solver"));
    const int align_l = static_cast<int>(spec.raw.get_int(
        "eval.alignment_L", d.labels ? d.labels->n_classes : 2));

    rows.push_back({exp, seed, "none", "alignment_before",
                    dataset_alignment(d, align_l, jcfg.ordering, jcfg.solver),
                    0.0});
    JdrOutput out = jdr_run(d, jcfg);
    Dataset after;
    after.graph = out.rewired_graph;
    after.features = out.denoised_features;
    after.labels = d.labels;
    rows.push_back({exp, seed, "jdr", "alignment_after",
                    dataset_alignment(after, align_l, jcfg.ordering, jcfg.solver),
                    0.0});
    if (d.labels) {
        if (spec.raw.get_bool("eval.sc_baseline", false))
            append_sc_accuracy(rows, exp, seed, "none", d.graph, *d.labels, true,
                               jcfg.ordering, derive_seed(seed, "sc.base"));
        append_sc_accuracy(rows, exp, seed, "jdr", out.rewired_graph, *d.labels,
                           false, jcfg.ordering, derive_seed(seed, "sc.jdr"));
    }
    return rows;
}

std::vector<ResultRecord> run_overlap_step(const ExperimentSpec& spec, int seed_idx) {
    const std::uint64_t seed = derive_seed(spec.root_seed, "seed", seed_idx);
    const std::string exp = spec.kind;
    const std::string side_str = spec.raw.get_string("overlap.side", "graph");
    if (side_str != "graph" && side_str != "features")
        throw ConfigError("key 'overlap.side' must be graph or features");
    OverlapStepReport rep = check_overlap_step(
        static_cast<int>(spec.raw.get_int("overlap.n")),
        static_cast<int>(spec.raw.get_int("overlap.f")),
        spec.raw.get_double("overlap.lambda"), spec.raw.get_double("overlap.mu"),
        spec.raw.get_double("overlap.eta"),
        side_str == "graph" ? InterpSide::graph : InterpSide::features,
        static_cast<int>(spec.raw.get_int("overlap.trials", 50)), seed);
    return {
        {exp, seed, "jdr", "mean_overlap_before", rep.mean_overlap_before, 0.0},
        {exp, seed, "jdr", "mean_overlap_after", rep.mean_overlap_after, 0.0},
        {exp, seed, "jdr", "fraction_improved", rep.fraction_improved, 0.0},
    };
}

std::vector<ResultRecord> run_ridge(const ExperimentSpec& spec, int seed_idx) {
    const std::uint64_t seed = derive_seed(spec.root_seed, "seed", seed_idx);
    const std::string exp = spec.kind;
    const std::string side_str = spec.raw.get_string("ridge.side", "A");
    if (side_str != "A" && side_str != "X")
        throw ConfigError("key 'ridge.side' must be A or X");
    std::vector<double> grid = spec.raw.get_double_list("ridge.eta_grid");
    RidgeMseReport rep = ridge_denoise_sweep(
        static_cast<int>(spec.raw.get_int("ridge.n")),
        static_cast<int>(spec.raw.get_int("ridge.f")),
        spec.raw.get_double("ridge.lambda"), spec.raw.get_double("ridge.mu"),
        side_str == "A" ? DenoiseSide::A : DenoiseSide::X, grid,
        static_cast<int>(spec.raw.get_int("ridge.trials", 10)),
        spec.raw.get_double("ridge.r", 0.1), seed);
    std::vector<ResultRecord> rows;
    for (const auto& pt : rep.points) {
        std::ostringstream name;
        name << "mse@eta=" << pt.eta;
        rows.push_back({exp, seed, "jdr", name.str(), pt.mean_mse, 0.0});
    }
    return rows;
}

std::vector<ResultRecord> run_diffusion(const ExperimentSpec& spec, int seed_idx) {
    const std::uint64_t seed = derive_seed(spec.root_seed, "seed", seed_idx);
    std::vector<ResultRecord> rows;
    std::vector<double> phis = spec.raw.has("csbm.phi")
                                   ? spec.raw.get_double_list("csbm.phi")
                                   : std::vector<double>{0.0};
    for (double phi : phis) {
        const std::string exp = spec.kind + (spec.raw.has("dataset.path")
                                                 ? ""
                                                 : "/" + phi_label(phi));
        Dataset d = make_dataset(spec, phi, derive_seed(seed, "dataset"));
        DiglConfig dcfg;
        dcfg.alpha = spec.raw.get_bool("digl.replay", false)
                         ? tabulated_digl_alpha(phi)
                         : spec.raw.get_double("digl.alpha");
        dcfg.top_k = static_cast<int>(spec.raw.get_int("digl.top_k", 64));
        PprResult ppr = ppr_diffuse(d.graph, dcfg);
        const int align_l = static_cast<int>(spec.raw.get_int(
            "eval.alignment_L", d.labels ? d.labels->n_classes : 2));
        Dataset diffused;
        diffused.graph = ppr.graph;
        diffused.features = d.features;
        diffused.labels = d.labels;
        rows.push_back({exp, seed, "none", "alignment_before",
                        dataset_alignment(d, align_l,
                                          EigenOrdering::by_value_desc, {}),
                        0.0});
        if (ppr.graph.n_edges() > 0) {
            rows.push_back({exp, seed, "digl", "alignment_after",
                            dataset_alignment(diffused, align_l,
                                              EigenOrdering::by_value_desc, {}),
                            0.0});
            if (d.labels)
                append_sc_accuracy(rows, exp, seed, "digl", ppr.graph, *d.labels,
                                   false, EigenOrdering::by_value_desc,
                                   derive_seed(seed, "sc.digl"));
        }
        if (spec.raw.has("dataset.path")) break;
    }
    return rows;
}

int resolve_threads(const ExperimentSpec& spec, const RunOptions& opts) {
    if (opts.threads > 0) return opts.threads;
    if (const char* env = std::getenv("JDR_THREADS")) {
        int v = std::atoi(env);
        if (v > 0) return v;
    }
    return static_cast<int>(spec.raw.get_int("threads", 1));
}

} // namespace

RunOutcome run_experiment_file(const std::string& config_path,
                               const RunOptions& opts) {
    RunOutcome outcome;
    ExperimentSpec spec;
    spec.raw = KeyValueConfig::parse_file(config_path);
    spec.kind = spec.raw.get_string("experiment");
    spec.root_seed = static_cast<std::uint64_t>(spec.raw.get_int("seed", 0));
    spec.n_seeds = opts.n_seeds_override > 0
                       ? opts.n_seeds_override
                       : static_cast<int>(spec.raw.get_int("n_seeds", 1));
    spec.out_dir = !opts.out_dir.empty() ? opts.out_dir
                                         : spec.raw.get_string("out", "results");
    if (spec.n_seeds < 1) throw ConfigError("key 'n_seeds' must be >= 1");

    const bool has_path = spec.raw.has("dataset.path");
    const bool has_csbm = spec.raw.has("csbm.n");
    const bool needs_dataset =
        spec.kind == "csbm_sweep" || spec.kind == "alignment_sweep" ||
        spec.kind == "real_dataset" || spec.kind == "diffusion_baseline";
    if (needs_dataset && has_path == has_csbm)
        throw ConfigError(
            "exactly one dataset source required: 'dataset.path' or 'csbm.*'");

    // Cell list: (phi or nan) x seed, in deterministic order.
    struct Cell {
        double phi;
        int seed_idx;
    };
    std::vector<Cell> cells;
    std::vector<double> phis{0.0};
    if ((spec.kind == "csbm_sweep" || spec.kind == "alignment_sweep") && has_csbm)
        phis = spec.raw.get_double_list("csbm.phi");
    for (double phi : phis)
        for (int s = 0; s < spec.n_seeds; ++s) cells.push_back({phi, s});
    if (spec.kind == "real_dataset" || spec.kind == "overlap_step" ||
        spec.kind == "ridge_sweep" || spec.kind == "diffusion_baseline") {
        cells.clear();
        for (int s = 0; s < spec.n_seeds; ++s) cells.push_back({0.0, s});
    }

    auto run_cell = [&](const Cell& c) -> std::vector<ResultRecord> {
        if (spec.kind == "csbm_sweep") return run_sweep_cell(spec, c.phi, c.seed_idx, true);
        if (spec.kind == "alignment_sweep")
            return run_sweep_cell(spec, c.phi, c.seed_idx, false);
        if (spec.kind == "real_dataset") return run_real_dataset(spec, c.seed_idx);
        if (spec.kind == "overlap_step") return run_overlap_step(spec, c.seed_idx);
        if (spec.kind == "ridge_sweep") return run_ridge(spec, c.seed_idx);
        if (spec.kind == "diffusion_baseline") return run_diffusion(spec, c.seed_idx);
        throw ConfigError("unknown experiment kind '" + spec.kind + "'");
    };
    if (spec.kind != "csbm_sweep" && spec.kind != "alignment_sweep" &&
        spec.kind != "real_dataset" && spec.kind != "overlap_step" &&
        spec.kind != "ridge_sweep" && spec.kind != "diffusion_baseline")
        throw ConfigError("unknown experiment kind '" + spec.kind + "'");

    const int threads = std::min<int>(resolve_threads(spec, opts),
                                      static_cast<int>(cells.size()));
    std::vector<std::vector<ResultRecord>> per_cell(cells.size());
    std::vector<std::string> errors(cells.size());
    std::vector<int> error_codes(cells.size(), 0);

    auto worker_body = [&](std::size_t idx) {
        const auto t0 = std::chrono::steady_clock::now();
        try {
            per_cell[idx] = run_cell(cells[idx]);
        } catch (const ConfigError& e) {
            errors[idx] = e.what();
            error_codes[idx] = 1;
            return;
        } catch (const std::exception& e) {
            errors[idx] = e.what();
            error_codes[idx] = 2;
            return;
        }
        if (opts.timing) {
            const double ms = std::chrono::duration<double, std::milli>(
                                  std::chrono::steady_clock::now() - t0)
                                  .count();
            for (auto& r : per_cell[idx]) r.wall_ms = ms;
        }
    };

    if (threads <= 1) {
        for (std::size_t i = 0; i < cells.size(); ++i) worker_body(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t)
            pool.emplace_back([&] {
                for (std::size_t i = next.fetch_add(1); i < cells.size();
                     i = next.fetch_add(1))
                    worker_body(i);
            });
        for (auto& th : pool) th.join();
    }

    // Collect in deterministic cell order; flush whatever succeeded even if
    // some seed failed.
    for (std::size_t i = 0; i < cells.size(); ++i)
        for (auto& r : per_cell[i]) outcome.records.push_back(std::move(r));

    fs::create_directories(spec.out_dir);
    write_results_csv(outcome.records, (fs::path(spec.out_dir) / "results.csv").string());
    write_summary_json(outcome.records,
                       (fs::path(spec.out_dir) / "summary.json").string(), 1000,
                       spec.root_seed);

    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (!errors[i].empty()) {
            outcome.exit_code = error_codes[i];
            outcome.error = "seed " + std::to_string(cells[i].seed_idx) +
                            " failed: " + errors[i];
            break;
        }
    }
    return outcome;
}

} // namespace jdr
