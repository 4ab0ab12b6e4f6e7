#include "jdr/csbm.hpp"
#include "jdr/diffusion.hpp"
#include "jdr/eval.hpp"
#include "jdr/experiment.hpp"
#include "jdr/jdr.hpp"
#include "jdr/rng.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

int cmd_run(const std::string& config_path, const jdr::RunOptions& opts) {
    auto outcome = jdr::run_experiment_file(config_path, opts);
    if (!outcome.error.empty()) {
        std::cerr << "error: " << outcome.error << "\n";
        std::cerr << "partial results flushed (" << outcome.records.size()
                  << " rows)\n";
    } else {
        std::cout << outcome.records.size() << " result rows written\n";
    }
    return outcome.exit_code;
}

int cmd_gen_csbm(double phi, int n, int f, double d, double epsilon,
                 std::uint64_t seed, const std::string& out) {
    jdr::CsbmParams p = jdr::CsbmParams::from_phi(n, f, d, phi, epsilon, seed);
    jdr::Dataset data = jdr::sample_csbm(p);
    jdr::save_dataset(data, out);
    double h = jdr::edge_homophily(data.graph, *data.labels);
    std::cout << "wrote " << out << ": " << data.graph.n_nodes() << " nodes, "
              << data.graph.n_edges() << " edges, lambda=" << p.lambda
              << ", mu^2=" << p.mu * p.mu << ", edge homophily=" << h
              << ", components=" << data.graph.n_components() << "\n";
    return kExitOk;
}

int cmd_rewire(const std::string& dataset_dir, const std::string& config_path,
               const std::string& out, std::uint64_t seed) {
    jdr::Dataset d = jdr::load_dataset(dataset_dir);
    auto kv = jdr::KeyValueConfig::parse_file(config_path);

    jdr::JdrConfig cfg;
    cfg.iterations = static_cast<int>(kv.get_int("jdr.K"));
    cfg.eta_A = kv.get_double("jdr.eta_A");
    cfg.eta_X1 = kv.get_double("jdr.eta_X1");
    cfg.eta_X2 = kv.get_double("jdr.eta_X2");
    cfg.graph_rank = static_cast<int>(kv.get_int("jdr.L_A", 1));
    cfg.feature_rank = static_cast<int>(kv.get_int("jdr.L_X", 1));
    cfg.top_k = static_cast<int>(kv.get_int("jdr.top_k", 64));
    cfg.binarize_features = kv.get_bool("jdr.binarize_features", false);
    cfg.binarize_graph = kv.get_bool("jdr.binarize_graph", false);
    cfg.trace_L = static_cast<int>(kv.get_int("jdr.trace_L", 0));
    cfg.solver.tol = kv.get_double("jdr.tol", 1e-8);
    cfg.solver.max_iter = static_cast<int>(kv.get_int("jdr.max_iter", 0));
    cfg.solver.seed = seed;
    const std::string ord = kv.get_string("jdr.ordering", "by_value");
    if (ord == "by_abs")
        cfg.ordering = jdr::EigenOrdering::by_abs_desc;
    else if (ord != "by_value")
        throw jdr::ConfigError("jdr.ordering must be by_value or by_abs");

    jdr::JdrOutput res = jdr::jdr_run(d, cfg);
    jdr::Dataset out_ds;
    out_ds.graph = res.rewired_graph;
    out_ds.features = res.denoised_features;
    out_ds.labels = d.labels;
    out_ds.name = d.name + "_jdr";
    jdr::save_dataset(out_ds, out);

    std::cout << "wrote " << out << ": " << out_ds.graph.n_edges()
              << " edges; alignment trace:";
    for (double a : res.alignment_trace) std::printf(" %.4f", a);
    std::cout << "\n";
    return kExitOk;
}

int cmd_eval_sc(const std::string& dataset_dir, int k, bool on_features,
                int knn_k, bool skip_first, const std::string& ordering,
                std::uint64_t seed) {
    jdr::Dataset d = jdr::load_dataset(dataset_dir);
    jdr::ClusteringOptions opts;
    opts.skip_first = skip_first;
    opts.seed = seed;
    if (ordering == "by_abs")
        opts.ordering = jdr::EigenOrdering::by_abs_desc;
    else if (ordering != "by_value")
        throw jdr::ConfigError("--ordering must be by_value or by_abs");

    const jdr::LabelVector* labels = d.labels ? &*d.labels : nullptr;
    if (k == 0) {
        if (!labels)
            throw jdr::ConfigError("dataset has no labels; pass --k explicitly");
        k = labels->n_classes;
    }
    jdr::ClusteringResult res =
        on_features
            ? jdr::spectral_cluster_features(d.features, k, knn_k,
                                             jdr::KnnMetric::cosine, opts, labels)
            : jdr::spectral_cluster(d.graph, k, opts, labels);

    std::cout << "clusters=" << k << " inertia=" << res.kmeans_inertia
              << " components=" << res.n_components;
    if (res.disconnected_warning) std::cout << " (warning: graph disconnected)";
    if (res.accuracy >= 0) std::cout << " accuracy=" << res.accuracy;
    std::cout << "\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Joint denoising and rewiring of graphs with node features"};
    app.require_subcommand(1);

    // run
    std::string run_config, run_out;
    jdr::RunOptions run_opts;
    auto* run = app.add_subcommand("run", "Run an experiment config");
    run->add_option("config", run_config, "experiment config file")->required();
    run->add_option("--out", run_opts.out_dir, "output directory override");
    run->add_option("--seeds", run_opts.n_seeds_override, "number of seeds override");
    run->add_option("--threads", run_opts.threads,
                    "worker threads (env JDR_THREADS also honored)");
    run->add_flag("--timing", run_opts.timing,
                  "record wall-clock times in results.csv (breaks byte-for-byte "
                  "reproducibility of the csv)");

    // gen-csbm
    double gc_phi = 0.0, gc_d = 5.0, gc_eps = 3.25;
    int gc_n = 5000, gc_f = 2000;
    std::uint64_t gc_seed = 0;
    std::string gc_out;
    auto* gen = app.add_subcommand("gen-csbm", "Sample a synthetic dataset");
    gen->add_option("--phi", gc_phi, "signal balance in [-1, 1]")->required();
    gen->add_option("--n", gc_n, "nodes");
    gen->add_option("--f", gc_f, "feature dimensions");
    gen->add_option("--d", gc_d, "average degree");
    gen->add_option("--epsilon", gc_eps, "margin above the detection threshold");
    gen->add_option("--seed", gc_seed, "root seed");
    gen->add_option("--out", gc_out, "output dataset directory")->required();

    // rewire
    std::string rw_dataset, rw_config, rw_out;
    std::uint64_t rw_seed = 0;
    auto* rw = app.add_subcommand("rewire", "Denoise and rewire a dataset");
    rw->add_option("dataset", rw_dataset, "dataset directory")->required();
    rw->add_option("--config", rw_config, "config file with jdr.* keys")->required();
    rw->add_option("--out", rw_out, "output dataset directory")->required();
    rw->add_option("--seed", rw_seed, "solver seed");

    // eval-sc
    std::string sc_dataset, sc_ordering = "by_value";
    int sc_k = 0, sc_knn = 10;
    bool sc_features = false, sc_no_skip = false;
    std::uint64_t sc_seed = 0;
    auto* sc = app.add_subcommand("eval-sc", "Spectral clustering evaluation");
    sc->add_option("dataset", sc_dataset, "dataset directory")->required();
    sc->add_option("--k", sc_k, "clusters (default: class count)");
    sc->add_flag("--features", sc_features, "cluster a kNN graph of the features");
    sc->add_option("--knn", sc_knn, "kNN neighbors for --features");
    sc->add_flag("--no-skip-first", sc_no_skip, "keep the leading eigenvector");
    sc->add_option("--ordering", sc_ordering, "by_value | by_abs");
    sc->add_option("--seed", sc_seed, "seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (run->parsed()) return cmd_run(run_config, run_opts);
        if (gen->parsed())
            return cmd_gen_csbm(gc_phi, gc_n, gc_f, gc_d, gc_eps, gc_seed, gc_out);
        if (rw->parsed()) return cmd_rewire(rw_dataset, rw_config, rw_out, rw_seed);
        if (sc->parsed())
            return cmd_eval_sc(sc_dataset, sc_k, sc_features, sc_knn, !sc_no_skip,
                               sc_ordering, sc_seed);
    } catch (const jdr::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}
