// ice: interpretable clustering-ensemble trees from the command line.
//
// Subcommands mirror the library pipeline: gen-bases -> build -> eval, plus
// an experiment driver that repeats the whole pipeline under derived seeds
// and a render helper for tree documents. Every command is deterministic
// given its flags; exit code 0 means success (early-stop warnings included),
// 2 a bad input, 3 a broken internal invariant.

#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ice/ice.hpp"

namespace {

struct DataFlags {
    std::string path;
    std::string label_column;
    std::string delimiter = ",";
    std::string missing; // comma-separated replacement for the default markers
};

void add_data_flags(CLI::App* cmd, DataFlags& flags, bool label_required) {
    cmd->add_option("--data", flags.path, "dataset file (delimited text with header)")
        ->required();
    auto* label = cmd->add_option("--label-col", flags.label_column,
                                  "name of the ground-truth label column");
    if (label_required) label->required();
    cmd->add_option("--delimiter", flags.delimiter,
                    "cell delimiter (single character, or \\t)");
    cmd->add_option("--missing-markers", flags.missing,
                    "comma-separated cell values treated as missing "
                    "(default: empty,?,NA; the empty cell is always missing)");
}

ice::DataFileSpec to_spec(const DataFlags& flags) {
    ice::DataFileSpec spec;
    spec.path = flags.path;
    if (!flags.label_column.empty()) spec.label_column = flags.label_column;
    if (flags.delimiter == "\\t") spec.delimiter = '\t';
    else if (flags.delimiter.size() == 1) spec.delimiter = flags.delimiter[0];
    else throw ice::input_error("--delimiter must be a single character or \\t");
    if (!flags.missing.empty()) {
        spec.missing_markers = {""};
        std::istringstream in(flags.missing);
        std::string marker;
        while (std::getline(in, marker, ',')) spec.missing_markers.insert(marker);
    }
    return spec;
}

std::string format_metric(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

std::string format_depth(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

// k defaults to the ground-truth class count when the data carries labels.
std::size_t resolve_k(std::size_t k_flag, const ice::Dataset& ds, const char* what) {
    if (k_flag > 0) return k_flag;
    if (ds.has_labels()) return ds.class_count();
    throw ice::input_error(std::string(what) +
                           ": no --label-col to infer k from; pass -k explicitly");
}

ice::EnsembleSpec resolve_ensemble_spec(std::size_t c, std::size_t k_min, std::size_t k_max,
                                        std::uint64_t seed, std::size_t k) {
    ice::EnsembleSpec spec;
    spec.c = c;
    spec.seed = seed;
    spec.k_min = k_min > 0 ? k_min : k;
    spec.k_max = k_max > 0 ? k_max : 3 * k;
    return spec;
}

int cmd_gen_bases(const DataFlags& data_flags, std::size_t c, std::size_t k_min,
                  std::size_t k_max, std::uint64_t seed, const std::string& out) {
    const auto loaded = ice::load_dataset(to_spec(data_flags));
    std::size_t k = 0;
    if (k_min == 0 || k_max == 0) k = resolve_k(0, loaded.dataset, "gen-bases");
    const auto spec = resolve_ensemble_spec(c, k_min, k_max, seed, k);
    const auto ensemble = ice::generate_ensemble(loaded.dataset, spec);

    std::ostringstream meta;
    meta << "seed=" << spec.seed << " kmin=" << spec.k_min << " kmax=" << spec.k_max;
    ice::save_ensemble(ensemble, out, meta.str());

    nlohmann::ordered_json sidecar;
    sidecar["data"] = data_flags.path;
    sidecar["n"] = ensemble.n();
    sidecar["dropped_rows"] = loaded.dropped_rows;
    sidecar["c"] = spec.c;
    sidecar["k_min"] = spec.k_min;
    sidecar["k_max"] = spec.k_max;
    sidecar["seed"] = spec.seed;
    sidecar["runs"] = nlohmann::ordered_json::array();
    const auto plan = ice::plan_ensemble(spec);
    for (std::size_t t = 0; t < plan.size(); ++t)
        sidecar["runs"].push_back({{"t", t},
                                   {"k", plan[t].k},
                                   {"seed", plan[t].seed},
                                   {"realized_labels", ensemble.alphabet_size(t)}});
    std::ofstream(out + ".meta.json") << sidecar.dump(2) << "\n";

    std::cout << "wrote " << out << " (" << ensemble.c() << " base partitions, n="
              << ensemble.n() << ")\n";
    return 0;
}

int cmd_build(const DataFlags& data_flags, const std::string& bases, std::size_t k_flag,
              std::size_t min_side, bool standardize_tree, unsigned threads,
              const std::string& out, const std::string& dot_out,
              const std::string& text_out) {
    const auto loaded = ice::load_dataset(to_spec(data_flags));
    const ice::Dataset tree_data =
        standardize_tree ? ice::standardize(loaded.dataset) : loaded.dataset;
    const auto bases_file = ice::load_ensemble(bases, tree_data.n());

    ice::BuildConfig config;
    config.k_target = resolve_k(k_flag, tree_data, "build");
    config.min_side = min_side;
    config.threads = threads;
    const auto tree = ice::build_tree(tree_data, bases_file.ensemble, config);

    std::string provenance = "bases=" + bases;
    if (!bases_file.metadata.empty()) provenance += " " + bases_file.metadata;
    const auto doc = ice::make_document(tree, tree_data, config.min_side, provenance);
    if (!out.empty()) ice::detail::write_file(out, ice::document_to_json(doc));
    if (!dot_out.empty()) ice::detail::write_file(dot_out, ice::to_dot(doc));
    if (!text_out.empty()) ice::detail::write_file(text_out, ice::to_text(doc));

    const auto [max_depth, avg_depth] = ice::depth_metrics(tree);
    std::cout << "leaves: " << tree.leaf_count() << "\n"
              << "max_depth: " << max_depth << "\n"
              << "avg_depth: " << format_depth(avg_depth) << "\n";
    if (tree.early_stop())
        std::cout << "warning: early stop, no admissible split left before reaching k="
                  << config.k_target << "\n";
    return 0;
}

int cmd_eval(const DataFlags& data_flags, const std::string& tree_path,
             bool standardize_tree) {
    const auto loaded = ice::load_dataset(to_spec(data_flags));
    ice::detail::require_input(loaded.dataset.has_labels(),
                               "eval: --label-col is required to score a tree");
    const ice::Dataset tree_data =
        standardize_tree ? ice::standardize(loaded.dataset) : loaded.dataset;
    const auto doc = ice::document_from_json(ice::detail::read_file(tree_path));
    const auto tree = ice::instantiate(doc, tree_data);
    const auto report = ice::evaluate(tree, loaded.dataset.labels());

    std::cout << "metric      value\n"
              << "purity      " << format_metric(report.purity) << "\n"
              << "f1          " << format_metric(report.f1) << "\n"
              << "nmi         " << format_metric(report.nmi) << "\n"
              << "max_depth   " << report.max_depth << "\n"
              << "avg_depth   " << format_depth(report.avg_depth) << "\n"
              << "leaves      " << report.leaves << "\n"
              << "n           " << report.n << "\n";
    nlohmann::ordered_json j;
    j["purity"] = report.purity;
    j["f1"] = report.f1;
    j["nmi"] = report.nmi;
    j["max_depth"] = report.max_depth;
    j["avg_depth"] = report.avg_depth;
    j["leaves"] = report.leaves;
    j["n"] = report.n;
    std::cout << j.dump() << "\n";
    return 0;
}

struct RunRow {
    std::size_t run = 0;
    std::uint64_t seed = 0;
    ice::MetricsReport report;
    bool early_stop = false;
};

std::string run_row_line(const RunRow& row) {
    std::ostringstream out;
    out << row.run << ',' << row.seed << ',' << row.report.leaves << ','
        << format_metric(row.report.purity) << ',' << format_metric(row.report.f1) << ','
        << format_metric(row.report.nmi) << ',' << row.report.max_depth << ','
        << format_depth(row.report.avg_depth) << (row.early_stop ? ",early_stop" : ",");
    return out.str();
}

int cmd_experiment(const DataFlags& data_flags, std::size_t c, std::size_t k_min,
                   std::size_t k_max, std::size_t k_flag, std::size_t min_side,
                   std::size_t repeats, std::uint64_t seed, bool standardize_tree,
                   unsigned threads, const std::string& out_dir) {
    ice::detail::require_input(repeats >= 1, "experiment: --repeats must be >= 1");
    const auto loaded = ice::load_dataset(to_spec(data_flags));
    ice::detail::require_input(loaded.dataset.has_labels(),
                               "experiment: --label-col is required");
    const ice::Dataset tree_data =
        standardize_tree ? ice::standardize(loaded.dataset) : loaded.dataset;
    const std::size_t k = resolve_k(k_flag, loaded.dataset, "experiment");
    const auto base_spec = resolve_ensemble_spec(c, k_min, k_max, seed, k);

    std::ofstream runs_csv;
    if (!out_dir.empty()) {
        std::error_code ec;
        std::filesystem::create_directories(out_dir, ec);
        runs_csv.open(out_dir + "/runs.csv");
        ice::detail::require_input(runs_csv.good(),
                                   "experiment: cannot write to " + out_dir);
    }
    const char* header = "run,seed,leaves,purity,f1,nmi,max_depth,avg_depth,note";
    std::cout << header << "\n";
    if (runs_csv.is_open()) runs_csv << header << "\n" << std::flush;

    std::vector<std::optional<RunRow>> rows(repeats);
    const auto run_one = [&](std::size_t r) {
        auto spec = base_spec;
        spec.seed = ice::derive_seed(seed, r);
        const auto ensemble = ice::generate_ensemble(loaded.dataset, spec);
        // Parallelism lives at the repeat level; each run builds single-threaded.
        ice::BuildConfig config{k, min_side, 1};
        const auto tree = ice::build_tree(tree_data, ensemble, config);
        RunRow row;
        row.run = r;
        row.seed = spec.seed;
        row.report = ice::evaluate(tree, loaded.dataset.labels());
        row.early_stop = tree.early_stop();
        rows[r] = row;
    };

    const auto flush_completed_prefix = [&] {
        for (const auto& row : rows) {
            if (!row) break;
            const auto line = run_row_line(*row);
            std::cout << line << "\n" << std::flush;
            if (runs_csv.is_open()) runs_csv << line << "\n" << std::flush;
        }
    };

    try {
        if (threads > 1) {
            ice::parallel_for(repeats, threads, run_one);
        } else {
            for (std::size_t r = 0; r < repeats; ++r) {
                run_one(r);
                const auto line = run_row_line(*rows[r]);
                std::cout << line << "\n" << std::flush;
                if (runs_csv.is_open()) runs_csv << line << "\n" << std::flush;
            }
        }
    } catch (...) {
        if (threads > 1) flush_completed_prefix();
        throw;
    }
    if (threads > 1) flush_completed_prefix();

    const auto summarize = [&](auto getter) {
        double mean = 0.0;
        for (const auto& row : rows) mean += getter(row->report);
        mean /= static_cast<double>(repeats);
        double var = 0.0;
        for (const auto& row : rows) {
            const double d = getter(row->report) - mean;
            var += d * d;
        }
        var /= static_cast<double>(repeats);
        return std::pair<double, double>{mean, std::sqrt(var)};
    };
    const auto [purity_m, purity_s] = summarize([](const ice::MetricsReport& r) { return r.purity; });
    const auto [f1_m, f1_s] = summarize([](const ice::MetricsReport& r) { return r.f1; });
    const auto [nmi_m, nmi_s] = summarize([](const ice::MetricsReport& r) { return r.nmi; });
    const auto [maxd_m, maxd_s] = summarize(
        [](const ice::MetricsReport& r) { return static_cast<double>(r.max_depth); });
    const auto [avgd_m, avgd_s] = summarize([](const ice::MetricsReport& r) { return r.avg_depth; });

    std::ostringstream summary;
    summary << "summary over " << repeats << " runs (mean ± std)\n"
            << "purity:    " << format_metric(purity_m) << " ± " << format_metric(purity_s) << "\n"
            << "f1:        " << format_metric(f1_m) << " ± " << format_metric(f1_s) << "\n"
            << "nmi:       " << format_metric(nmi_m) << " ± " << format_metric(nmi_s) << "\n"
            << "max_depth: " << format_depth(maxd_m) << " ± " << format_depth(maxd_s) << "\n"
            << "avg_depth: " << format_depth(avgd_m) << " ± " << format_depth(avgd_s) << "\n";
    std::cout << summary.str();
    if (!out_dir.empty()) {
        std::ofstream(out_dir + "/summary.txt") << summary.str();
    }
    return 0;
}

int cmd_render(const std::string& tree_path, const std::string& format,
               const std::string& out) {
    const auto doc = ice::document_from_json(ice::detail::read_file(tree_path));
    ice::TreeFormat tree_format;
    if (format == "dot") tree_format = ice::TreeFormat::dot;
    else if (format == "text") tree_format = ice::TreeFormat::text;
    else if (format == "json") tree_format = ice::TreeFormat::structured;
    else throw ice::input_error("render: --format must be dot, text, or json");
    const auto rendered = ice::export_tree(doc, tree_format);
    if (out.empty()) std::cout << rendered;
    else ice::detail::write_file(out, rendered);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"ICE: interpretable clustering ensemble trees"};
    app.require_subcommand(1);

    DataFlags data_flags;
    std::size_t c = 30, k_min = 0, k_max = 0, k_flag = 0, min_side = 5, repeats = 10;
    std::uint64_t seed = 0;
    unsigned threads = 1;
    bool standardize_tree = false;
    std::string out, bases, tree_path, dot_out, text_out, format = "text", out_dir;

    auto* gen = app.add_subcommand("gen-bases", "generate seeded k-means base partitions");
    add_data_flags(gen, data_flags, false);
    gen->add_option("-c,--ensemble-size", c, "number of base partitions (default 30)");
    gen->add_option("--k-min", k_min, "smallest base cluster count (default: #classes)");
    gen->add_option("--k-max", k_max, "largest base cluster count (default: 3 * #classes)");
    gen->add_option("--seed", seed, "master seed")->required();
    gen->add_option("--out", out, "output ensemble file")->required();

    auto* build = app.add_subcommand("build", "build a clustering tree from base partitions");
    add_data_flags(build, data_flags, false);
    build->add_option("--bases", bases, "ensemble file from gen-bases")->required();
    build->add_option("-k,--k-target", k_flag, "leaf count (default: #classes from --label-col)");
    build->add_option("--min-side", min_side, "minimum samples per split side (default 5)");
    build->add_flag("--standardize", standardize_tree,
                    "build the tree on z-scored features instead of the originals");
    build->add_option("--threads", threads, "worker threads (default 1)");
    build->add_option("--out", out, "output tree document (JSON)");
    build->add_option("--dot", dot_out, "also write a graphviz rendering");
    build->add_option("--text", text_out, "also write a text outline");

    auto* eval = app.add_subcommand("eval", "score a tree document against ground truth");
    add_data_flags(eval, data_flags, true);
    eval->add_option("--tree", tree_path, "tree document to evaluate")->required();
    eval->add_flag("--standardize", standardize_tree,
                   "the tree was built with --standardize");

    auto* experiment = app.add_subcommand(
        "experiment", "repeat gen-bases + build + eval under derived seeds");
    add_data_flags(experiment, data_flags, true);
    experiment->add_option("-c,--ensemble-size", c, "number of base partitions (default 30)");
    experiment->add_option("--k-min", k_min, "smallest base cluster count");
    experiment->add_option("--k-max", k_max, "largest base cluster count");
    experiment->add_option("-k,--k-target", k_flag, "leaf count (default: #classes)");
    experiment->add_option("--min-side", min_side, "minimum samples per split side");
    experiment->add_option("--repeats", repeats, "independent runs (default 10)");
    experiment->add_option("--seed", seed, "master seed")->required();
    experiment->add_flag("--standardize", standardize_tree,
                         "build trees on z-scored features");
    experiment->add_option("--threads", threads, "worker threads (default 1)");
    experiment->add_option("--out-dir", out_dir, "directory for runs.csv and summary.txt");

    auto* render = app.add_subcommand("render", "re-render a tree document");
    render->add_option("--tree", tree_path, "tree document (JSON)")->required();
    render->add_option("--format", format, "dot, text, or json");
    render->add_option("--out", out, "output file (default: stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed())
            return cmd_gen_bases(data_flags, c, k_min, k_max, seed, out);
        if (build->parsed())
            return cmd_build(data_flags, bases, k_flag, min_side, standardize_tree,
                             threads, out, dot_out, text_out);
        if (eval->parsed())
            return cmd_eval(data_flags, tree_path, standardize_tree);
        if (experiment->parsed())
            return cmd_experiment(data_flags, c, k_min, k_max, k_flag, min_side, repeats,
                                  seed, standardize_tree, threads, out_dir);
        if (render->parsed())
            return cmd_render(tree_path, format, out);
    } catch (const ice::input_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ice::contract_error& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
