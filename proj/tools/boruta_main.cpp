// Command-line front end: synthetic dataset generation, Boruta selection
// runs, cross-validated evaluation, plot-data export, and scaling benchmarks.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "boruta/boruta.hpp"
#include "boruta/data.hpp"
#include "boruta/eval.hpp"
#include "boruta/forest.hpp"
#include "boruta/importance.hpp"
#include "boruta/parallel.hpp"
#include "boruta/report_io.hpp"
#include "boruta/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string iso_timestamp() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string fnv1a_hex(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw boruta::DataError("cannot open file for hashing: " + path);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[65536];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
    }
    char out[17];
    std::snprintf(out, sizeof(out), "%016llx",
                  static_cast<unsigned long long>(h));
    return out;
}

// temp + rename so concurrent runs never observe partial files
void atomic_write(const fs::path& path, const std::string& content) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw boruta::DataError("cannot write: " + path.string());
        out << content;
    }
    fs::rename(tmp, path);
}

struct Manifest {
    std::string command;
    std::string resolved_config;
    std::vector<std::uint64_t> seeds;
    std::map<std::string, std::string> input_digests;
    std::string started_at;

    json to_json() const {
        json j;
        j["command"] = command;
        j["resolved_config"] = resolved_config;
        j["seeds"] = seeds;
        j["input_digests"] = input_digests;
        j["tool_version"] = kVersion;
        j["started_at"] = started_at;
        j["finished_at"] = iso_timestamp();
        return j;
    }
};

// CLI11 only reads config files attached to the top-level app, so flat
// per-subcommand config files are expanded into option tokens before parsing.
// Command-line flags always win: keys already present in argv are skipped.
std::vector<std::string> expand_config(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    std::string config_path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config") {
            if (i + 1 >= args.size())
                throw CLI::ValidationError("--config", "requires a file path");
            config_path = args[i + 1];
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i),
                       args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
            break;
        }
        if (args[i].rfind("--config=", 0) == 0) {
            config_path = args[i].substr(9);
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
            break;
        }
    }
    if (config_path.empty()) return args;

    std::ifstream in(config_path);
    if (!in)
        throw CLI::ValidationError("--config", "cannot open " + config_path);
    auto trim = [](std::string s) {
        auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return std::string();
        auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    };
    std::vector<std::string> injected;
    std::string line;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw CLI::ValidationError("--config",
                                       "expected key=value, got: " + line);
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') &&
            value.back() == value.front())
            value = value.substr(1, value.size() - 2);
        if (key.empty())
            throw CLI::ValidationError("--config",
                                       "empty key in line: " + line);
        bool given = false;
        for (const auto& a : args)
            if (a == "--" + key || a.rfind("--" + key + "=", 0) == 0)
                given = true;
        if (!given) injected.push_back("--" + key + "=" + value);
    }
    if (!args.empty())
        args.insert(args.begin() + 1, injected.begin(), injected.end());
    return args;
}

boruta::ImportanceMethod parse_method(const std::string& s) {
    if (s == "treeimp") return boruta::ImportanceMethod::TreeImp;
    if (s == "permut") return boruta::ImportanceMethod::Permut;
    throw CLI::ValidationError("--method", "expected one of: treeimp, permut");
}

struct ForestFlags {
    int trees = 100;
    int max_depth = 0;
    int min_split = 2;
    std::string max_features = "default";  // default | sqrt | all | <fraction>
    bool no_bootstrap = false;

    void attach(CLI::App* cmd) {
        cmd->add_option("--trees", trees, "Number of trees in the forest");
        cmd->add_option("--max-depth", max_depth,
                        "Maximum tree depth (0 = unlimited)");
        cmd->add_option("--min-split", min_split,
                        "Minimum samples required to split a node");
        cmd->add_option("--max-features", max_features,
                        "Per-split candidate features: sqrt, all, or a "
                        "fraction in (0,1]");
        cmd->add_flag("--no-bootstrap", no_bootstrap,
                      "Train each tree on the full sample");
    }

    boruta::ForestParams resolve(boruta::Task task) const {
        boruta::ForestParams p = boruta::default_forest_params(task);
        p.num_trees = trees;
        p.max_depth = max_depth;
        p.min_samples_split = min_split;
        p.bootstrap = !no_bootstrap;
        if (max_features == "sqrt")
            p.max_features = boruta::MaxFeatures::sqrt();
        else if (max_features == "all")
            p.max_features = boruta::MaxFeatures::all();
        else if (max_features != "default")
            p.max_features = boruta::MaxFeatures::frac(std::stod(max_features));
        return p;
    }
};

boruta::Task parse_task(const std::string& s, int num_classes) {
    if (s == "regression") return boruta::Task::regression();
    if (s == "classification") return boruta::Task::classification(num_classes);
    throw CLI::ValidationError("--task",
                               "expected one of: regression, classification");
}

int run(int argc, char** argv) {
    CLI::App app{"Boruta feature selection engine"};
    app.require_subcommand(1);
    app.option_defaults()->always_capture_default(true);

    // ---- synth ----
    auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
    synth->add_option("--config", "Flat key=value config file (flags override it)");
    std::string sy_variant = "direct", sy_out;
    std::size_t sy_n = 10000;
    std::uint64_t sy_seed = 0;
    boruta::SyntheticSpec sy_spec;
    synth->add_option("--variant", sy_variant,
                      "direct, biased, or multicollinear");
    synth->add_option("--n", sy_n, "Number of samples")->required();
    synth->add_option("--seed", sy_seed, "Generator seed");
    synth->add_option("--out", sy_out, "Output CSV path")->required();
    synth->add_option("--sigma1", sy_spec.noise_sigma1, "Target noise std");
    synth->add_option("--sigma2", sy_spec.noise_sigma2,
                      "Correlated-feature noise std");
    synth->add_option("--bias-fraction", sy_spec.bias_fraction,
                      "Fraction of rows overwritten in the biased variant");
    synth->add_option("--bias-value", sy_spec.bias_value,
                      "Replacement value in the biased variant");

    // ---- select ----
    auto* select = app.add_subcommand("select", "Run Boruta feature selection");
    select->add_option("--config", "Flat key=value config file (flags override it)");
    std::string se_data, se_target = "target", se_method, se_out_dir = ".";
    std::string se_task = "regression", se_shadow = "percolumn";
    std::string se_seed_list;
    int se_classes = 2, se_seeds = 1, se_max_iter = 100, se_jobs = 1;
    unsigned se_threads = 0;
    std::uint64_t se_seed = 0;
    double se_alpha = 0.05;
    bool se_no_bonferroni = false;
    ForestFlags se_forest;
    select->add_option("--data", se_data, "Dataset CSV")->required();
    select->add_option("--target", se_target, "Target column name or index");
    select->add_option("--method", se_method, "treeimp or permut")->required();
    select->add_option("--task", se_task, "regression or classification");
    select->add_option("--classes", se_classes,
                       "Number of classes (classification)");
    select->add_option("--seeds", se_seeds, "Number of seeds to run");
    select->add_option("--seed-list", se_seed_list,
                       "Comma-separated explicit seeds (overrides --seeds)");
    select->add_option("--seed", se_seed, "Base seed");
    select->add_option("--max-iter", se_max_iter, "Maximum Boruta iterations");
    select->add_option("--alpha", se_alpha, "Significance level");
    select->add_flag("--no-bonferroni", se_no_bonferroni,
                     "Disable multiple-test correction");
    select->add_option("--shadow-mode", se_shadow, "percolumn or jointrows");
    select->add_option("--out-dir", se_out_dir, "Output directory");
    select->add_option("--jobs", se_jobs, "Concurrent seed runs");
    select->add_option("--threads", se_threads,
                       "Worker threads per run (0 = hardware)");
    se_forest.attach(select);

    // ---- eval ----
    auto* eval = app.add_subcommand(
        "eval", "Cross-validated evaluation of a feature subset");
    eval->add_option("--config", "Flat key=value config file (flags override it)");
    std::string ev_data, ev_target = "target", ev_features = "all", ev_out;
    std::string ev_task = "regression";
    int ev_classes = 2;
    std::size_t ev_k = 5;
    std::uint64_t ev_seed = 0;
    ForestFlags ev_forest;
    unsigned ev_threads = 0;
    eval->add_option("--data", ev_data, "Dataset CSV")->required();
    eval->add_option("--target", ev_target, "Target column name or index");
    eval->add_option("--features", ev_features,
                     "Feature list file (one name per line) or 'all'");
    eval->add_option("--task", ev_task, "regression or classification");
    eval->add_option("--classes", ev_classes,
                     "Number of classes (classification)");
    eval->add_option("--k", ev_k, "Number of folds");
    eval->add_option("--seed", ev_seed, "Fold seed");
    eval->add_option("--out", ev_out, "Metrics JSON path")->required();
    eval->add_option("--threads", ev_threads, "Worker threads");
    ev_forest.attach(eval);

    // ---- report ----
    auto* report = app.add_subcommand(
        "report", "Box-plot statistics from importance histories");
    report->add_option("--config", "Flat key=value config file (flags override it)");
    std::vector<std::string> rp_history;
    std::string rp_states, rp_out;
    report->add_option("--history", rp_history, "History CSV files")
        ->required()
        ->expected(-1);
    report->add_option("--states", rp_states,
                       "Report or aggregate JSON supplying feature states");
    report->add_option("--out", rp_out, "Box-plot CSV path")->required();

    // ---- bench ----
    auto* bench = app.add_subcommand("bench", "Timing benchmark over a size grid");
    bench->add_option("--config", "Flat key=value config file (flags override it)");
    std::string be_sizes, be_method, be_out;
    unsigned be_threads = 0;
    std::uint64_t be_seed = 0;
    ForestFlags be_forest;
    bench->add_option("--sizes", be_sizes,
                      "Size grid, e.g. 1000x50,1000x100")
        ->required();
    bench->add_option("--method", be_method, "treeimp or permut")->required();
    bench->add_option("--out", be_out, "Benchmark CSV path")->required();
    bench->add_option("--seed", be_seed, "Data seed");
    bench->add_option("--threads", be_threads, "Worker threads");
    be_forest.attach(bench);

    try {
        std::vector<std::string> args = expand_config(argc, argv);
        std::reverse(args.begin(), args.end());
        app.parse(std::move(args));
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    CLI::App* active = app.get_subcommands().front();
    Manifest manifest;
    manifest.started_at = iso_timestamp();
    manifest.resolved_config = active->config_to_str(true, false);

    try {
        if (synth->parsed()) {
            manifest.command = "synth";
            if (sy_n == 0)
                throw CLI::ValidationError("--n", "must be positive");
            sy_spec.n_samples = sy_n;
            sy_spec.seed = sy_seed;
            if (sy_variant == "direct")
                sy_spec.variant = boruta::SyntheticVariant::Direct;
            else if (sy_variant == "biased")
                sy_spec.variant = boruta::SyntheticVariant::Biased;
            else if (sy_variant == "multicollinear")
                sy_spec.variant = boruta::SyntheticVariant::Multicollinear;
            else
                throw CLI::ValidationError(
                    "--variant",
                    "expected one of: direct, biased, multicollinear");
            manifest.seeds = {sy_seed};

            boruta::DataMatrix d = boruta::generate_synthetic(sy_spec);
            std::ostringstream csv;
            boruta::save_csv(d, csv);
            atomic_write(sy_out, csv.str());
            atomic_write(sy_out + ".manifest.json",
                         manifest.to_json().dump(2) + "\n");
            return 0;
        }

        if (select->parsed()) {
            manifest.command = "select";
            boruta::Task task = parse_task(se_task, se_classes);
            boruta::DataMatrix data = boruta::load_csv(se_data, se_target, task);
            manifest.input_digests[se_data] = fnv1a_hex(se_data);

            std::vector<std::uint64_t> seeds;
            if (!se_seed_list.empty()) {
                std::stringstream ss(se_seed_list);
                std::string tok;
                while (std::getline(ss, tok, ','))
                    seeds.push_back(std::stoull(tok));
            } else {
                if (se_seeds < 1)
                    throw CLI::ValidationError("--seeds", "must be >= 1");
                for (int i = 0; i < se_seeds; ++i)
                    seeds.push_back(se_seed + static_cast<std::uint64_t>(i));
            }
            manifest.seeds = seeds;

            boruta::BorutaConfig config;
            config.max_iterations = se_max_iter;
            config.alpha = se_alpha;
            config.bonferroni = !se_no_bonferroni;
            config.method = parse_method(se_method);
            if (se_shadow == "percolumn")
                config.shadow_mode = boruta::ShadowMode::PerColumn;
            else if (se_shadow == "jointrows")
                config.shadow_mode = boruta::ShadowMode::JointRows;
            else
                throw CLI::ValidationError(
                    "--shadow-mode", "expected one of: percolumn, jointrows");
            config.forest = se_forest.resolve(task);

            fs::create_directories(se_out_dir);
            std::vector<boruta::SelectionReport> reports(seeds.size());
            std::vector<fs::path> written;
            unsigned per_run_threads =
                se_jobs > 1 && se_threads == 0 ? 1 : se_threads;
            try {
                boruta::parallel_for(
                    seeds.size(), static_cast<unsigned>(se_jobs),
                    [&](std::size_t i) {
                        boruta::BorutaConfig c = config;
                        c.seed = seeds[i];
                        reports[i] =
                            boruta::run_boruta(data, c, per_run_threads);
                    });
                for (std::size_t i = 0; i < seeds.size(); ++i) {
                    fs::path rp = fs::path(se_out_dir) /
                                  ("report_" + std::to_string(seeds[i]) +
                                   ".json");
                    atomic_write(rp,
                                 boruta::report_to_json(reports[i]).dump(2) +
                                     "\n");
                    written.push_back(rp);
                    fs::path hp = fs::path(se_out_dir) /
                                  ("history_" + std::to_string(seeds[i]) +
                                   ".csv");
                    std::ostringstream hist;
                    boruta::write_history_csv(reports[i], hist);
                    atomic_write(hp, hist.str());
                    written.push_back(hp);
                }
                auto agg = boruta::aggregate_runs(reports);
                fs::path ap = fs::path(se_out_dir) / "aggregate.json";
                atomic_write(ap, boruta::aggregate_to_json(agg).dump(2) + "\n");
                written.push_back(ap);
            } catch (...) {
                for (const auto& path : written) {
                    std::error_code ec;
                    fs::remove(path, ec);
                }
                throw;
            }
            atomic_write(fs::path(se_out_dir) / "manifest.json",
                         manifest.to_json().dump(2) + "\n");
            return 0;
        }

        if (eval->parsed()) {
            manifest.command = "eval";
            if (ev_k < 2)
                throw CLI::ValidationError("--k", "must be >= 2");
            boruta::Task task = parse_task(ev_task, ev_classes);
            boruta::DataMatrix data = boruta::load_csv(ev_data, ev_target, task);
            manifest.input_digests[ev_data] = fnv1a_hex(ev_data);
            manifest.seeds = {ev_seed};

            std::vector<std::size_t> subset;
            if (ev_features == "all") {
                for (std::size_t j = 0; j < data.p(); ++j) subset.push_back(j);
            } else {
                std::ifstream in(ev_features);
                if (!in)
                    throw boruta::DataError("cannot open feature file: " +
                                            ev_features);
                manifest.input_digests[ev_features] = fnv1a_hex(ev_features);
                std::string name;
                while (std::getline(in, name)) {
                    name = boruta::detail::trim(name);
                    if (name.empty()) continue;
                    auto it = std::find(data.feature_names.begin(),
                                        data.feature_names.end(), name);
                    if (it == data.feature_names.end())
                        throw boruta::DataError(
                            "feature not present in dataset: " + name);
                    subset.push_back(static_cast<std::size_t>(
                        it - data.feature_names.begin()));
                }
            }

            auto metrics = boruta::cross_validate(data, subset,
                                                  ev_forest.resolve(task),
                                                  ev_k, ev_seed, ev_threads);
            json out = boruta::metrics_to_json(metrics);
            out["manifest"] = manifest.to_json();
            atomic_write(ev_out, out.dump(2) + "\n");
            return 0;
        }

        if (report->parsed()) {
            manifest.command = "report";
            std::vector<boruta::HistoryRecord> records;
            for (const auto& path : rp_history) {
                std::ifstream in(path);
                if (!in)
                    throw boruta::DataError("cannot open history file: " +
                                            path);
                manifest.input_digests[path] = fnv1a_hex(path);
                auto part = boruta::read_history_csv(in);
                records.insert(records.end(), part.begin(), part.end());
            }

            std::map<std::string, int> states;
            if (!rp_states.empty()) {
                std::ifstream in(rp_states);
                if (!in)
                    throw boruta::DataError("cannot open states file: " +
                                            rp_states);
                json j = json::parse(in);
                for (auto& [name, f] : j.at("features").items())
                    states[name] = f.contains("consensus_state")
                                       ? f["consensus_state"].get<int>()
                                       : f["state"].get<int>();
            }

            auto stats = boruta::boxplot_stats(records, states);
            std::ostringstream csv;
            boruta::write_boxplot_csv(stats, csv);
            atomic_write(rp_out, csv.str());
            atomic_write(rp_out + ".manifest.json",
                         manifest.to_json().dump(2) + "\n");
            return 0;
        }

        if (bench->parsed()) {
            manifest.command = "bench";
            std::vector<std::pair<std::size_t, std::size_t>> sizes;
            std::stringstream ss(be_sizes);
            std::string tok;
            while (std::getline(ss, tok, ',')) {
                auto x = tok.find('x');
                if (x == std::string::npos)
                    throw CLI::ValidationError("--sizes",
                                               "expected entries like 1000x50");
                sizes.emplace_back(std::stoull(tok.substr(0, x)),
                                   std::stoull(tok.substr(x + 1)));
            }
            manifest.seeds = {be_seed};
            auto params = be_forest.resolve(boruta::Task::regression());
            params.seed = be_seed;
            auto records = boruta::benchmark(sizes, params,
                                             parse_method(be_method),
                                             be_threads);
            std::ostringstream csv;
            boruta::write_benchmark_csv(records, csv);
            atomic_write(be_out, csv.str());
            atomic_write(be_out + ".manifest.json",
                         manifest.to_json().dump(2) + "\n");
            return 0;
        }
    } catch (const CLI::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const boruta::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    }
    return 1;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
