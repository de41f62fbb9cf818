#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include <CLI11.hpp>

#include "xvlab/experiment.hpp"
#include "xvlab/io.hpp"
#include "xvlab/world.hpp"

namespace {

using namespace xvlab;

/**
 * Flag storage shared by all subcommands. CLI flags layer on top of the
 * config file, so each override records whether it was actually given.
 */
struct CommonOpts {
    std::string config_path;
    std::uint64_t seed = 0;
    std::string out_dir;
    std::string policy;
    std::string knowledge;
    std::size_t trials = 0;
    CLI::Option* seed_opt = nullptr;
    CLI::Option* out_opt = nullptr;
    CLI::Option* policy_opt = nullptr;
    CLI::Option* knowledge_opt = nullptr;
    CLI::Option* trials_opt = nullptr;
};

void add_common(CLI::App* sub, CommonOpts& opts) {
    sub->add_option("--config", opts.config_path,
                    "Config file (key = value lines, '#' comments)");
    opts.seed_opt = sub->add_option("--seed", opts.seed, "Root seed override");
    opts.out_opt = sub->add_option("--out", opts.out_dir, "Output directory override");
}

void add_overrides(CLI::App* sub, CommonOpts& opts) {
    opts.policy_opt =
        sub->add_option("--policy", opts.policy,
                        "Policy override STRATEGY[:WORLD[:SUBSET]], e.g. "
                        "ranked_farthest:200:100; empty positions keep config values");
    opts.knowledge_opt = sub->add_option("--knowledge", opts.knowledge,
                                         "Attacker knowledge override: same|different");
    opts.trials_opt =
        sub->add_option("--trials", opts.trials, "Evaluation trial count override");
}

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find(sep, start);
        if (end == std::string::npos) end = text.size();
        parts.push_back(text.substr(start, end - start));
        start = end + 1;
        if (end == text.size()) break;
    }
    return parts;
}

void apply_policy_spec(ExperimentConfig& cfg, const std::string& spec) {
    const std::vector<std::string> parts = split(spec, ':');
    if (parts.empty() || parts[0].empty()) {
        throw std::runtime_error("--policy: missing strategy name");
    }
    if (parts.size() > 3) {
        throw std::runtime_error("--policy: expected STRATEGY[:WORLD[:SUBSET]]");
    }
    cfg.policy.strategy = strategy_from_string(parts[0]);
    if (parts.size() > 1 && !parts[1].empty()) {
        cfg.policy.world_size = parse_size(parts[1], "--policy world size");
    }
    if (parts.size() > 2 && !parts[2].empty()) {
        cfg.policy.subset_size = parse_size(parts[2], "--policy subset size");
    }
}

/// Defaults, then the config file, then explicit flags.
ExperimentConfig resolve_config(const CommonOpts& opts) {
    ExperimentConfig cfg;
    if (!opts.config_path.empty()) {
        load_config_file(cfg, opts.config_path);
    }
    if (opts.seed_opt != nullptr && opts.seed_opt->count() > 0) cfg.sim.seed = opts.seed;
    if (opts.out_opt != nullptr && opts.out_opt->count() > 0) cfg.output_dir = opts.out_dir;
    if (opts.policy_opt != nullptr && opts.policy_opt->count() > 0) {
        apply_policy_spec(cfg, opts.policy);
    }
    if (opts.knowledge_opt != nullptr && opts.knowledge_opt->count() > 0) {
        cfg.knowledge = knowledge_from_string(opts.knowledge);
    }
    if (opts.trials_opt != nullptr && opts.trials_opt->count() > 0) cfg.trials = opts.trials;
    return cfg;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    }
    out << text;
    if (!out) {
        throw std::runtime_error("write failed for '" + path.string() + "'");
    }
}

int cmd_gen_world(const CommonOpts& opts) {
    const ExperimentConfig cfg = resolve_config(opts);
    cfg.validate();
    const SpeakerWorld world = generate_world(cfg.sim);

    const std::filesystem::path dir = cfg.output_dir;
    std::filesystem::create_directories(dir);
    write_pool_file((dir / "pool.txt").string(), world.pool);

    XVectorPool centroids;
    for (const SimSpeaker& s : world.candidates) {
        centroids.add({s.id, s.gender, "centroid", s.centroid});
    }
    write_pool_file((dir / "candidates.txt").string(), centroids);
    write_text(dir / "config.echo", serialize_config(cfg));

    std::cout << "pool_entries=" << world.pool.size() << '\n'
              << "candidates=" << world.candidates.size() << '\n'
              << "dim=" << cfg.sim.dim << '\n'
              << "out=" << dir.string() << '\n';
    return 0;
}

int cmd_run(const CommonOpts& opts, bool force_open_world) {
    ExperimentConfig cfg = resolve_config(opts);
    if (force_open_world) cfg.open_world = true;

    XVectorPool ingested;
    const XVectorPool* pool_override = nullptr;
    if (!cfg.pool_file.empty()) {
        ingested = ingest_pool_file(cfg.pool_file);
        pool_override = &ingested;
    }

    const ExperimentReport report = run_experiment(cfg, pool_override);
    write_report_files(report, cfg.output_dir);

    std::cout << "accuracy=" << format_g17(report.accuracy) << '\n';
    if (cfg.open_world) {
        std::cout << "auc=" << format_g17(report.auc_value) << '\n'
                  << "eer=" << format_g17(report.eer_value) << '\n'
                  << "threshold=" << format_g17(report.threshold) << '\n';
    }
    std::cout << "out=" << cfg.output_dir << '\n';
    std::cerr << "elapsed_seconds=" << report.duration_seconds << '\n';
    return 0;
}

int cmd_sweep(const CommonOpts& opts) {
    const ExperimentConfig cfg = resolve_config(opts);
    const auto table = sweep_pool_size(cfg, cfg.sweep_sizes);

    const std::filesystem::path dir = cfg.output_dir;
    std::filesystem::create_directories(dir);
    {
        std::ostringstream s;
        write_sweep_csv(s, table);
        write_text(dir / "sweep.csv", s.str());
    }
    write_text(dir / "config.echo", serialize_config(cfg));

    for (const auto& [size, acc] : table) {
        std::cout << "size=" << size << " accuracy=" << format_g17(acc) << '\n';
    }
    std::cout << "out=" << dir.string() << '\n';
    return 0;
}

int cmd_ingest_check(const CommonOpts& opts, const std::string& file_arg) {
    std::string path = file_arg;
    if (path.empty()) {
        path = resolve_config(opts).pool_file;
    }
    if (path.empty()) {
        throw std::runtime_error(
            "ingest-check: no pool file (pass a path or set pool_file in the config)");
    }

    const XVectorPool pool = ingest_pool_file(path);
    std::unordered_set<std::string> speakers;
    std::size_t male = 0;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        speakers.insert(pool.entry(i).speaker_id);
        if (pool.entry(i).gender == Gender::M) ++male;
    }

    std::ostringstream txt;
    txt << "file=" << path << '\n'
        << "entries=" << pool.size() << '\n'
        << "speakers=" << speakers.size() << '\n'
        << "dim=" << pool.dim() << '\n'
        << "male_entries=" << male << '\n'
        << "female_entries=" << (pool.size() - male) << '\n';
    std::cout << txt.str();

    if (opts.out_opt != nullptr && opts.out_opt->count() > 0) {
        const std::filesystem::path dir = opts.out_dir;
        std::filesystem::create_directories(dir);
        write_text(dir / "ingest.txt", txt.str());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Embedding-space laboratory for x-vector speaker anonymization"};
    app.require_subcommand(1);

    CommonOpts gen_opts, run_opts, sweep_opts, roc_opts, ingest_opts;
    std::string ingest_path;

    CLI::App* gen = app.add_subcommand("gen-world", "Generate a synthetic world and export it");
    add_common(gen, gen_opts);

    CLI::App* run = app.add_subcommand("run", "Run a de-anonymization experiment");
    add_common(run, run_opts);
    add_overrides(run, run_opts);

    CLI::App* sweep =
        app.add_subcommand("sweep", "Sweep candidate-set sizes (closed world)");
    add_common(sweep, sweep_opts);
    add_overrides(sweep, sweep_opts);

    CLI::App* roc = app.add_subcommand("roc", "Run an open-world experiment (forces open_world)");
    add_common(roc, roc_opts);
    add_overrides(roc, roc_opts);

    CLI::App* ingest =
        app.add_subcommand("ingest-check", "Validate a pool file and report its counts");
    ingest->add_option("file", ingest_path, "Pool file (default: pool_file from --config)");
    add_common(ingest, ingest_opts);

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen_world(gen_opts);
        if (run->parsed()) return cmd_run(run_opts, false);
        if (sweep->parsed()) return cmd_sweep(sweep_opts);
        if (roc->parsed()) return cmd_run(roc_opts, true);
        if (ingest->parsed()) return cmd_ingest_check(ingest_opts, ingest_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
