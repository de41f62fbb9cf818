#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "xvlab/experiment.hpp"

namespace xvlab {

/// 17 significant digits, enough to round-trip an IEEE double exactly.
inline std::string format_g17(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return std::string(buf);
}

inline double parse_double(std::string_view text, const std::string& what) {
    double value = 0.0;
    const char* last = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), last, value);
    if (ec != std::errc() || ptr != last) {
        throw std::runtime_error(what + ": not a number: '" + std::string(text) + "'");
    }
    return value;
}

inline std::uint64_t parse_u64(std::string_view text, const std::string& what) {
    std::uint64_t value = 0;
    const char* last = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), last, value);
    if (ec != std::errc() || ptr != last) {
        throw std::runtime_error(what + ": not a non-negative integer: '" +
                                 std::string(text) + "'");
    }
    return value;
}

inline std::size_t parse_size(std::string_view text, const std::string& what) {
    return static_cast<std::size_t>(parse_u64(text, what));
}

inline bool parse_bool(std::string_view text, const std::string& what) {
    if (text == "1" || text == "true") return true;
    if (text == "0" || text == "false") return false;
    throw std::runtime_error(what + ": expected 0/1/true/false, got '" +
                             std::string(text) + "'");
}

inline std::string strategy_to_string(SelectionStrategy s) {
    switch (s) {
        case SelectionStrategy::RankedNearest: return "ranked_nearest";
        case SelectionStrategy::RankedFarthest: return "ranked_farthest";
        case SelectionStrategy::RandomAverage: return "random_average";
        case SelectionStrategy::RandomSingle: return "random_single";
    }
    throw std::logic_error("strategy_to_string: unknown strategy");
}

inline SelectionStrategy strategy_from_string(std::string_view text) {
    if (text == "ranked_nearest") return SelectionStrategy::RankedNearest;
    if (text == "ranked_farthest") return SelectionStrategy::RankedFarthest;
    if (text == "random_average") return SelectionStrategy::RandomAverage;
    if (text == "random_single") return SelectionStrategy::RandomSingle;
    throw std::runtime_error("unknown strategy '" + std::string(text) + "'");
}

inline std::string level_to_string(ApplicationLevel level) {
    return level == ApplicationLevel::SpeakerLevel ? "speaker" : "utterance";
}

inline ApplicationLevel level_from_string(std::string_view text) {
    if (text == "speaker") return ApplicationLevel::SpeakerLevel;
    if (text == "utterance") return ApplicationLevel::UtteranceLevel;
    throw std::runtime_error("unknown level '" + std::string(text) + "'");
}

inline std::string gender_mode_to_string(GenderMode mode) {
    return mode == GenderMode::SameGender ? "same" : "opposite";
}

inline GenderMode gender_mode_from_string(std::string_view text) {
    if (text == "same") return GenderMode::SameGender;
    if (text == "opposite") return GenderMode::OppositeGender;
    throw std::runtime_error("unknown gender_mode '" + std::string(text) + "'");
}

inline std::string knowledge_to_string(KnowledgeLevel k) {
    return k == KnowledgeLevel::Same ? "same" : "different";
}

inline KnowledgeLevel knowledge_from_string(std::string_view text) {
    if (text == "same") return KnowledgeLevel::Same;
    if (text == "different") return KnowledgeLevel::Different;
    throw std::runtime_error("unknown knowledge '" + std::string(text) + "'");
}

inline std::string sweep_sizes_to_string(const std::vector<std::size_t>& sizes) {
    std::string out;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        if (i > 0) out += ',';
        out += std::to_string(sizes[i]);
    }
    return out;
}

inline std::vector<std::size_t> sweep_sizes_from_string(std::string_view text,
                                                        const std::string& what) {
    std::vector<std::size_t> sizes;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find(',', start);
        if (end == std::string_view::npos) end = text.size();
        const std::string_view item = text.substr(start, end - start);
        if (item.empty()) {
            throw std::runtime_error(what + ": empty entry in size list");
        }
        sizes.push_back(parse_size(item, what));
        start = end + 1;
        if (end == text.size()) break;
    }
    if (sizes.empty()) {
        throw std::runtime_error(what + ": empty size list");
    }
    return sizes;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

inline void check_csv_safe(const std::string& field, const std::string& what) {
    if (field.find(',') != std::string::npos ||
        field.find('\n') != std::string::npos) {
        throw std::runtime_error(what + ": field contains a separator: '" + field + "'");
    }
}

}  // namespace detail

/**
 * Applies one key=value setting to a config. Throws on unknown keys so a
 * typo in a config file fails loudly instead of silently running defaults.
 */
inline void apply_config_entry(ExperimentConfig& cfg, std::string_view key,
                               std::string_view value) {
    const std::string what = std::string(key);
    if (key == "dim") {
        cfg.sim.dim = parse_size(value, what);
    } else if (key == "pool_speakers") {
        cfg.sim.pool_speakers = parse_size(value, what);
    } else if (key == "candidates") {
        cfg.sim.candidates = parse_size(value, what);
    } else if (key == "utterances_per_speaker") {
        cfg.sim.utterances_per_speaker = parse_size(value, what);
    } else if (key == "sigma_utt") {
        cfg.sim.sigma_utt = parse_double(value, what);
    } else if (key == "sigma_ext") {
        cfg.sim.sigma_ext = parse_double(value, what);
    } else if (key == "lambda_leak") {
        cfg.sim.lambda_leak = parse_double(value, what);
    } else if (key == "seed") {
        cfg.sim.seed = parse_u64(value, what);
    } else if (key == "strategy") {
        cfg.policy.strategy = strategy_from_string(value);
    } else if (key == "world_size") {
        cfg.policy.world_size = parse_size(value, what);
    } else if (key == "subset_size") {
        cfg.policy.subset_size = parse_size(value, what);
    } else if (key == "level") {
        cfg.policy.level = level_from_string(value);
    } else if (key == "gender_mode") {
        cfg.policy.gender_mode = gender_mode_from_string(value);
    } else if (key == "exclude_self") {
        cfg.policy.exclude_self = parse_bool(value, what);
    } else if (key == "knowledge") {
        cfg.knowledge = knowledge_from_string(value);
    } else if (key == "trials") {
        cfg.trials = parse_size(value, what);
    } else if (key == "open_world") {
        cfg.open_world = parse_bool(value, what);
    } else if (key == "presence_probability") {
        cfg.presence_probability = parse_double(value, what);
    } else if (key == "threshold_percentile") {
        cfg.threshold_percentile = parse_double(value, what);
    } else if (key == "calibration_trials") {
        cfg.calibration_trials = parse_size(value, what);
    } else if (key == "replications") {
        cfg.replications = parse_size(value, what);
    } else if (key == "eval_candidates") {
        cfg.eval_candidates = parse_size(value, what);
    } else if (key == "per_trial_world") {
        cfg.per_trial_world = parse_bool(value, what);
    } else if (key == "workers") {
        cfg.workers = parse_size(value, what);
    } else if (key == "pool_file") {
        cfg.pool_file = std::string(value);
    } else if (key == "sweep_sizes") {
        cfg.sweep_sizes = sweep_sizes_from_string(value, what);
    } else if (key == "output_dir") {
        cfg.output_dir = std::string(value);
    } else {
        throw std::runtime_error("unknown config key '" + std::string(key) + "'");
    }
}

/**
 * Parses key=value lines onto an existing config. Blank lines and lines
 * starting with '#' are skipped. Errors carry <source>:<line>.
 */
inline void apply_config_text(ExperimentConfig& cfg, std::istream& in,
                              const std::string& source) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view stripped = detail::trim(line);
        if (stripped.empty() || stripped.front() == '#') continue;
        const std::size_t eq = stripped.find('=');
        const std::string where = source + ":" + std::to_string(line_no);
        if (eq == std::string_view::npos) {
            throw std::runtime_error(where + ": expected key=value");
        }
        const std::string_view key = detail::trim(stripped.substr(0, eq));
        const std::string_view value = detail::trim(stripped.substr(eq + 1));
        if (key.empty()) {
            throw std::runtime_error(where + ": empty key");
        }
        try {
            apply_config_entry(cfg, key, value);
        } catch (const std::exception& e) {
            throw std::runtime_error(where + ": " + e.what());
        }
    }
}

inline void load_config_file(ExperimentConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open config file '" + path + "'");
    }
    apply_config_text(cfg, in, path);
}

/// Canonical key order; output re-parses to an identical config.
inline std::string serialize_config(const ExperimentConfig& cfg) {
    std::ostringstream out;
    out << "dim=" << cfg.sim.dim << '\n';
    out << "pool_speakers=" << cfg.sim.pool_speakers << '\n';
    out << "candidates=" << cfg.sim.candidates << '\n';
    out << "utterances_per_speaker=" << cfg.sim.utterances_per_speaker << '\n';
    out << "sigma_utt=" << format_g17(cfg.sim.sigma_utt) << '\n';
    out << "sigma_ext=" << format_g17(cfg.sim.sigma_ext) << '\n';
    out << "lambda_leak=" << format_g17(cfg.sim.lambda_leak) << '\n';
    out << "seed=" << cfg.sim.seed << '\n';
    out << "strategy=" << strategy_to_string(cfg.policy.strategy) << '\n';
    out << "world_size=" << cfg.policy.world_size << '\n';
    out << "subset_size=" << cfg.policy.subset_size << '\n';
    out << "level=" << level_to_string(cfg.policy.level) << '\n';
    out << "gender_mode=" << gender_mode_to_string(cfg.policy.gender_mode) << '\n';
    out << "exclude_self=" << (cfg.policy.exclude_self ? "true" : "false") << '\n';
    out << "knowledge=" << knowledge_to_string(cfg.knowledge) << '\n';
    out << "trials=" << cfg.trials << '\n';
    out << "open_world=" << (cfg.open_world ? "true" : "false") << '\n';
    out << "presence_probability=" << format_g17(cfg.presence_probability) << '\n';
    out << "threshold_percentile=" << format_g17(cfg.threshold_percentile) << '\n';
    out << "calibration_trials=" << cfg.calibration_trials << '\n';
    out << "replications=" << cfg.replications << '\n';
    out << "eval_candidates=" << cfg.eval_candidates << '\n';
    out << "per_trial_world=" << (cfg.per_trial_world ? "true" : "false") << '\n';
    out << "workers=" << cfg.workers << '\n';
    out << "pool_file=" << cfg.pool_file << '\n';
    out << "sweep_sizes=" << sweep_sizes_to_string(cfg.sweep_sizes) << '\n';
    out << "output_dir=" << cfg.output_dir << '\n';
    return out.str();
}

/**
 * Pool text format: a dim=<k> header line, then one vector per line as
 * speaker_id,gender,utterance_id,v1,...,vk. Blank and '#' lines are
 * skipped; parse errors carry <source>:<line>.
 */
inline void write_pool_text(std::ostream& out, const XVectorPool& pool) {
    out << "dim=" << pool.dim() << '\n';
    for (std::size_t i = 0; i < pool.size(); ++i) {
        const PoolEntry& e = pool.entry(i);
        detail::check_csv_safe(e.speaker_id, "write_pool_text: speaker_id");
        detail::check_csv_safe(e.utterance_id, "write_pool_text: utterance_id");
        out << e.speaker_id << ',' << gender_char(e.gender) << ',' << e.utterance_id;
        for (double v : e.vector) out << ',' << format_g17(v);
        out << '\n';
    }
}

inline XVectorPool parse_pool_text(std::istream& in, const std::string& source) {
    std::string line;
    std::size_t line_no = 0;
    std::size_t dim = 0;
    bool have_dim = false;
    XVectorPool pool;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view stripped = detail::trim(line);
        if (stripped.empty() || stripped.front() == '#') continue;
        const std::string where = source + ":" + std::to_string(line_no);
        if (!have_dim) {
            if (stripped.substr(0, 4) != "dim=") {
                throw std::runtime_error(where + ": expected dim=<k> header");
            }
            try {
                dim = parse_size(stripped.substr(4), "dim");
            } catch (const std::exception& e) {
                throw std::runtime_error(where + ": " + e.what());
            }
            if (dim == 0) {
                throw std::runtime_error(where + ": dim must be positive");
            }
            have_dim = true;
            continue;
        }
        std::vector<std::string_view> fields;
        std::size_t start = 0;
        while (start <= stripped.size()) {
            std::size_t end = stripped.find(',', start);
            if (end == std::string_view::npos) end = stripped.size();
            fields.push_back(stripped.substr(start, end - start));
            start = end + 1;
            if (end == stripped.size()) break;
        }
        if (fields.size() != 3 + dim) {
            throw std::runtime_error(where + ": expected " + std::to_string(3 + dim) +
                                     " fields, got " + std::to_string(fields.size()));
        }
        if (fields[0].empty()) {
            throw std::runtime_error(where + ": empty speaker_id");
        }
        if (fields[1].size() != 1) {
            throw std::runtime_error(where + ": gender must be a single character");
        }
        PoolEntry e;
        e.speaker_id = std::string(fields[0]);
        try {
            e.gender = gender_from_char(fields[1].front());
        } catch (const std::exception& err) {
            throw std::runtime_error(where + ": " + err.what());
        }
        e.utterance_id = std::string(fields[2]);
        e.vector.reserve(dim);
        for (std::size_t i = 0; i < dim; ++i) {
            try {
                e.vector.push_back(
                    parse_double(fields[3 + i], "coordinate " + std::to_string(i + 1)));
            } catch (const std::exception& err) {
                throw std::runtime_error(where + ": " + err.what());
            }
        }
        try {
            pool.add(std::move(e));
        } catch (const std::exception& err) {
            throw std::runtime_error(where + ": " + err.what());
        }
    }
    if (!have_dim) {
        throw std::runtime_error(source + ": missing dim=<k> header");
    }
    if (pool.empty()) {
        throw std::runtime_error(source + ": no vectors");
    }
    return pool;
}

inline void write_pool_file(const std::string& path, const XVectorPool& pool) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot open '" + path + "' for writing");
    }
    write_pool_text(out, pool);
    if (!out) {
        throw std::runtime_error("write failed for '" + path + "'");
    }
}

inline XVectorPool ingest_pool_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open pool file '" + path + "'");
    }
    return parse_pool_text(in, path);
}

inline void write_trials_csv(std::ostream& out, const ExperimentReport& report) {
    out << "trial_id,truth,predicted,min_distance,present_truth,present_decision\n";
    for (const TrialRow& row : report.trials) {
        const bool absent_decided = report.config.open_world && !row.present_decision;
        const std::string& predicted =
            absent_decided ? std::string(kAbsentMarker) : row.record.outcome.predicted_id;
        detail::check_csv_safe(row.record.truth, "write_trials_csv: truth");
        detail::check_csv_safe(predicted, "write_trials_csv: predicted");
        out << row.trial_id << ',' << row.record.truth << ',' << predicted << ','
            << format_g17(row.record.outcome.min_distance) << ','
            << (row.record.present_truth ? 1 : 0) << ','
            << (row.present_decision ? 1 : 0) << '\n';
    }
}

inline void write_roc_csv(std::ostream& out, const ExperimentReport& report) {
    out << "fpr,tpr\n";
    for (const RocPoint& p : report.roc.points) {
        out << format_g17(p.fpr) << ',' << format_g17(p.tpr) << '\n';
    }
}

inline void write_summary_csv(std::ostream& out, const ExperimentReport& report) {
    const ExperimentConfig& cfg = report.config;
    const std::size_t candidates =
        cfg.eval_candidates == 0 ? cfg.sim.candidates : cfg.eval_candidates;
    out << "policy,world_size,subset_size,level,knowledge,open_world,trials,"
           "candidates,accuracy,auc,eer,eer_residual,threshold,threshold_percentile,"
           "true_dist_mean,true_dist_p50,true_dist_p95,false_dist_mean,false_dist_p50,"
           "false_dist_p95,utility_mean,utility_p50,seed\n";
    out << strategy_to_string(cfg.policy.strategy) << ',' << cfg.policy.world_size << ','
        << cfg.policy.subset_size << ',' << level_to_string(cfg.policy.level) << ','
        << knowledge_to_string(cfg.knowledge) << ',' << (cfg.open_world ? 1 : 0) << ','
        << cfg.trials << ',' << candidates << ',' << format_g17(report.accuracy) << ','
        << format_g17(report.auc_value) << ',' << format_g17(report.eer_value) << ','
        << format_g17(report.eer_residual) << ',' << format_g17(report.threshold) << ','
        << format_g17(cfg.threshold_percentile) << ','
        << format_g17(report.true_dist.mean) << ',' << format_g17(report.true_dist.p50)
        << ',' << format_g17(report.true_dist.p95) << ','
        << format_g17(report.false_dist.mean) << ',' << format_g17(report.false_dist.p50)
        << ',' << format_g17(report.false_dist.p95) << ','
        << format_g17(report.utility_mean) << ',' << format_g17(report.utility_p50)
        << ',' << cfg.sim.seed << '\n';
}

inline void write_sweep_csv(std::ostream& out,
                            const std::vector<std::pair<std::size_t, double>>& table) {
    out << "size,accuracy\n";
    for (const auto& [size, acc] : table) {
        out << size << ',' << format_g17(acc) << '\n';
    }
}

namespace detail {

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    }
    out << text;
    if (!out) {
        throw std::runtime_error("write failed for '" + path.string() + "'");
    }
}

}  // namespace detail

/**
 * Writes trials.csv, roc.csv, summary.csv, and config.echo under dir.
 * Wall-clock duration is deliberately left out of every file so repeat
 * runs with the same config are byte-identical.
 */
inline void write_report_files(const ExperimentReport& report,
                               const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    {
        std::ostringstream s;
        write_trials_csv(s, report);
        detail::write_text_file(dir / "trials.csv", s.str());
    }
    {
        std::ostringstream s;
        write_roc_csv(s, report);
        detail::write_text_file(dir / "roc.csv", s.str());
    }
    {
        std::ostringstream s;
        write_summary_csv(s, report);
        detail::write_text_file(dir / "summary.csv", s.str());
    }
    detail::write_text_file(dir / "config.echo", serialize_config(report.config));
}

}  // namespace xvlab
