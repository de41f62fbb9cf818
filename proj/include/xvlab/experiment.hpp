#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

#include "xvlab/anonymizer.hpp"
#include "xvlab/attack.hpp"
#include "xvlab/embedding.hpp"
#include "xvlab/metrics.hpp"
#include "xvlab/rng.hpp"
#include "xvlab/world.hpp"

namespace xvlab {

/**
 * One experiment: a fixed world, a defender policy, an attacker knowledge
 * level, and a batch of Monte Carlo trials. Every random choice derives
 * from sim.seed through labeled sub-streams, so a config determines its
 * results bit for bit, independent of the worker count.
 */
struct ExperimentConfig {
    SimParams sim;
    AnonymizationPolicy policy;
    KnowledgeLevel knowledge = KnowledgeLevel::Same;
    std::size_t trials = 200;
    bool open_world = false;
    double presence_probability = 0.5;
    double threshold_percentile = 95.0;
    std::size_t calibration_trials = 200;
    std::size_t replications = 1;
    std::size_t eval_candidates = 0;  // 0 = all candidates, else subset size per trial
    bool per_trial_world = false;
    std::size_t workers = 0;  // 0 = hardware concurrency; never affects results
    std::string pool_file;    // optional pool override, ingested by the CLI layer
    std::vector<std::size_t> sweep_sizes = {2, 5, 10, 15, 20, 25, 29};
    std::string output_dir = "out";

    void validate() const {
        sim.validate();
        if (trials == 0) {
            throw std::invalid_argument("ExperimentConfig: trials must be positive");
        }
        if (!(presence_probability >= 0.0 && presence_probability <= 1.0)) {
            throw std::invalid_argument(
                "ExperimentConfig: presence_probability outside [0, 1]");
        }
        if (!(threshold_percentile >= 0.0 && threshold_percentile <= 100.0)) {
            throw std::invalid_argument(
                "ExperimentConfig: threshold_percentile outside [0, 100]");
        }
        if (open_world && calibration_trials == 0) {
            throw std::invalid_argument(
                "ExperimentConfig: open world needs calibration trials");
        }
        if (replications == 0) {
            throw std::invalid_argument("ExperimentConfig: replications must be positive");
        }
        if (eval_candidates > sim.candidates) {
            throw std::invalid_argument(
                "ExperimentConfig: eval_candidates exceeds candidate count");
        }
    }
};

struct TrialRow {
    std::size_t trial_id = 0;
    TrialRecord record;
    bool present_decision = true;
    double utility = 0.0;
};

struct DistStats {
    double mean = std::numeric_limits<double>::quiet_NaN();
    double p50 = std::numeric_limits<double>::quiet_NaN();
    double p95 = std::numeric_limits<double>::quiet_NaN();
};

struct ExperimentReport {
    ExperimentConfig config;
    std::vector<TrialRow> trials;  // ascending trial_id
    double accuracy = std::numeric_limits<double>::quiet_NaN();
    double auc_value = std::numeric_limits<double>::quiet_NaN();
    double eer_value = std::numeric_limits<double>::quiet_NaN();
    double eer_residual = std::numeric_limits<double>::quiet_NaN();
    double threshold = std::numeric_limits<double>::quiet_NaN();
    DistStats true_dist;   // closed: true candidate distance; open: present-trial minima
    DistStats false_dist;  // closed: best impostor distance; open: absent-trial minima
    double utility_mean = std::numeric_limits<double>::quiet_NaN();
    double utility_p50 = std::numeric_limits<double>::quiet_NaN();
    RocCurve roc;  // empty in closed world
    double duration_seconds = 0.0;  // informational only, never exported
};

/**
 * Immutable per-world state shared by every trial: the world itself plus
 * each candidate's canonical utterance set A (the audio the defender
 * anonymizes) and the speaker-level estimate derived from it.
 */
struct WorldContext {
    SpeakerWorld world;
    std::vector<std::vector<XVector>> audio;
    std::vector<XVector> estimate;
    std::unordered_map<std::string, std::size_t> index_by_id;
};

inline WorldContext make_world_context(const SimParams& params,
                                       const XVectorPool* pool_override = nullptr) {
    WorldContext ctx;
    ctx.world = generate_world(params);
    if (pool_override != nullptr) {
        if (pool_override->empty()) {
            throw std::invalid_argument("make_world_context: override pool is empty");
        }
        if (pool_override->dim() != params.dim) {
            throw std::invalid_argument(
                "make_world_context: override pool dimension mismatch");
        }
        ctx.world.pool = *pool_override;
    }
    const RandomStream audio_root = RandomStream(params.seed).child("audio");
    ctx.audio.reserve(ctx.world.candidates.size());
    ctx.estimate.reserve(ctx.world.candidates.size());
    for (std::size_t i = 0; i < ctx.world.candidates.size(); ++i) {
        const SimSpeaker& spk = ctx.world.candidates[i];
        RandomStream s = audio_root.child(spk.id);
        ctx.audio.push_back(
            sample_utterances(spk, params.utterances_per_speaker, params.sigma_utt, s));
        ctx.estimate.push_back(speaker_xvector_estimate(ctx.audio.back()));
        ctx.index_by_id.emplace(spk.id, i);
    }
    return ctx;
}

/// A trial's full result, including the observed anonymized x-vector and
/// the naive baseline's prediction, so callers can score alternative
/// attacks against the same observation.
struct TrialData {
    TrialRow row;
    XVector observed;
    std::string naive_predicted_id;
};

namespace detail {

inline double nan_value() { return std::numeric_limits<double>::quiet_NaN(); }

inline DistStats dist_stats(const std::vector<double>& values) {
    DistStats s;
    if (values.empty()) return s;
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(values.size());
    s.p50 = calibrate_threshold(values, 50.0);
    s.p95 = calibrate_threshold(values, 95.0);
    return s;
}

}  // namespace detail

/**
 * Runs one trial. Calibration trials (eval_phase == false) are always
 * closed-world. The sub-stream layout under trial/<id> is: subset,
 * presence, target, outsider, defender/{anonymize, extract},
 * attacker/{enroll/<candidate>, attack/...}.
 */
inline TrialData run_single_trial(const ExperimentConfig& cfg, const WorldContext& shared,
                                  std::size_t trial_id, bool eval_phase,
                                  double threshold) {
    const RandomStream ts =
        RandomStream(cfg.sim.seed).child("trial").child(trial_id);

    WorldContext local;
    const WorldContext* wc = &shared;
    if (cfg.per_trial_world) {
        SimParams p = cfg.sim;
        p.seed = ts.child("world-seed").root();
        local = make_world_context(p);
        wc = &local;
    }
    const SimParams& sim = cfg.sim;
    const std::size_t n_candidates = wc->world.candidates.size();
    const std::size_t subset_size =
        cfg.eval_candidates == 0 ? n_candidates : cfg.eval_candidates;
    if (subset_size > n_candidates) {
        throw std::invalid_argument("run_single_trial: subset exceeds candidate count");
    }

    std::vector<std::size_t> subset;
    if (subset_size == n_candidates) {
        subset.resize(n_candidates);
        for (std::size_t i = 0; i < n_candidates; ++i) subset[i] = i;
    } else {
        RandomStream ss = ts.child("subset");
        subset = ss.sample_indices(n_candidates, subset_size);
    }

    bool present = true;
    if (cfg.open_world && eval_phase) {
        RandomStream ps = ts.child("presence");
        present = ps.uniform() < cfg.presence_probability;
    }

    SimSpeaker outsider;
    std::vector<XVector> outsider_audio;
    const SimSpeaker* target = nullptr;
    const std::vector<XVector>* target_audio = nullptr;
    XVector target_estimate;
    if (present) {
        RandomStream tsel = ts.child("target");
        const std::size_t idx = subset[tsel.uniform_index(subset.size())];
        target = &wc->world.candidates[idx];
        target_audio = &wc->audio[idx];
        target_estimate = wc->estimate[idx];
    } else {
        RandomStream os = ts.child("outsider");
        outsider.id = "outsider" + std::to_string(trial_id);
        RandomStream gs = os.child("gender");
        outsider.gender = gs.uniform() < 0.5 ? Gender::M : Gender::F;
        RandomStream cs = os.child("centroid");
        outsider.centroid = sample_unit_vector(sim.dim, cs);
        outsider.leak_direction = outsider.centroid;
        RandomStream as = os.child("audio");
        outsider_audio =
            sample_utterances(outsider, sim.utterances_per_speaker, sim.sigma_utt, as);
        target = &outsider;
        target_audio = &outsider_audio;
        target_estimate = speaker_xvector_estimate(outsider_audio);
    }

    // Defender side: anonymize the target's audio, then observe what the
    // attacker sees, the speaker-level average of per-utterance extractions.
    const RandomStream ds = ts.child("defender");
    RandomStream anon_rng = ds.child("anonymize");
    const std::vector<PseudoXVector> pseudos =
        anonymize_speaker(*target_audio, wc->world.pool, cfg.policy,
                          SpeakerRef{target->id, target->gender}, anon_rng);
    RandomStream ext_rng = ds.child("extract");
    std::vector<XVector> extracted;
    extracted.reserve(pseudos.size());
    for (const PseudoXVector& p : pseudos) {
        extracted.push_back(
            simulate_extraction(p.vector, *target, sim.sigma_ext, sim.lambda_leak, ext_rng));
    }
    const XVector observed = speaker_xvector_estimate(extracted);

    // Attacker side.
    const RandomStream as = ts.child("attacker");
    std::vector<CandidateAudio> cand_audio;
    cand_audio.reserve(subset.size());
    const RandomStream enroll_root = as.child("enroll");
    for (std::size_t idx : subset) {
        const SimSpeaker& cand = wc->world.candidates[idx];
        CandidateAudio ca;
        ca.id = cand.id;
        ca.gender = cand.gender;
        if (cfg.knowledge == KnowledgeLevel::Same) {
            ca.utterances = wc->audio[idx];
        } else {
            RandomStream es = enroll_root.child(cand.id);
            ca.utterances =
                sample_utterances(cand, sim.utterances_per_speaker, sim.sigma_utt, es);
        }
        cand_audio.push_back(std::move(ca));
    }
    const WorldContext* wc_capture = wc;
    auto extract_fn = [wc_capture, &sim](const XVector& pseudo, const std::string& id,
                                         RandomStream& rng) {
        const std::size_t idx = wc_capture->index_by_id.at(id);
        return simulate_extraction(pseudo, wc_capture->world.candidates[idx],
                                   sim.sigma_ext, sim.lambda_leak, rng);
    };
    const AttackOutcome outcome =
        deanonymize(observed, cand_audio, wc->world.pool, cfg.policy, cfg.replications,
                    extract_fn, as.child("attack"));

    // Naive baseline: match the observation against the attacker's own
    // speaker-level estimates, skipping the pipeline simulation.
    std::vector<std::pair<std::string, XVector>> enrolled;
    enrolled.reserve(cand_audio.size());
    for (const CandidateAudio& ca : cand_audio) {
        enrolled.emplace_back(ca.id, speaker_xvector_estimate(ca.utterances));
    }
    const AttackOutcome naive = naive_deanonymize(observed, enrolled);

    double utility = 0.0;
    if (cfg.policy.level == ApplicationLevel::SpeakerLevel) {
        utility = utility_proxy(target_estimate, pseudos.front().vector);
    } else {
        double sum = 0.0;
        for (const PseudoXVector& p : pseudos) {
            sum += utility_proxy(target_estimate, p.vector);
        }
        utility = sum / static_cast<double>(pseudos.size());
    }

    TrialData out;
    out.row.trial_id = trial_id;
    out.row.record.truth = present ? target->id : kAbsentMarker;
    out.row.record.outcome = outcome;
    out.row.record.present_truth = present;
    if (cfg.open_world && eval_phase) {
        out.row.present_decision = open_world_decide(outcome, threshold).present;
    } else {
        out.row.present_decision = true;
    }
    out.row.utility = utility;
    out.observed = observed;
    out.naive_predicted_id = naive.predicted_id;
    return out;
}

namespace detail {

inline std::vector<TrialRow> run_phase(const ExperimentConfig& cfg,
                                       const WorldContext& ctx, std::size_t first_id,
                                       std::size_t count, bool eval_phase,
                                       double threshold) {
    std::vector<TrialRow> rows(count);
    std::size_t workers = cfg.workers;
    if (workers == 0) {
        workers = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    }
    workers = std::min(workers, count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) {
            rows[i] =
                run_single_trial(cfg, ctx, first_id + i, eval_phase, threshold).row;
        }
        return rows;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto work = [&]() {
        try {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count) return;
                rows[i] =
                    run_single_trial(cfg, ctx, first_id + i, eval_phase, threshold).row;
            }
        } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!error) error = std::current_exception();
        }
    };
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(work);
    for (std::thread& t : threads) t.join();
    if (error) std::rethrow_exception(error);
    return rows;
}

inline double truth_distance(const TrialRecord& r) {
    for (const RankedCandidate& c : r.outcome.ranked) {
        if (c.id == r.truth) return c.distance;
    }
    return nan_value();
}

inline double best_impostor_distance(const TrialRecord& r) {
    for (const RankedCandidate& c : r.outcome.ranked) {
        if (c.id != r.truth) return c.distance;
    }
    return nan_value();
}

}  // namespace detail

inline ExperimentReport run_experiment(const ExperimentConfig& cfg,
                                       const XVectorPool* pool_override = nullptr) {
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();
    ExperimentReport report;
    report.config = cfg;
    const WorldContext ctx = make_world_context(cfg.sim, pool_override);
    if (cfg.eval_candidates > ctx.world.candidates.size()) {
        throw std::invalid_argument("run_experiment: eval_candidates exceeds world");
    }

    std::size_t first_eval = 0;
    if (cfg.open_world) {
        const std::vector<TrialRow> calib = detail::run_phase(
            cfg, ctx, 0, cfg.calibration_trials, /*eval_phase=*/false, 0.0);
        std::vector<double> dists;
        dists.reserve(calib.size());
        for (const TrialRow& row : calib) {
            dists.push_back(row.record.outcome.min_distance);
        }
        report.threshold = calibrate_threshold(dists, cfg.threshold_percentile);
        first_eval = cfg.calibration_trials;
    }
    report.trials = detail::run_phase(cfg, ctx, first_eval, cfg.trials,
                                      /*eval_phase=*/true, report.threshold);

    std::vector<double> utilities;
    utilities.reserve(report.trials.size());
    for (const TrialRow& row : report.trials) utilities.push_back(row.utility);
    if (!utilities.empty()) {
        double sum = 0.0;
        for (double u : utilities) sum += u;
        report.utility_mean = sum / static_cast<double>(utilities.size());
        report.utility_p50 = calibrate_threshold(utilities, 50.0);
    }

    if (!cfg.open_world) {
        std::vector<TrialRecord> records;
        records.reserve(report.trials.size());
        std::vector<double> true_d, false_d;
        for (const TrialRow& row : report.trials) {
            records.push_back(row.record);
            const double td = detail::truth_distance(row.record);
            if (std::isfinite(td)) true_d.push_back(td);
            const double fd = detail::best_impostor_distance(row.record);
            if (std::isfinite(fd)) false_d.push_back(fd);
        }
        report.accuracy = accuracy(records);
        report.true_dist = detail::dist_stats(true_d);
        report.false_dist = detail::dist_stats(false_d);
    } else {
        std::vector<double> present_scores, absent_scores;
        std::size_t n_present = 0, n_correct = 0;
        for (const TrialRow& row : report.trials) {
            if (row.record.present_truth) {
                present_scores.push_back(row.record.outcome.min_distance);
                ++n_present;
                if (row.present_decision &&
                    row.record.outcome.predicted_id == row.record.truth) {
                    ++n_correct;
                }
            } else {
                absent_scores.push_back(row.record.outcome.min_distance);
            }
        }
        if (n_present > 0) {
            report.accuracy =
                static_cast<double>(n_correct) / static_cast<double>(n_present);
        }
        if (!present_scores.empty() && !absent_scores.empty()) {
            report.roc = roc_curve(present_scores, absent_scores);
            report.auc_value = auc(report.roc);
            const EerEstimate e = eer(report.roc);
            report.eer_value = e.value;
            report.eer_residual = e.residual;
        }
        report.true_dist = detail::dist_stats(present_scores);
        report.false_dist = detail::dist_stats(absent_scores);
    }

    report.duration_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

/**
 * Closed-world identification accuracy as a function of the candidate set
 * size. Each entry runs run_experiment on the same world with per-trial
 * candidate subsets of the requested size; a size equal to the full
 * candidate count reproduces the direct run exactly.
 */
inline std::vector<std::pair<std::size_t, double>> sweep_pool_size(
    const ExperimentConfig& cfg, const std::vector<std::size_t>& sizes) {
    if (sizes.empty()) {
        throw std::invalid_argument("sweep_pool_size: no sizes");
    }
    std::vector<std::pair<std::size_t, double>> table;
    table.reserve(sizes.size());
    for (std::size_t s : sizes) {
        if (s == 0 || s > cfg.sim.candidates) {
            throw std::invalid_argument("sweep_pool_size: size outside candidate range");
        }
        ExperimentConfig sized = cfg;
        sized.open_world = false;
        sized.eval_candidates = s;
        const ExperimentReport r = run_experiment(sized);
        table.emplace_back(s, r.accuracy);
    }
    return table;
}

}  // namespace xvlab
