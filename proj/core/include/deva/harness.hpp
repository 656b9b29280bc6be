#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "deva/optimizers.hpp"
#include "deva/problems.hpp"

namespace deva {

enum class ProblemKind { trace_quadratic_hom, trace_quadratic_het, vector_quadratic };
enum class ScheduleKind { constant, warmup_linear };
enum class InitKind { orthogonal, gaussian, ones };

const char* problem_name(ProblemKind kind);

struct ProblemSpec {
    ProblemKind kind = ProblemKind::trace_quadratic_het;
    int dim = 9;
    std::vector<double> spectrum;  // vector_quadratic only; defaults to all-ones
};

struct ScheduleSpec {
    ScheduleKind kind = ScheduleKind::warmup_linear;
    double warmup_frac = 0.5;
};

struct RunConfig {
    ProblemSpec problem;
    OptimizerKind optimizer = OptimizerKind::deva_sinf;
    HyperParams hp;
    long steps = 2000;
    std::vector<uint64_t> seeds;
    int batch_size = 1;
    bool full_batch = false;  // exact gradient every step (defaults true for gd)
    ScheduleSpec schedule;
    long log_every = 10;
    bool diagnostics = false;
    InitKind init = InitKind::orthogonal;
    uint64_t config_hash = 0;
};

/// Parses the JSON config format (see README). Throws InvalidConfig on
/// missing or out-of-range fields, IoError if the file cannot be read.
RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(const std::string& json_text);

struct TraceRecord {
    uint64_t seed = 0;
    long step = 0;
    double loss = 0.0;
    double lr = 0.0;
    bool has_diag = false;
    double h_weighted = 0.0;
    double grad_nuclear = 0.0;
};

/// Runs one seed of the configured optimization loop. Deterministic per
/// (config, seed). Throws NumericalBreakdown (with step index) if the loss
/// or iterate becomes non-finite.
std::vector<TraceRecord> run_single(const RunConfig& cfg, uint64_t seed);

struct StepStat {
    long step = 0;
    double median_loss = 0.0, q25_loss = 0.0, q75_loss = 0.0;
    bool has_diag = false;
    double median_hnorm = 0.0, q25_hnorm = 0.0, q75_hnorm = 0.0;
};

struct Summary {
    std::string optimizer;
    std::string problem;
    long steps = 0;
    double base_lr = 0.0;
    uint64_t config_hash = 0;
    std::vector<StepStat> per_step;
    std::vector<double> final_losses;        // per surviving seed, seed order
    std::vector<uint64_t> failed_seeds;      // seeds that hit NumericalBreakdown
    int surviving = 0;
    double wall_ms_per_step = 0.0;
    double median_final_loss() const;
    double q25_final_loss() const;
    double q75_final_loss() const;
};

/// Runs all seeds (in parallel) and aggregates per-step quantiles across the
/// surviving ones. Failed seeds are recorded, not dropped silently.
Summary run_experiment(const RunConfig& cfg);

struct Comparison {
    std::vector<Summary> summaries;            // one per input config
    std::vector<size_t> order_by_final_loss;   // indices, ascending median final loss
};

/// All configs must share problem kind and step count.
Comparison compare_suite(std::span<const RunConfig> cfgs);

/// Writes <out>/trace_<optimizer>_<problem>.csv and <out>/summary.json.
/// Byte-stable for identical inputs; wall-clock fields are the only
/// nondeterministic content of summary.json.
void emit(const Summary& summary, const std::filesystem::path& out_dir);

/// Writes one trace CSV per summary plus a combined summary.json with the
/// pairwise ordering.
void emit_comparison(const Comparison& cmp, const std::filesystem::path& out_dir);

/// Linear-interpolation quantile of an unsorted sample (p in [0,1]).
double quantile(std::vector<double> values, double p);

}  // namespace deva
