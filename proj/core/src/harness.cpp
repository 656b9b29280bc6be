#include "deva/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <sstream>
#include <thread>
#include <variant>

#include <json.hpp>

#include "deva/diagnostics.hpp"
#include "deva/factorize.hpp"
#include "deva/version.hpp"

namespace deva {

namespace {

using nlohmann::json;

uint64_t fnv1a(std::string_view bytes) {
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hex64(uint64_t v) {
    char buf[19];
    std::snprintf(buf, sizeof(buf), "0x%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

ProblemKind problem_from_string(const std::string& s) {
    if (s == "trace_quadratic_hom" || s == "trace_hom") return ProblemKind::trace_quadratic_hom;
    if (s == "trace_quadratic_het" || s == "trace_het") return ProblemKind::trace_quadratic_het;
    if (s == "vector_quadratic") return ProblemKind::vector_quadratic;
    throw InvalidConfig("unknown problem kind: " + s);
}

InitKind init_from_string(const std::string& s) {
    if (s == "orthogonal") return InitKind::orthogonal;
    if (s == "gaussian") return InitKind::gaussian;
    if (s == "ones") return InitKind::ones;
    throw InvalidConfig("unknown init: " + s);
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw InvalidConfig(std::string("config field '") + key + "': " + e.what());
    }
}

void validate_config(const RunConfig& cfg) {
    if (cfg.steps < 1) throw InvalidConfig("steps must be >= 1");
    if (cfg.seeds.empty()) throw InvalidConfig("seeds must be nonempty");
    if (cfg.batch_size < 1) throw InvalidConfig("batch_size must be >= 1");
    if (cfg.log_every < 1) throw InvalidConfig("log_every must be >= 1");
    if (!(cfg.schedule.warmup_frac >= 0.0 && cfg.schedule.warmup_frac <= 1.0))
        throw InvalidConfig("warmup_frac must lie in [0, 1]");
    if (cfg.problem.kind != ProblemKind::vector_quadratic && cfg.problem.dim != 9)
        throw InvalidConfig("trace quadratic instances are 9-dimensional");
    if (cfg.problem.kind == ProblemKind::vector_quadratic) {
        if (cfg.problem.dim < 1) throw InvalidConfig("vector_quadratic dim must be >= 1");
        if (is_matrix_optimizer(cfg.optimizer))
            throw InvalidConfig("matrix optimizers cannot run on vector problems");
        if (!cfg.problem.spectrum.empty() &&
            static_cast<int>(cfg.problem.spectrum.size()) != cfg.problem.dim)
            throw InvalidConfig("spectrum length must equal dim");
    }
    validate_hyperparams(cfg.hp);
}

// Thin problem handle so the run loop is uniform over problem types.
struct ProblemHandle {
    std::variant<TraceQuadratic, VectorQuadratic> p;

    int param_rows() const {
        return std::visit([](const auto& q) { return q.dim(); }, p);
    }
    int param_cols() const { return std::holds_alternative<TraceQuadratic>(p) ? param_rows() : 1; }
    const DenseMatrix& hessian() const {
        return std::visit([](const auto& q) -> const DenseMatrix& { return q.hessian(); }, p);
    }
    GradSample full_gradient(const DenseMatrix& x) const {
        return std::visit([&](const auto& q) { return q.full_gradient(x); }, p);
    }
    GradSample sample_gradient(const DenseMatrix& x, Rng& rng, int batch_size) const {
        return std::visit(
            [&](const auto& q) {
                const std::vector<int> rows = q.sample_rows(rng, batch_size);
                return q.kaczmarz_gradient(x, rows);
            },
            p);
    }
};

ProblemHandle build_problem(const RunConfig& cfg, Rng& rng) {
    switch (cfg.problem.kind) {
        case ProblemKind::trace_quadratic_hom:
            return ProblemHandle{TraceQuadratic::build(TraceKind::homogeneous, rng)};
        case ProblemKind::trace_quadratic_het:
            return ProblemHandle{TraceQuadratic::build(TraceKind::heterogeneous, rng)};
        case ProblemKind::vector_quadratic: {
            std::vector<double> spectrum = cfg.problem.spectrum;
            if (spectrum.empty()) spectrum.assign(static_cast<size_t>(cfg.problem.dim), 1.0);
            return ProblemHandle{VectorQuadratic(std::move(spectrum))};
        }
    }
    throw InvalidConfig("unreachable problem kind");
}

DenseMatrix initial_iterate(const RunConfig& cfg, const ProblemHandle& prob, Rng& rng) {
    const int n = prob.param_rows(), m = prob.param_cols();
    switch (cfg.init) {
        case InitKind::ones: {
            DenseMatrix x(n, m);
            for (double& v : x.flat()) v = 1.0;
            return x;
        }
        case InitKind::gaussian: {
            DenseMatrix x = rng_gaussian(rng, n, m);
            const double fro = frobenius_norm(x);
            if (fro > 0.0)
                for (double& v : x.flat()) v /= fro;
            return x;
        }
        case InitKind::orthogonal: {
            // random orthogonal scaled to unit Frobenius norm: equal energy in
            // every Hessian eigendirection, so seed-paired hom/het runs of a
            // deterministic method produce identical loss curves
            if (m == 1) {
                DenseMatrix x = rng_gaussian(rng, n, m);
                const double fro = frobenius_norm(x);
                if (fro > 0.0)
                    for (double& v : x.flat()) v /= fro;
                return x;
            }
            DenseMatrix q = qr_orthonormalize(rng_gaussian(rng, n, m));
            const double fro = frobenius_norm(q);
            for (double& v : q.flat()) v /= fro;
            return q;
        }
    }
    throw InvalidConfig("unreachable init kind");
}

// One optimizer instance bound to a parameter shape.
struct OptimizerInstance {
    OptimizerKind kind;
    VectorOptState vec;
    MuonState muon;
    MatrixOptState mat;
    EffMatrixOptState eff;

    OptimizerInstance(OptimizerKind k, int n, int m, const HyperParams& hp) : kind(k) {
        switch (kind) {
            case OptimizerKind::signum:
            case OptimizerKind::adam:
            case OptimizerKind::deva_linf: vec = make_vector_state(n, m); break;
            case OptimizerKind::muon: muon = make_muon_state(n, m); break;
            case OptimizerKind::soap:
            case OptimizerKind::deva_sinf:
            case OptimizerKind::deva_sinf_inst: mat = make_matrix_state(n, m, hp.freq); break;
            case OptimizerKind::deva_sinf_eff: eff = make_eff_matrix_state(n, m, hp.freq); break;
            case OptimizerKind::gd: break;
        }
    }

    void step(DenseMatrix& x, const DenseMatrix& g, const HyperParams& hp) {
        switch (kind) {
            case OptimizerKind::gd: gd_step(x, g, hp); break;
            case OptimizerKind::signum: signum_step(vec, x, g, hp); break;
            case OptimizerKind::adam: adam_step(vec, x, g, hp); break;
            case OptimizerKind::deva_linf: deva_linf_step(vec, x, g, hp); break;
            case OptimizerKind::muon: muon_step(muon, x, g, hp); break;
            case OptimizerKind::soap: soap_lite_step(mat, x, g, hp); break;
            case OptimizerKind::deva_sinf: deva_sinf_step(mat, x, g, hp); break;
            case OptimizerKind::deva_sinf_eff: deva_sinf_eff_step(eff, x, g, hp); break;
            case OptimizerKind::deva_sinf_inst: deva_sinf_inst_step(mat, x, g, hp); break;
        }
    }

    // Current adaptive weights; all-ones for non-adaptive methods.
    const DenseMatrix* gamma(DenseMatrix& ones_buf) const {
        switch (kind) {
            case OptimizerKind::adam:
            case OptimizerKind::deva_linf:
            case OptimizerKind::signum: return &vec.last_gamma;
            case OptimizerKind::soap:
            case OptimizerKind::deva_sinf:
            case OptimizerKind::deva_sinf_inst: return &mat.last_gamma;
            case OptimizerKind::deva_sinf_eff: return &eff.last_gamma;
            default:
                for (double& v : ones_buf.flat()) v = 1.0;
                return &ones_buf;
        }
    }

    AdaptKind adapt_kind() const {
        return is_matrix_optimizer(kind) ? AdaptKind::matrix : AdaptKind::vector;
    }
};

}  // namespace

const char* problem_name(ProblemKind kind) {
    switch (kind) {
        case ProblemKind::trace_quadratic_hom: return "trace_hom";
        case ProblemKind::trace_quadratic_het: return "trace_het";
        case ProblemKind::vector_quadratic: return "vector_quadratic";
    }
    return "unknown";
}

RunConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw InvalidConfig(std::string("config is not valid JSON: ") + e.what());
    }

    RunConfig cfg;
    if (!j.contains("problem") || !j.contains("optimizer"))
        throw InvalidConfig("config requires 'problem' and 'optimizer'");

    const json& jp = j.at("problem");
    cfg.problem.kind = problem_from_string(get_or<std::string>(jp, "kind", "trace_quadratic_het"));
    cfg.problem.dim = get_or<int>(jp, "dim", 9);
    if (jp.contains("spectrum")) cfg.problem.spectrum = jp.at("spectrum").get<std::vector<double>>();

    const json& jo = j.at("optimizer");
    cfg.optimizer = optimizer_from_name(get_or<std::string>(jo, "kind", "deva_sinf"));
    cfg.hp = default_hyperparams(cfg.optimizer);
    cfg.hp.lr = get_or<double>(jo, "lr", cfg.hp.lr);
    cfg.hp.beta1 = get_or<double>(jo, "beta1", cfg.hp.beta1);
    cfg.hp.beta2 = get_or<double>(jo, "beta2", cfg.hp.beta2);
    cfg.hp.beta3 = get_or<double>(jo, "beta3", cfg.hp.beta3);
    cfg.hp.eps = get_or<double>(jo, "eps", cfg.hp.eps);
    cfg.hp.weight_decay = get_or<double>(jo, "weight_decay", cfg.hp.weight_decay);
    cfg.hp.freq = get_or<int>(jo, "freq", cfg.hp.freq);
    cfg.hp.nesterov = get_or<bool>(jo, "nesterov", cfg.hp.nesterov);
    cfg.hp.ns_iters = get_or<int>(jo, "ns_iters", cfg.hp.ns_iters);
    cfg.hp.bias_correction = get_or<bool>(jo, "bias_correction", cfg.hp.bias_correction);

    cfg.steps = get_or<long>(j, "steps", 2000);
    if (j.contains("seeds")) {
        const json& js = j.at("seeds");
        if (js.is_array()) {
            cfg.seeds = js.get<std::vector<uint64_t>>();
        } else if (js.is_object()) {
            const uint64_t start = get_or<uint64_t>(js, "start", 0);
            const uint64_t count = get_or<uint64_t>(js, "count", 0);
            for (uint64_t i = 0; i < count; ++i) cfg.seeds.push_back(start + i);
        } else {
            throw InvalidConfig("seeds must be a list or {start, count}");
        }
    }
    cfg.batch_size = get_or<int>(j, "batch_size", 1);
    cfg.full_batch = get_or<bool>(j, "full_batch", cfg.optimizer == OptimizerKind::gd);

    if (j.contains("schedule")) {
        const json& jsch = j.at("schedule");
        const std::string kind = get_or<std::string>(jsch, "kind", "warmup_linear");
        if (kind == "constant")
            cfg.schedule.kind = ScheduleKind::constant;
        else if (kind == "warmup_linear")
            cfg.schedule.kind = ScheduleKind::warmup_linear;
        else
            throw InvalidConfig("unknown schedule kind: " + kind);
        cfg.schedule.warmup_frac = get_or<double>(jsch, "warmup_frac", 0.5);
    } else if (cfg.optimizer == OptimizerKind::gd) {
        cfg.schedule.kind = ScheduleKind::constant;
    }
    cfg.log_every = get_or<long>(j, "log_every", 10);
    cfg.diagnostics = get_or<bool>(j, "diagnostics", false);
    const std::string default_init =
        cfg.problem.kind == ProblemKind::vector_quadratic ? "gaussian" : "orthogonal";
    cfg.init = init_from_string(get_or<std::string>(j, "init", default_init));

    cfg.config_hash = fnv1a(text);
    validate_config(cfg);
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config file: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::vector<TraceRecord> run_single(const RunConfig& cfg, uint64_t seed) {
    validate_config(cfg);
    Rng rng(seed);
    const ProblemHandle prob = build_problem(cfg, rng);
    DenseMatrix x = initial_iterate(cfg, prob, rng);
    OptimizerInstance opt(cfg.optimizer, x.rows(), x.cols(), cfg.hp);
    DenseMatrix ones_buf(x.rows(), x.cols());

    std::vector<TraceRecord> records;
    for (long t = 1; t <= cfg.steps; ++t) {
        HyperParams step_hp = cfg.hp;
        step_hp.lr = cfg.schedule.kind == ScheduleKind::constant
                         ? cfg.hp.lr
                         : schedule_lr(t, cfg.steps, cfg.schedule.warmup_frac, cfg.hp.lr);
        const GradSample sample =
            cfg.full_batch ? prob.full_gradient(x) : prob.sample_gradient(x, rng, cfg.batch_size);
        if (!is_finite(sample.grad)) throw NumericalBreakdown(t, "non-finite gradient");
        opt.step(x, sample.grad, step_hp);

        const bool log_now = (t == 1) || (t % cfg.log_every == 0) || (t == cfg.steps);
        if (!log_now) continue;
        const GradSample exact = prob.full_gradient(x);
        if (!std::isfinite(exact.value)) throw NumericalBreakdown(t, "non-finite loss");
        TraceRecord rec;
        rec.seed = seed;
        rec.step = t;
        rec.loss = exact.value;
        rec.lr = step_hp.lr;
        if (cfg.diagnostics) {
            const NormTrace nt = h_alignment_trace(prob.hessian(), *opt.gamma(ones_buf),
                                                   opt.adapt_kind(), t, &exact.grad);
            rec.has_diag = true;
            rec.h_weighted = nt.h_weighted;
            rec.grad_nuclear = nt.nuclear_rank;
        }
        records.push_back(rec);
    }
    return records;
}

double quantile(std::vector<double> values, double p) {
    if (values.empty()) throw InvalidInput("quantile of empty sample");
    std::sort(values.begin(), values.end());
    const double h = p * static_cast<double>(values.size() - 1);
    const size_t lo = static_cast<size_t>(h);
    if (lo + 1 >= values.size()) return values.back();
    const double frac = h - static_cast<double>(lo);
    return values[lo] + frac * (values[lo + 1] - values[lo]);
}

double Summary::median_final_loss() const { return quantile(final_losses, 0.5); }
double Summary::q25_final_loss() const { return quantile(final_losses, 0.25); }
double Summary::q75_final_loss() const { return quantile(final_losses, 0.75); }

Summary run_experiment(const RunConfig& cfg) {
    validate_config(cfg);
    const auto t0 = std::chrono::steady_clock::now();

    struct SeedResult {
        std::vector<TraceRecord> records;
        bool failed = false;
    };
    std::vector<SeedResult> results(cfg.seeds.size());

    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const size_t stride = std::max<size_t>(1, (cfg.seeds.size() + hw - 1) / hw);
    std::vector<std::future<void>> futures;
    for (size_t begin = 0; begin < cfg.seeds.size(); begin += stride) {
        const size_t end = std::min(begin + stride, cfg.seeds.size());
        futures.push_back(std::async(std::launch::async, [&, begin, end] {
            for (size_t i = begin; i < end; ++i) {
                try {
                    results[i].records = run_single(cfg, cfg.seeds[i]);
                } catch (const NumericalBreakdown&) {
                    results[i].failed = true;
                }
            }
        }));
    }
    for (auto& f : futures) f.get();

    Summary summary;
    summary.optimizer = optimizer_name(cfg.optimizer);
    summary.problem = problem_name(cfg.problem.kind);
    summary.steps = cfg.steps;
    summary.base_lr = cfg.hp.lr;
    summary.config_hash = cfg.config_hash;

    std::vector<const SeedResult*> ok;
    for (size_t i = 0; i < results.size(); ++i) {
        if (results[i].failed)
            summary.failed_seeds.push_back(cfg.seeds[i]);
        else
            ok.push_back(&results[i]);
    }
    summary.surviving = static_cast<int>(ok.size());
    if (ok.empty()) {
        const auto t1 = std::chrono::steady_clock::now();
        summary.wall_ms_per_step = std::chrono::duration<double, std::milli>(t1 - t0).count() /
                                   static_cast<double>(cfg.steps);
        return summary;
    }

    const size_t nlog = ok.front()->records.size();
    for (size_t k = 0; k < nlog; ++k) {
        StepStat st;
        st.step = ok.front()->records[k].step;
        std::vector<double> losses, hnorms;
        losses.reserve(ok.size());
        for (const SeedResult* r : ok) {
            losses.push_back(r->records[k].loss);
            if (r->records[k].has_diag && std::isfinite(r->records[k].h_weighted))
                hnorms.push_back(r->records[k].h_weighted);
        }
        st.median_loss = quantile(losses, 0.5);
        st.q25_loss = quantile(losses, 0.25);
        st.q75_loss = quantile(losses, 0.75);
        if (!hnorms.empty()) {
            st.has_diag = true;
            st.median_hnorm = quantile(hnorms, 0.5);
            st.q25_hnorm = quantile(hnorms, 0.25);
            st.q75_hnorm = quantile(hnorms, 0.75);
        }
        summary.per_step.push_back(st);
        if (k + 1 == nlog)
            for (const SeedResult* r : ok) summary.final_losses.push_back(r->records[k].loss);
    }

    const auto t1 = std::chrono::steady_clock::now();
    summary.wall_ms_per_step = std::chrono::duration<double, std::milli>(t1 - t0).count() /
                               static_cast<double>(cfg.steps * std::max<size_t>(1, cfg.seeds.size()));
    return summary;
}

Comparison compare_suite(std::span<const RunConfig> cfgs) {
    if (cfgs.empty()) throw InvalidConfig("compare_suite: no configs");
    for (const RunConfig& c : cfgs) {
        if (c.problem.kind != cfgs.front().problem.kind || c.steps != cfgs.front().steps)
            throw InvalidConfig("compare_suite: configs must share problem and steps");
    }
    Comparison cmp;
    for (const RunConfig& c : cfgs) cmp.summaries.push_back(run_experiment(c));
    cmp.order_by_final_loss.resize(cmp.summaries.size());
    for (size_t i = 0; i < cmp.summaries.size(); ++i) cmp.order_by_final_loss[i] = i;
    std::stable_sort(cmp.order_by_final_loss.begin(), cmp.order_by_final_loss.end(),
                     [&](size_t a, size_t b) {
                         const Summary& sa = cmp.summaries[a];
                         const Summary& sb = cmp.summaries[b];
                         if (sa.final_losses.empty()) return false;
                         if (sb.final_losses.empty()) return true;
                         return sa.median_final_loss() < sb.median_final_loss();
                     });
    return cmp;
}

namespace {

void write_trace_csv(const Summary& s, const std::filesystem::path& file) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw IoError("cannot write " + file.string());
    out << "step,median_loss,q25_loss,q75_loss,median_hnorm,q25_hnorm,q75_hnorm\n";
    for (const StepStat& st : s.per_step) {
        out << st.step << ',' << format_double(st.median_loss) << ',' << format_double(st.q25_loss)
            << ',' << format_double(st.q75_loss) << ',';
        if (st.has_diag) {
            out << format_double(st.median_hnorm) << ',' << format_double(st.q25_hnorm) << ','
                << format_double(st.q75_hnorm);
        } else {
            out << ",,";
        }
        out << '\n';
    }
    if (!out) throw IoError("write failed for " + file.string());
}

json summary_json(const Summary& s) {
    json j;
    j["schema_version"] = "1";
    j["library_version"] = kLibraryVersion;
    j["config_hash"] = hex64(s.config_hash);
    j["optimizer"] = s.optimizer;
    j["problem"] = s.problem;
    j["steps"] = s.steps;
    j["base_lr"] = s.base_lr;
    j["seeds_total"] = s.surviving + static_cast<int>(s.failed_seeds.size());
    j["seeds_surviving"] = s.surviving;
    j["failed_seeds"] = s.failed_seeds;
    if (!s.final_losses.empty()) {
        j["final_loss"] = {{"median", s.median_final_loss()},
                           {"q25", s.q25_final_loss()},
                           {"q75", s.q75_final_loss()}};
    }
    j["wall_clock_ms_per_step"] = s.wall_ms_per_step;
    return j;
}

}  // namespace

void emit(const Summary& s, const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory " + out_dir.string());
    write_trace_csv(s, out_dir / ("trace_" + s.optimizer + "_" + s.problem + ".csv"));
    std::ofstream out(out_dir / "summary.json", std::ios::binary);
    if (!out) throw IoError("cannot write summary.json");
    out << summary_json(s).dump(2) << '\n';
    if (!out) throw IoError("write failed for summary.json");
}

void emit_comparison(const Comparison& cmp, const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory " + out_dir.string());
    json j;
    j["schema_version"] = "1";
    j["library_version"] = kLibraryVersion;
    json runs = json::array();
    for (const Summary& s : cmp.summaries) {
        write_trace_csv(s, out_dir / ("trace_" + s.optimizer + "_" + s.problem + ".csv"));
        runs.push_back(summary_json(s));
    }
    j["runs"] = runs;
    json order = json::array();
    for (size_t idx : cmp.order_by_final_loss) order.push_back(cmp.summaries[idx].optimizer);
    j["ordering_by_median_final_loss"] = order;
    std::ofstream out(out_dir / "summary.json", std::ios::binary);
    if (!out) throw IoError("cannot write summary.json");
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write failed for summary.json");
}

}  // namespace deva
