// Command-line driver for the trace-quadratic benchmark harness.
//
//   deva run     --config cfg.json --out results/
//   deva sweep   --config cfg.json --lr-grid 1e-3,3e-3,1e-2 [--out results/]
//   deva compare --configs a.json b.json ... [--out results/]
//   deva check
//
// Exit codes: 0 success, 2 invalid config, 3 numerical breakdown in every
// seed, 4 IO error.

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "deva/diagnostics.hpp"
#include "deva/factorize.hpp"
#include "deva/harness.hpp"
#include "deva/msign.hpp"
#include "deva/version.hpp"

using namespace deva;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalidConfig = 2;
constexpr int kExitBreakdown = 3;
constexpr int kExitIo = 4;

void print_summary(const Summary& s) {
    std::printf("%s on %s: %d/%zu seeds finished", s.optimizer.c_str(), s.problem.c_str(),
                s.surviving, s.failed_seeds.size() + static_cast<size_t>(s.surviving));
    if (!s.final_losses.empty())
        std::printf(", final loss median %.6e (q25 %.6e, q75 %.6e)", s.median_final_loss(),
                    s.q25_final_loss(), s.q75_final_loss());
    std::printf(", %.3f ms/step\n", s.wall_ms_per_step);
}

int cmd_run(const std::string& config_path, const std::string& out_dir) {
    const RunConfig cfg = load_config(config_path);
    const Summary s = run_experiment(cfg);
    print_summary(s);
    emit(s, out_dir);
    return s.surviving == 0 ? kExitBreakdown : kExitOk;
}

int cmd_sweep(const std::string& config_path, const std::string& grid_text,
              const std::string& out_dir) {
    std::vector<double> grid;
    std::string token;
    for (char c : grid_text + ",") {
        if (c == ',') {
            if (!token.empty()) grid.push_back(std::stod(token));
            token.clear();
        } else {
            token += c;
        }
    }
    if (grid.empty()) throw InvalidConfig("sweep: empty lr grid");

    const RunConfig base = load_config(config_path);
    Summary best;
    bool have_best = false;
    for (double lr : grid) {
        RunConfig cfg = base;
        cfg.hp.lr = lr;
        const Summary s = run_experiment(cfg);
        print_summary(s);
        if (s.final_losses.empty()) continue;
        if (!have_best || s.median_final_loss() < best.median_final_loss()) {
            best = s;
            have_best = true;
        }
    }
    if (!have_best) return kExitBreakdown;
    std::printf("best lr %g with median final loss %.6e\n", best.base_lr, best.median_final_loss());
    if (!out_dir.empty()) emit(best, out_dir);
    return kExitOk;
}

int cmd_compare(const std::vector<std::string>& config_paths, const std::string& out_dir) {
    std::vector<RunConfig> cfgs;
    for (const std::string& p : config_paths) cfgs.push_back(load_config(p));
    const Comparison cmp = compare_suite(cfgs);
    for (const Summary& s : cmp.summaries) print_summary(s);
    std::printf("ordering by median final loss:");
    for (size_t idx : cmp.order_by_final_loss) std::printf(" %s", cmp.summaries[idx].optimizer.c_str());
    std::printf("\n");
    if (!out_dir.empty()) emit_comparison(cmp, out_dir);
    bool any_survivor = false;
    for (const Summary& s : cmp.summaries) any_survivor |= s.surviving > 0;
    return any_survivor ? kExitOk : kExitBreakdown;
}

// Compact property-oracle pass used by `deva check`: smaller sample counts
// than the acceptance suite, same tolerances.
int cmd_check() {
    int failures = 0;
    auto verdict = [&](const char* name, bool ok, double value, double bound) {
        std::printf("%s %s (%.3g vs bound %.3g)\n", ok ? "PASS" : "FAIL", name, value, bound);
        if (!ok) ++failures;
    };
    Rng rng(7);
    auto random_positive = [&](int n, int m) {
        DenseMatrix out(n, m);
        for (double& v : out.flat()) v = 0.2 + 3.0 * rng.next_double();
        return out;
    };

    {
        double worst = 0.0;
        for (int rep = 0; rep < 25; ++rep) {
            const DenseMatrix g = rng_gaussian(rng, 3, 2);
            worst = std::max(worst, spectral_update_oracle(g, random_positive(3, 2)));
        }
        verdict("coordinate-wise spectral update equivalence", worst <= 1e-8, worst, 1e-8);
    }
    {
        double worst = 0.0;
        for (int rep = 0; rep < 25; ++rep) {
            const DenseMatrix g = rng_gaussian(rng, 8, 6);
            worst = std::max(worst, rotated_norms_check(g));
        }
        verdict("rotated row/column norm identity", worst <= 1e-8, worst, 1e-8);
    }
    {
        double worst = 0.0;
        for (int rep = 0; rep < 25; ++rep) {
            const DenseMatrix g = rng_gaussian(rng, 16, 8);
            worst = std::max(worst,
                             frobenius_norm(msign_newton_schulz(g) - msign_exact(g)) /
                                 (0.05 * std::sqrt(8.0)));
        }
        verdict("newton-schulz polar quality", worst <= 1.0, worst, 1.0);
    }
    {
        double worst = 0.0;
        for (int rep = 0; rep < 5; ++rep) {
            Rng prng(100 + rep);
            const TraceQuadratic p = TraceQuadratic::build(TraceKind::heterogeneous, prng);
            const DenseMatrix x = rng_gaussian(rng, 9, 9);
            const GradSample full = p.full_gradient(x);
            DenseMatrix mean(9, 9);
            for (int i = 0; i < 9; ++i) {
                const int row[] = {i};
                scale_add(mean, 1.0, p.kaczmarz_gradient(x, row).grad, 1.0 / 9.0);
            }
            worst = std::max(worst, frobenius_norm(mean - full.grad) /
                                        std::max(1.0, frobenius_norm(full.grad)));
        }
        verdict("kaczmarz unbiasedness", worst <= 1e-10, worst, 1e-10);
    }
    {
        double worst = 0.0;
        for (int rep = 0; rep < 50; ++rep) {
            const DenseMatrix s = rng_gaussian(rng, 4, 5);
            const DenseMatrix gamma = random_positive(4, 5);
            double min_gamma = gamma.data()[0];
            for (double v : gamma.flat()) min_gamma = std::min(min_gamma, v);
            const DenseMatrix ms = msign_exact(s);
            double mid = 0.0;
            for (size_t i = 0; i < s.size(); ++i) mid += gamma.data()[i] * s.data()[i] * ms.data()[i];
            double lower = 0.0, upper = 0.0;
            for (double sv : svd(s).s) lower += sv;
            lower *= min_gamma;
            for (double sv : svd(hadamard(gamma, s)).s) upper += sv;
            const double scale = std::max(1.0, upper);
            worst = std::max({worst, (lower - mid) / scale, (mid - upper) / scale});
        }
        verdict("gamma-weighted sandwich bound", worst <= 1e-8, worst, 1e-8);
    }
    {
        double worst = 0.0;
        HyperParams hp;
        hp.lr = 0.4;
        hp.beta1 = hp.beta2 = hp.beta3 = 0.0;
        hp.eps = 0.0;
        for (int rep = 0; rep < 20; ++rep) {
            const DenseMatrix g = rng_gaussian(rng, 6, 5);
            MatrixOptState sa = make_matrix_state(6, 5, 10), sb = make_matrix_state(6, 5, 10);
            DenseMatrix xa(6, 5), xb(6, 5);
            deva_sinf_step(sa, xa, g, hp);
            deva_sinf_step(sb, xb, 1e3 * g, hp);
            worst = std::max(worst, max_abs_diff(xa, xb));
        }
        verdict("positive-scale invariance of the spectral step", worst <= 1e-6, worst, 1e-6);
    }
    std::printf(failures == 0 ? "all checks passed\n" : "%d check(s) failed\n", failures);
    return failures == 0 ? kExitOk : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{std::string("deva ") + kLibraryVersion +
                 " - decoupled variance adaptation benchmark harness"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "results", grid = "1e-3,3e-3,1e-2";
    std::vector<std::string> config_paths;

    CLI::App* run = app.add_subcommand("run", "run one experiment config");
    run->add_option("--config", config_path, "JSON config path")->required();
    run->add_option("--out", out_dir, "output directory");

    CLI::App* sweep = app.add_subcommand("sweep", "run a config across a learning-rate grid");
    sweep->add_option("--config", config_path, "JSON config path")->required();
    sweep->add_option("--lr-grid", grid, "comma-separated learning rates");
    sweep->add_option("--out", out_dir, "output directory for the best run");

    CLI::App* compare = app.add_subcommand("compare", "run several configs on one problem");
    compare->add_option("--configs", config_paths, "JSON config paths")->required()->expected(-1);
    compare->add_option("--out", out_dir, "output directory");

    app.add_subcommand("check", "run the property oracles and print pass/fail");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(config_path, out_dir);
        if (sweep->parsed()) return cmd_sweep(config_path, grid, out_dir);
        if (compare->parsed()) return cmd_compare(config_paths, out_dir);
        return cmd_check();
    } catch (const InvalidConfig& e) {
        std::fprintf(stderr, "invalid config: %s\n", e.what());
        return kExitInvalidConfig;
    } catch (const IoError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return kExitIo;
    } catch (const NumericalBreakdown& e) {
        std::fprintf(stderr, "numerical breakdown: %s\n", e.what());
        return kExitBreakdown;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
