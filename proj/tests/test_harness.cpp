#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "deva/harness.hpp"

using namespace deva;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string strip_wall_clock(const std::string& text) {
    std::stringstream out;
    std::stringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.find("wall_clock") != std::string::npos) continue;
        out << line << '\n';
    }
    return out.str();
}

const char* kGdVectorConfig = R"({
  "problem": {"kind": "vector_quadratic", "dim": 1},
  "optimizer": {"kind": "gd", "lr": 0.1},
  "steps": 10,
  "seeds": [1],
  "schedule": {"kind": "constant"},
  "log_every": 1,
  "init": "ones"
})";

fs::path temp_dir(const char* tag) {
    fs::path p = fs::temp_directory_path() / (std::string("deva_test_") + tag);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

}  // namespace

TEST_CASE("config parsing defaults and validation") {
    const RunConfig cfg = parse_config(kGdVectorConfig);
    CHECK(cfg.optimizer == OptimizerKind::gd);
    CHECK(cfg.full_batch);  // gd defaults to the exact gradient
    CHECK(cfg.schedule.kind == ScheduleKind::constant);
    CHECK(cfg.init == InitKind::ones);

    CHECK_THROWS_AS(parse_config("{not json"), InvalidConfig);
    CHECK_THROWS_AS(parse_config(R"({"optimizer": {"kind": "gd"}})"), InvalidConfig);
    CHECK_THROWS_AS(parse_config(R"({
        "problem": {"kind": "vector_quadratic", "dim": 2},
        "optimizer": {"kind": "gd"}, "steps": 0, "seeds": [1]})"),
                    InvalidConfig);
    CHECK_THROWS_AS(parse_config(R"({
        "problem": {"kind": "vector_quadratic", "dim": 2},
        "optimizer": {"kind": "gd"}, "steps": 5, "seeds": []})"),
                    InvalidConfig);
    CHECK_THROWS_AS(parse_config(R"({
        "problem": {"kind": "vector_quadratic", "dim": 2},
        "optimizer": {"kind": "muon"}, "steps": 5, "seeds": [1]})"),
                    InvalidConfig);
    CHECK_THROWS_AS(parse_config(R"({
        "problem": {"kind": "trace_quadratic_het", "dim": 7},
        "optimizer": {"kind": "gd"}, "steps": 5, "seeds": [1]})"),
                    InvalidConfig);

    const RunConfig ranged = parse_config(R"({
        "problem": {"kind": "trace_quadratic_het"},
        "optimizer": {"kind": "deva_sinf", "lr": 0.01},
        "steps": 5, "seeds": {"start": 10, "count": 3}})");
    REQUIRE(ranged.seeds.size() == 3);
    CHECK(ranged.seeds[0] == 10);
    CHECK(ranged.seeds[2] == 12);
    CHECK(ranged.hp.beta1 == 0.95);  // matrix-method default
}

TEST_CASE("run_single: closed-form gd contraction on the scalar quadratic") {
    const RunConfig cfg = parse_config(kGdVectorConfig);
    const std::vector<TraceRecord> recs = run_single(cfg, 1);
    REQUIRE(recs.size() == 10);
    // x_t = 0.9^t, loss = x^2/2
    CHECK(recs.back().loss == doctest::Approx(0.5 * std::pow(0.9, 20)).epsilon(1e-12));
    CHECK(recs.back().step == 10);
    CHECK(recs.front().lr == 0.1);
}

TEST_CASE("run_single is deterministic per seed") {
    const char* cfg_text = R"({
      "problem": {"kind": "trace_quadratic_het"},
      "optimizer": {"kind": "deva_sinf", "lr": 0.01, "beta1": 0.0, "beta2": 0.99, "beta3": 0.99},
      "steps": 60, "seeds": [5], "batch_size": 1,
      "schedule": {"kind": "warmup_linear", "warmup_frac": 0.5},
      "log_every": 10, "diagnostics": true})";
    const RunConfig cfg = parse_config(cfg_text);
    const auto a = run_single(cfg, 5);
    const auto b = run_single(cfg, 5);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].loss == b[i].loss);
        CHECK(a[i].lr == b[i].lr);
        CHECK(a[i].h_weighted == b[i].h_weighted);
    }
    const auto c = run_single(cfg, 6);
    CHECK(a.back().loss != c.back().loss);
}

TEST_CASE("run_experiment aggregates quantiles; deterministic seeds coincide") {
    const RunConfig cfg = parse_config(R"({
      "problem": {"kind": "trace_quadratic_hom"},
      "optimizer": {"kind": "gd", "lr": 0.0002},
      "steps": 40, "seeds": [3, 3, 3],
      "schedule": {"kind": "constant"}, "log_every": 10})");
    const Summary s = run_experiment(cfg);
    CHECK(s.surviving == 3);
    for (const StepStat& st : s.per_step) {
        CHECK(st.q25_loss == st.median_loss);
        CHECK(st.median_loss == st.q75_loss);
    }
}

TEST_CASE("quantile ordering holds at every logged step") {
    const RunConfig cfg = parse_config(R"({
      "problem": {"kind": "trace_quadratic_het"},
      "optimizer": {"kind": "muon", "lr": 0.003, "beta1": 0.0},
      "steps": 80, "seeds": {"start": 1, "count": 8}, "batch_size": 1,
      "log_every": 20})");
    const Summary s = run_experiment(cfg);
    REQUIRE(s.surviving == 8);
    for (const StepStat& st : s.per_step) {
        CHECK(st.q25_loss <= st.median_loss);
        CHECK(st.median_loss <= st.q75_loss);
    }
}

TEST_CASE("failed seeds are recorded, not dropped silently") {
    // gd at lr far above 2/lambda_max diverges to inf
    const RunConfig cfg = parse_config(R"({
      "problem": {"kind": "trace_quadratic_het"},
      "optimizer": {"kind": "gd", "lr": 1.0},
      "steps": 400, "seeds": [1, 2],
      "schedule": {"kind": "constant"}, "log_every": 50})");
    const Summary s = run_experiment(cfg);
    CHECK(s.surviving == 0);
    CHECK(s.failed_seeds.size() == 2);
    CHECK(s.final_losses.empty());
}

TEST_CASE("gd parity: hom and het seed-paired runs match per step") {
    const char* tmpl = R"({
      "problem": {"kind": "%s"},
      "optimizer": {"kind": "gd", "lr": 0.0002},
      "steps": 100, "seeds": [21, 22], "schedule": {"kind": "constant"},
      "log_every": 10})";
    char hom_text[512], het_text[512];
    std::snprintf(hom_text, sizeof(hom_text), tmpl, "trace_quadratic_hom");
    std::snprintf(het_text, sizeof(het_text), tmpl, "trace_quadratic_het");
    for (uint64_t seed : {21ull, 22ull}) {
        const auto hom = run_single(parse_config(hom_text), seed);
        const auto het = run_single(parse_config(het_text), seed);
        REQUIRE(hom.size() == het.size());
        for (size_t i = 0; i < hom.size(); ++i) {
            const double rel = std::fabs(hom[i].loss - het[i].loss) /
                               std::max(std::fabs(hom[i].loss), std::fabs(het[i].loss));
            CHECK(rel <= 1e-6);
        }
    }
}

TEST_CASE("emit writes the pinned CSV header and is byte-stable") {
    const RunConfig cfg = parse_config(R"({
      "problem": {"kind": "trace_quadratic_het"},
      "optimizer": {"kind": "deva_sinf", "lr": 0.01, "beta1": 0.0, "beta2": 0.99, "beta3": 0.99},
      "steps": 30, "seeds": [1, 2, 3], "log_every": 10, "diagnostics": true})");
    const Summary s = run_experiment(cfg);

    const fs::path dir_a = temp_dir("emit_a");
    const fs::path dir_b = temp_dir("emit_b");
    emit(s, dir_a);
    emit(s, dir_b);

    const fs::path csv = dir_a / "trace_deva_sinf_trace_het.csv";
    REQUIRE(fs::exists(csv));
    const std::string text = slurp(csv);
    CHECK(text.rfind("step,median_loss,q25_loss,q75_loss,median_hnorm,q25_hnorm,q75_hnorm\n", 0) == 0);
    CHECK(text == slurp(dir_b / "trace_deva_sinf_trace_het.csv"));

    const std::string json_a = slurp(dir_a / "summary.json");
    CHECK(json_a.find("\"schema_version\": \"1\"") != std::string::npos);
    CHECK(json_a.find("\"config_hash\"") != std::string::npos);
    CHECK(json_a.find("\"library_version\"") != std::string::npos);
    CHECK(strip_wall_clock(json_a) == strip_wall_clock(slurp(dir_b / "summary.json")));
}

TEST_CASE("compare_suite orders optimizers and validates inputs") {
    const RunConfig a = parse_config(R"({
      "problem": {"kind": "trace_quadratic_het"},
      "optimizer": {"kind": "gd", "lr": 0.0002},
      "steps": 50, "seeds": [7], "schedule": {"kind": "constant"}, "log_every": 10})");
    const Comparison single = compare_suite(std::span<const RunConfig>(&a, 1));
    CHECK(single.summaries.size() == 1);
    CHECK(single.order_by_final_loss[0] == 0);

    RunConfig b = a;
    b.problem.kind = ProblemKind::trace_quadratic_hom;
    const RunConfig both[] = {a, b};
    CHECK_THROWS_AS(compare_suite(both), InvalidConfig);

    RunConfig c = parse_config(R"({
      "problem": {"kind": "trace_quadratic_het"},
      "optimizer": {"kind": "deva_sinf", "lr": 0.01, "beta1": 0.0, "beta2": 0.99, "beta3": 0.99},
      "steps": 50, "seeds": [7], "batch_size": 1, "log_every": 10})");
    const RunConfig pair[] = {a, c};
    const Comparison cmp = compare_suite(pair);
    CHECK(cmp.summaries.size() == 2);
    // ordering indices form a permutation
    CHECK(cmp.order_by_final_loss[0] + cmp.order_by_final_loss[1] == 1);

    const fs::path dir = temp_dir("cmp");
    emit_comparison(cmp, dir);
    CHECK(fs::exists(dir / "summary.json"));
    CHECK(fs::exists(dir / "trace_gd_trace_het.csv"));
    CHECK(fs::exists(dir / "trace_deva_sinf_trace_het.csv"));
}

TEST_CASE("instantaneous variant diverges from the base under momentum yet both beat gd") {
    const char* tmpl = R"({
      "problem": {"kind": "trace_quadratic_het"},
      "optimizer": {"kind": "%s", "lr": 0.01, "beta1": 0.95, "beta2": 0.99, "beta3": 0.99},
      "steps": 2000, "seeds": {"start": 50, "count": 5}, "batch_size": 1,
      "schedule": {"kind": "warmup_linear", "warmup_frac": 0.5}, "log_every": 50})";
    char base_text[512], inst_text[512];
    std::snprintf(base_text, sizeof(base_text), tmpl, "deva_sinf");
    std::snprintf(inst_text, sizeof(inst_text), tmpl, "deva_sinf_inst");
    const auto base = run_single(parse_config(base_text), 50);
    const auto inst = run_single(parse_config(inst_text), 50);
    REQUIRE(base.size() == inst.size());
    bool differs = false;
    for (size_t i = 0; i < base.size(); ++i) differs |= base[i].loss != inst[i].loss;
    CHECK(differs);  // with beta1 > 0 the second moments track different norms

    const Summary sb = run_experiment(parse_config(base_text));
    const Summary si = run_experiment(parse_config(inst_text));
    const RunConfig gd_cfg = parse_config(R"({
      "problem": {"kind": "trace_quadratic_het"},
      "optimizer": {"kind": "gd", "lr": 0.0002},
      "steps": 2000, "seeds": {"start": 50, "count": 5},
      "schedule": {"kind": "constant"}, "log_every": 50})");
    const Summary sg = run_experiment(gd_cfg);
    CHECK(sb.median_final_loss() < sg.median_final_loss());
    CHECK(si.median_final_loss() < sg.median_final_loss());
}

TEST_CASE("quantile helper matches hand values") {
    std::vector<double> v = {4.0, 1.0, 3.0, 2.0};
    CHECK(quantile(v, 0.5) == doctest::Approx(2.5).epsilon(1e-15));
    CHECK(quantile(v, 0.0) == 1.0);
    CHECK(quantile(v, 1.0) == 4.0);
    CHECK(quantile(v, 0.25) == doctest::Approx(1.75).epsilon(1e-15));
    CHECK_THROWS_AS(quantile({}, 0.5), InvalidInput);
}
