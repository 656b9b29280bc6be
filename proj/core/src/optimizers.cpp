#include "deva/optimizers.hpp"

#include <cmath>

#include "deva/factorize.hpp"

namespace deva {

const char* optimizer_name(OptimizerKind kind) {
    switch (kind) {
        case OptimizerKind::gd: return "gd";
        case OptimizerKind::signum: return "signum";
        case OptimizerKind::adam: return "adam";
        case OptimizerKind::deva_linf: return "deva_linf";
        case OptimizerKind::muon: return "muon";
        case OptimizerKind::soap: return "soap";
        case OptimizerKind::deva_sinf: return "deva_sinf";
        case OptimizerKind::deva_sinf_eff: return "deva_sinf_eff";
        case OptimizerKind::deva_sinf_inst: return "deva_sinf_inst";
    }
    return "unknown";
}

OptimizerKind optimizer_from_name(const std::string& name) {
    for (OptimizerKind k :
         {OptimizerKind::gd, OptimizerKind::signum, OptimizerKind::adam, OptimizerKind::deva_linf,
          OptimizerKind::muon, OptimizerKind::soap, OptimizerKind::deva_sinf,
          OptimizerKind::deva_sinf_eff, OptimizerKind::deva_sinf_inst}) {
        if (name == optimizer_name(k)) return k;
    }
    throw InvalidConfig("unknown optimizer: " + name);
}

bool is_matrix_optimizer(OptimizerKind kind) {
    switch (kind) {
        case OptimizerKind::muon:
        case OptimizerKind::soap:
        case OptimizerKind::deva_sinf:
        case OptimizerKind::deva_sinf_eff:
        case OptimizerKind::deva_sinf_inst: return true;
        default: return false;
    }
}

HyperParams default_hyperparams(OptimizerKind kind) {
    HyperParams hp;
    if (is_matrix_optimizer(kind)) {
        hp.beta1 = 0.95;
        hp.beta2 = 0.95;
        hp.beta3 = 0.95;
    }
    if (kind == OptimizerKind::adam) hp.bias_correction = true;
    return hp;
}

void validate_hyperparams(const HyperParams& hp) {
    if (!(hp.lr > 0.0)) throw InvalidConfig("lr must be > 0");
    for (double b : {hp.beta1, hp.beta2, hp.beta3})
        if (!(b >= 0.0 && b < 1.0)) throw InvalidConfig("betas must lie in [0, 1)");
    if (!(hp.eps >= 0.0)) throw InvalidConfig("eps must be >= 0");
    if (!(hp.weight_decay >= 0.0)) throw InvalidConfig("weight_decay must be >= 0");
    if (hp.freq < 1) throw InvalidConfig("freq must be >= 1");
    if (hp.ns_iters < 1) throw InvalidConfig("ns_iters must be >= 1");
}

double schedule_lr(long t, long total, double warmup_frac, double base_lr) {
    if (total == 0) throw InvalidConfig("schedule_lr: total steps is zero");
    if (t < 1 || t > total) throw InvalidConfig("schedule_lr: step out of range");
    const double warm = warmup_frac * static_cast<double>(total);
    if (static_cast<double>(t) <= warm) return base_lr;
    const long warm_steps = static_cast<long>(std::ceil(warm));
    return base_lr * static_cast<double>(total - t) / static_cast<double>(total - warm_steps);
}

// ---------------------------------------------------------------------------

namespace {

double sign_of(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

void apply_weight_decay(DenseMatrix& x, const HyperParams& hp) {
    if (hp.weight_decay <= 0.0) return;
    const double shrink = 1.0 - hp.lr * hp.weight_decay;
    for (double& v : x.flat()) v *= shrink;
}

// Adaptive weight with the division guard: dead coordinates (denominator at
// or below eps with zero numerator) get weight 0 instead of 0/0.
double guarded_gamma(double numerator, double denominator, double eps) {
    if (denominator <= eps && numerator == 0.0) return 0.0;
    return std::sqrt((numerator + eps) / denominator);
}

void ema_update(DenseMatrix& acc, const DenseMatrix& x, double beta) {
    scale_add(acc, beta, x, 1.0 - beta);
}

DenseMatrix nesterov_blend(const DenseMatrix& m, const DenseMatrix& g, const HyperParams& hp) {
    DenseMatrix a = m;
    scale_add(a, hp.beta1, g, 1.0 - hp.beta1);
    return a;
}

template <typename State>
void refresh_impl(State& st) {
    if (st.t % st.freq != 0) return;
    if (!st.has_basis) {
        st.Q_L = sym_eig(st.L).vectors;
        st.Q_R = sym_eig(st.R).vectors;
        st.has_basis = true;
        return;
    }
    try {
        st.Q_L = qr_orthonormalize(matmul(st.L, st.Q_L));
        st.Q_R = qr_orthonormalize(matmul(st.R, st.Q_R));
    } catch (const DegenerateBasis&) {
        ++st.degenerate_refreshes;  // keep previous basis
    }
}

template <typename State>
void update_factors_and_rotate(State& st, const DenseMatrix& g, const HyperParams& hp,
                               DenseMatrix& rotated) {
    ema_update(st.L, matmul_nt(g, g), hp.beta3);
    ema_update(st.R, matmul_tn(g, g), hp.beta3);
    refresh_eigenbases(st);
    rotated = matmul(matmul_tn(st.Q_L, g), st.Q_R);
}

void check_matrix_shapes(const DenseMatrix& x, const DenseMatrix& g) {
    require_same_shape(x, g, "matrix step: parameter/gradient shape mismatch");
    if (x.rows() < 2 || x.cols() < 2)
        throw ShapeMismatch("matrix optimizers require both dimensions >= 2; route vectors to a vector optimizer");
}

}  // namespace

VectorOptState make_vector_state(int rows, int cols) {
    VectorOptState st;
    st.m = DenseMatrix(rows, cols);
    st.v = DenseMatrix(rows, cols);
    st.last_gamma = DenseMatrix(rows, cols);
    return st;
}

MuonState make_muon_state(int rows, int cols) {
    MuonState st;
    st.m = DenseMatrix(rows, cols);
    return st;
}

MatrixOptState make_matrix_state(int n, int m, int freq) {
    MatrixOptState st;
    st.L = DenseMatrix(n, n);
    st.R = DenseMatrix(m, m);
    st.Q_L = DenseMatrix::identity(n);
    st.Q_R = DenseMatrix::identity(m);
    st.M = DenseMatrix(n, m);
    st.V = DenseMatrix(n, m);
    st.freq = freq;
    st.last_gamma = DenseMatrix(n, m);
    return st;
}

EffMatrixOptState make_eff_matrix_state(int n, int m, int freq) {
    EffMatrixOptState st;
    st.L = DenseMatrix(n, n);
    st.R = DenseMatrix(m, m);
    st.Q_L = DenseMatrix::identity(n);
    st.Q_R = DenseMatrix::identity(m);
    st.M = DenseMatrix(n, m);
    st.V_r.assign(n, 0.0);
    st.V_c.assign(m, 0.0);
    st.freq = freq;
    st.last_gamma = DenseMatrix(n, m);
    return st;
}

void gd_step(DenseMatrix& x, const DenseMatrix& g, const HyperParams& hp) {
    require_same_shape(x, g, "gd_step: shape mismatch");
    apply_weight_decay(x, hp);
    for (size_t i = 0; i < x.size(); ++i) x.data()[i] -= hp.lr * g.data()[i];
}

void signum_step(VectorOptState& st, DenseMatrix& x, const DenseMatrix& g, const HyperParams& hp) {
    require_same_shape(x, g, "signum_step: shape mismatch");
    require_same_shape(st.m, g, "signum_step: state shape mismatch");
    apply_weight_decay(x, hp);
    ++st.t;
    ema_update(st.m, g, hp.beta1);
    const DenseMatrix arg = hp.nesterov ? nesterov_blend(st.m, g, hp) : st.m;
    for (size_t i = 0; i < x.size(); ++i) x.data()[i] -= hp.lr * sign_of(arg.data()[i]);
    for (double& w : st.last_gamma.flat()) w = 1.0;
}

void adam_step(VectorOptState& st, DenseMatrix& x, const DenseMatrix& g, const HyperParams& hp) {
    require_same_shape(x, g, "adam_step: shape mismatch");
    require_same_shape(st.m, g, "adam_step: state shape mismatch");
    apply_weight_decay(x, hp);
    ++st.t;
    ema_update(st.m, g, hp.beta1);
    for (size_t i = 0; i < g.size(); ++i) {
        const double gi = g.data()[i];
        st.v.data()[i] = hp.beta2 * st.v.data()[i] + (1.0 - hp.beta2) * gi * gi;
    }
    double mc = 1.0, vc = 1.0;
    if (hp.bias_correction) {
        mc = 1.0 - std::pow(hp.beta1, static_cast<double>(st.t));
        vc = 1.0 - std::pow(hp.beta2, static_cast<double>(st.t));
    }
    for (size_t i = 0; i < x.size(); ++i) {
        const double mh = st.m.data()[i] / mc;
        const double vh = st.v.data()[i] / vc;
        if (mh != 0.0) x.data()[i] -= hp.lr * mh / (std::sqrt(vh) + hp.eps);
        const double gi = g.data()[i];
        st.last_gamma.data()[i] = guarded_gamma(gi * gi, vh, hp.eps);
    }
}

void deva_linf_step(VectorOptState& st, DenseMatrix& x, const DenseMatrix& g, const HyperParams& hp) {
    require_same_shape(x, g, "deva_linf_step: shape mismatch");
    require_same_shape(st.m, g, "deva_linf_step: state shape mismatch");
    apply_weight_decay(x, hp);
    ++st.t;
    ema_update(st.m, g, hp.beta1);
    for (size_t i = 0; i < g.size(); ++i) {
        const double mi = st.m.data()[i];
        st.v.data()[i] = hp.beta2 * st.v.data()[i] + (1.0 - hp.beta2) * mi * mi;
    }
    for (size_t i = 0; i < x.size(); ++i) {
        const double mi = st.m.data()[i];
        const double dir = hp.nesterov
                               ? sign_of(hp.beta1 * mi + (1.0 - hp.beta1) * g.data()[i])
                               : sign_of(mi);
        const double gamma = guarded_gamma(mi * mi, st.v.data()[i], hp.eps);
        st.last_gamma.data()[i] = gamma;
        x.data()[i] -= hp.lr * gamma * dir;
    }
}

void muon_step(MuonState& st, DenseMatrix& x, const DenseMatrix& g, const HyperParams& hp) {
    check_matrix_shapes(x, g);
    require_same_shape(st.m, g, "muon_step: state shape mismatch");
    apply_weight_decay(x, hp);
    ++st.t;
    ema_update(st.m, g, hp.beta1);
    const DenseMatrix direction =
        msign_newton_schulz(hp.nesterov ? nesterov_blend(st.m, g, hp) : st.m, hp.ns_iters);
    const double scale = hp.lr * rms_alignment_scale(x.rows(), x.cols());
    for (size_t i = 0; i < x.size(); ++i) x.data()[i] -= scale * direction.data()[i];
    if (!is_finite(x)) throw NumericalBreakdown(st.t, "muon_step produced non-finite iterate");
}

void refresh_eigenbases(MatrixOptState& st) { refresh_impl(st); }
void refresh_eigenbases(EffMatrixOptState& st) { refresh_impl(st); }

void soap_lite_step(MatrixOptState& st, DenseMatrix& x, const DenseMatrix& g, const HyperParams& hp) {
    check_matrix_shapes(x, g);
    apply_weight_decay(x, hp);
    ++st.t;
    DenseMatrix rotated;
    update_factors_and_rotate(st, g, hp, rotated);
    ema_update(st.M, rotated, hp.beta1);
    for (size_t i = 0; i < rotated.size(); ++i) {
        const double ri = rotated.data()[i];
        st.V.data()[i] = hp.beta2 * st.V.data()[i] + (1.0 - hp.beta2) * ri * ri;
    }
    double mc = 1.0, vc = 1.0;
    if (hp.bias_correction) {
        mc = 1.0 - std::pow(hp.beta1, static_cast<double>(st.t));
        vc = 1.0 - std::pow(hp.beta2, static_cast<double>(st.t));
    }
    DenseMatrix update(x.rows(), x.cols());
    for (size_t i = 0; i < update.size(); ++i) {
        const double mh = st.M.data()[i] / mc;
        const double vh = st.V.data()[i] / vc;
        update.data()[i] = mh == 0.0 ? 0.0 : mh / (std::sqrt(vh) + hp.eps);
        const double ri = rotated.data()[i];
        st.last_gamma.data()[i] = guarded_gamma(ri * ri, vh, hp.eps);
    }
    const DenseMatrix back = matmul(matmul(st.Q_L, update), transpose(st.Q_R));
    for (size_t i = 0; i < x.size(); ++i) x.data()[i] -= hp.lr * back.data()[i];
    if (!is_finite(x)) throw NumericalBreakdown(st.t, "soap_lite_step produced non-finite iterate");
}

namespace {

// Shared spectral pipeline for the three deva_sinf variants. norm_source is
// the matrix whose row/column norms feed the second moment (M for the base
// and memory-efficient variants, the rotated sample gradient for the
// instantaneous variant).
template <typename State, typename SecondMoment>
void deva_sinf_core(State& st, DenseMatrix& x, const DenseMatrix& g, const HyperParams& hp,
                    bool norms_from_sample, SecondMoment&& second_moment, const char* who) {
    check_matrix_shapes(x, g);
    apply_weight_decay(x, hp);
    ++st.t;
    DenseMatrix rotated;
    update_factors_and_rotate(st, g, hp, rotated);
    ema_update(st.M, rotated, hp.beta1);

    const DenseMatrix& norm_source = norms_from_sample ? rotated : st.M;
    const std::vector<double> r = row_norms(norm_source);
    const std::vector<double> c = col_norms(norm_source);

    // second_moment fills gamma with the guarded adaptive weights
    second_moment(r, c, st.last_gamma);

    const DenseMatrix direction =
        msign_newton_schulz(hp.nesterov ? nesterov_blend(st.M, rotated, hp) : st.M, hp.ns_iters);
    DenseMatrix update = hadamard(st.last_gamma, direction);
    update = matmul(matmul(st.Q_L, update), transpose(st.Q_R));
    const double scale = hp.lr * rms_alignment_scale(x.rows(), x.cols());
    for (size_t i = 0; i < x.size(); ++i) x.data()[i] -= scale * update.data()[i];
    if (!is_finite(x)) throw NumericalBreakdown(st.t, std::string(who) + " produced non-finite iterate");
}

}  // namespace

void deva_sinf_step(MatrixOptState& st, DenseMatrix& x, const DenseMatrix& g, const HyperParams& hp) {
    deva_sinf_core(
        st, x, g, hp, /*norms_from_sample=*/false,
        [&](const std::vector<double>& r, const std::vector<double>& c, DenseMatrix& gamma) {
            const int n = st.V.rows(), m = st.V.cols();
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < m; ++j) {
                    const double rc = r[i] * c[j];
                    st.V(i, j) = hp.beta2 * st.V(i, j) + (1.0 - hp.beta2) * rc;
                    gamma(i, j) = guarded_gamma(rc, st.V(i, j), hp.eps);
                }
        },
        "deva_sinf_step");
}

void deva_sinf_eff_step(EffMatrixOptState& st, DenseMatrix& x, const DenseMatrix& g,
                        const HyperParams& hp) {
    deva_sinf_core(
        st, x, g, hp, /*norms_from_sample=*/false,
        [&](const std::vector<double>& r, const std::vector<double>& c, DenseMatrix& gamma) {
            const int n = static_cast<int>(st.V_r.size()), m = static_cast<int>(st.V_c.size());
            for (int i = 0; i < n; ++i) st.V_r[i] = hp.beta2 * st.V_r[i] + (1.0 - hp.beta2) * r[i];
            for (int j = 0; j < m; ++j) st.V_c[j] = hp.beta2 * st.V_c[j] + (1.0 - hp.beta2) * c[j];
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < m; ++j)
                    gamma(i, j) = guarded_gamma(r[i] * c[j], st.V_r[i] * st.V_c[j], hp.eps);
        },
        "deva_sinf_eff_step");
}

void deva_sinf_inst_step(MatrixOptState& st, DenseMatrix& x, const DenseMatrix& g,
                         const HyperParams& hp) {
    deva_sinf_core(
        st, x, g, hp, /*norms_from_sample=*/true,
        [&](const std::vector<double>& r, const std::vector<double>& c, DenseMatrix& gamma) {
            const int n = st.V.rows(), m = st.V.cols();
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < m; ++j) {
                    const double rc = r[i] * c[j];
                    st.V(i, j) = hp.beta2 * st.V(i, j) + (1.0 - hp.beta2) * rc;
                    gamma(i, j) = guarded_gamma(rc, st.V(i, j), hp.eps);
                }
        },
        "deva_sinf_inst_step");
}

}  // namespace deva
