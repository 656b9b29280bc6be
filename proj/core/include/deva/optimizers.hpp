#pragma once

#include <string>

#include "deva/matrix.hpp"
#include "deva/msign.hpp"

namespace deva {

enum class OptimizerKind {
    gd,
    signum,
    adam,
    deva_linf,
    muon,
    soap,
    deva_sinf,
    deva_sinf_eff,
    deva_sinf_inst,
};

const char* optimizer_name(OptimizerKind kind);
OptimizerKind optimizer_from_name(const std::string& name);
bool is_matrix_optimizer(OptimizerKind kind);

struct HyperParams {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double beta3 = 0.95;
    double eps = 1e-8;
    double weight_decay = 0.0;
    int freq = 10;
    bool nesterov = false;
    int ns_iters = 5;
    bool bias_correction = false;
};

/// Per-kind defaults: Adam gets bias correction, matrix methods get
/// beta1 = beta2 = beta3 = 0.95.
HyperParams default_hyperparams(OptimizerKind kind);

/// Throws InvalidConfig on out-of-range fields.
void validate_hyperparams(const HyperParams& hp);

/// Constant base_lr through the warmup fraction of total steps, then linear
/// decay to zero at t = total. Throws InvalidConfig when total == 0.
double schedule_lr(long t, long total, double warmup_frac, double base_lr);

// ---------------------------------------------------------------------------
// Optimizer state. Each state is single-owner mutable; shapes are fixed at
// construction and must match the parameter.
// ---------------------------------------------------------------------------

struct VectorOptState {
    DenseMatrix m;  // first moment
    DenseMatrix v;  // second moment, entrywise >= 0
    long t = 0;
    DenseMatrix last_gamma;  // adaptive weights of the most recent step
};
VectorOptState make_vector_state(int rows, int cols);

struct MuonState {
    DenseMatrix m;
    long t = 0;
};
MuonState make_muon_state(int rows, int cols);

struct MatrixOptState {
    DenseMatrix L, R;      // Kronecker factor EMAs (n x n, m x m)
    DenseMatrix Q_L, Q_R;  // eigenbases, identity until the first refresh
    DenseMatrix M;         // rotated-gradient EMA
    DenseMatrix V;         // second moment, entrywise >= 0
    long t = 0;
    int freq = 10;
    bool has_basis = false;
    long degenerate_refreshes = 0;  // power-QR refreshes skipped as rank-deficient
    DenseMatrix last_gamma;
};
MatrixOptState make_matrix_state(int n, int m, int freq);

/// Memory-efficient variant: the n x m second moment is replaced by
/// factor vectors of length n and m.
struct EffMatrixOptState {
    DenseMatrix L, R;
    DenseMatrix Q_L, Q_R;
    DenseMatrix M;
    std::vector<double> V_r, V_c;
    long t = 0;
    int freq = 10;
    bool has_basis = false;
    long degenerate_refreshes = 0;
    DenseMatrix last_gamma;
};
EffMatrixOptState make_eff_matrix_state(int n, int m, int freq);

// ---------------------------------------------------------------------------
// Steps. All apply decoupled weight decay (x <- x*(1 - lr*wd)) before the
// gradient direction when weight_decay > 0, and update x in place.
// ---------------------------------------------------------------------------

void gd_step(DenseMatrix& x, const DenseMatrix& g, const HyperParams& hp);

void signum_step(VectorOptState& st, DenseMatrix& x, const DenseMatrix& g, const HyperParams& hp);

void adam_step(VectorOptState& st, DenseMatrix& x, const DenseMatrix& g, const HyperParams& hp);

/// Algorithm-1 style update: the second moment tracks m_t^2 (the EMA square),
/// not g_t^2, and the step is gamma .* sign(m) with
/// gamma = sqrt((m^2 + eps) / v). Dead coordinates (v <= eps and m == 0) get
/// weight 0.
void deva_linf_step(VectorOptState& st, DenseMatrix& x, const DenseMatrix& g, const HyperParams& hp);

void muon_step(MuonState& st, DenseMatrix& x, const DenseMatrix& g, const HyperParams& hp);

/// Refresh on steps where t mod freq == 0: full sym_eig the first time,
/// one power-iteration + QR step afterwards. A rank-deficient power step
/// keeps the previous basis and bumps degenerate_refreshes.
void refresh_eigenbases(MatrixOptState& st);
void refresh_eigenbases(EffMatrixOptState& st);

/// Adam in the rotated eigenbasis (SOAP without its extra moments).
void soap_lite_step(MatrixOptState& st, DenseMatrix& x, const DenseMatrix& g, const HyperParams& hp);

/// Spectral decoupled-variance update: second moment tracks the outer product
/// of row/column norms of the rotated first moment, the direction is the
/// Newton-Schulz polar factor, and the update is rotated back through the
/// eigenbases and scaled by rms_alignment_scale.
void deva_sinf_step(MatrixOptState& st, DenseMatrix& x, const DenseMatrix& g, const HyperParams& hp);

/// As deva_sinf_step, with the second moment factored into V_r, V_c.
void deva_sinf_eff_step(EffMatrixOptState& st, DenseMatrix& x, const DenseMatrix& g, const HyperParams& hp);

/// As deva_sinf_step, with r, c computed from the current rotated sample
/// gradient instead of the first-moment EMA.
void deva_sinf_inst_step(MatrixOptState& st, DenseMatrix& x, const DenseMatrix& g, const HyperParams& hp);

}  // namespace deva
