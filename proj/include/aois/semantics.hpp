#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include "aois/rng.hpp"
#include "aois/types.hpp"

namespace aois {

/// Linear stand-in for the semantic encoder/decoder/task chain.
/// enc has orthonormal columns (Haar section), dec is its pseudoinverse,
/// so full-length noiseless decoding is exact and truncation to L < max_len
/// is strictly lossy.
struct SemanticModel {
    CMat enc;         // max_len x feature_dim
    CMat dec;         // feature_dim x max_len, pinv(enc)
    Mat task;         // task_dim x feature_dim
    Vec power_scale;  // s_L for L = 1..max_len; E||s_L * enc_L z||^2 = L

    int feature_dim() const { return static_cast<int>(enc.cols()); }
    int max_len() const { return static_cast<int>(enc.rows()); }
    int task_dim() const { return static_cast<int>(task.rows()); }

    static SemanticModel make(int feature_dim, int max_len, int task_dim, uint64_t seed);

    /// Exact-matrix CSV fixture (header + one row per entry).
    void save_csv(std::ostream& out) const;
    static SemanticModel load_csv(std::istream& in);
};

/// Autoregressive Gaussian feature source with stationary N(0, I) marginals:
/// z(t+1) = rho z(t) + sqrt(1 - rho^2) w(t).
class SemanticSource {
  public:
    SemanticSource(int dim, double rho, uint64_t seed);

    const Vec& current() const { return z_; }
    void advance();

  private:
    double rho_;
    Vec z_;
    Rng rng_;
};

/// First L rows of enc applied to z, power-normalized so that the
/// per-symbol average power is 1 under the source distribution.
CVec encode(const SemanticModel& m, const Vec& z, int length);

/// First L columns of dec applied to x_hat (normalization undone); the
/// recovered feature is the real part.
Vec decode(const SemanticModel& m, const CVec& x_hat, int length);

/// Cosine similarity of the task-map outputs; in [-1, 1].
/// Throws std::domain_error when either task output has zero norm.
double similarity(const SemanticModel& m, const Vec& z, const Vec& z_hat);

/// One user's downlink view for mismatch estimation: its own channel and
/// combiner plus every transmitting user's precoder and symbol stream.
/// Symbols are serialized over ceil(L_j / streams) channel uses; the
/// receiver keeps the first `streams` outputs of U^H y per use.
struct LinkInstance {
    CMat h;               // serving user's channel, N_r x N_t
    double sigma2 = 1.0;  // receiver noise variance
    std::vector<CMat> V;  // transmit beamformers, N_t x streams each
    std::vector<CVec> x;  // transmitted symbol vectors (empty = silent)
    int self = 0;         // index of the serving user within V/x
    CMat U;               // receive beamformer, N_r x N_r

    int streams() const { return static_cast<int>(V[self].cols()); }
    int length() const { return static_cast<int>(x[self].size()); }
    int channel_uses() const;
};

enum class GradWrt { kNone, kV, kU, kBoth };

/// Monte Carlo estimate of g = 1 - E[Sim] with optional analytic gradients.
/// Gradients use the packing G = dg/dRe(W) + i dg/dIm(W), i.e.
/// dg = Re tr(G^H dW) to first order.
struct MismatchEstimate {
    double g = 0.0;        // clamped to [0, 1]
    double g_raw = 0.0;    // unclamped, in [0, 2]
    double std_error = 0.0;
    int samples = 0;
    std::vector<CMat> grad_v;  // one per user in LinkInstance::V (empty unless requested)
    CMat grad_u;               // w.r.t. the serving user's U (empty unless requested)
};

/// Unit-variance CN(0,1) draws, rows x cols, consumed column-major.
CMat draw_unit_noise(int rows, int cols, Rng& rng);

/// Deterministic core: `noise` holds M blocks of N_r x channel_uses unit
/// draws side by side (N_r x (channel_uses * M)). Common random numbers
/// across compared candidates are achieved by reusing the same matrix.
MismatchEstimate estimate_g(const SemanticModel& m, const Vec& z_true, const LinkInstance& link,
                            const CMat& noise, GradWrt wrt = GradWrt::kNone);

/// Convenience wrapper that draws M fresh noise blocks from `rng`.
MismatchEstimate estimate_g(const SemanticModel& m, const Vec& z_true, const LinkInstance& link,
                            int samples, Rng& rng, GradWrt wrt = GradWrt::kNone);

/// Gradient of the Monte Carlo estimate under the given noise draws,
/// with respect to the transmit and/or receive beamformers.
inline MismatchEstimate grad_g(const SemanticModel& m, const Vec& z_true, const LinkInstance& link,
                               const CMat& noise, GradWrt wrt = GradWrt::kBoth) {
    return estimate_g(m, z_true, link, noise, wrt);
}

/// Noiseless reception of the serving user's feature (used for warm starts).
Vec decode_noiseless(const SemanticModel& m, const LinkInstance& link);

/// Reception under one concrete noise realization (N_r x channel_uses, unit
/// variance; scaled by sqrt(sigma2) internally).
Vec decode_realization(const SemanticModel& m, const LinkInstance& link, const CMat& noise);

}  // namespace aois
