#pragma once

#include <vector>

#include "aois/beamformer.hpp"
#include "aois/qcqp.hpp"
#include "aois/semantics.hpp"
#include "aois/types.hpp"

namespace aois {

/// Expansion-point matrices of the log-det minorizer (natural-log units).
struct SurrogateCoefficients {
    CMat F1, F2, F3, F4, X0, Y0;
    double const_term = 0.0;  // log det F4 - tr(X0^H Y0^-1 X0)
};

/// Natural-log lower bound on log det(I + X^H Y^-1 X), tight at (X0, Y0).
/// Y and Y0 must be Hermitian positive definite.
double logdet_lower_bound(const CMat& x, const CMat& y, const CMat& x0, const CMat& y0);

SurrogateCoefficients logdet_minorizer(const CMat& x0, const CMat& y0);

/// Base-2 affine-quadratic minorizer of one user's rate,
///   R~(W) = offset + Re tr(lin^H W_self) - sum_m tr(W_m^H left_m W_m right_m),
/// expressed in the QuadConstraint layout so subproblem solvers can consume
/// it directly.
struct RateSurrogate {
    QuadConstraint form;        // floor left unset; value() evaluates R~ in bps/Hz
    SurrogateCoefficients coef;
    int self = 0;

    double value(const std::vector<CMat>& w) const { return form.value(w); }
};

/// Minorizer in the transmit matrices {V_m} at expansion point v_now,
/// receiver fixed.
RateSurrogate build_surrogate_rate(const CMat& h, const std::vector<CMat>& v_now, const CMat& u,
                                   double sigma2, int self);

/// Minorizer in the receive matrix U_self at expansion point u_now,
/// transmitters fixed.
RateSurrogate build_surrogate_rate_u(const CMat& h, const std::vector<CMat>& v, const CMat& u_now,
                                     double sigma2, int self);

/// Solves problem: min sum_m Re tr(C_m^H V_m)
///   s.t. sum ||V_m||^2 <= p_max, R~_i(V) >= rate_floor_i.
/// Warm-started at v_now; throws InfeasibleError naming the violating user
/// when no feasible point is found.
std::vector<CMat> solve_v_subproblem(const std::vector<CMat>& objective_grad,
                                     const std::vector<RateSurrogate>& surrogates, double p_max,
                                     const Vec& rate_floors, const std::vector<CMat>& v_now,
                                     const QcqpOptions& opt = {});

/// Receiver counterpart: no power ball, one independent problem per user
/// (a trust ball keeps the linear objective bounded; radius is generous and
/// reported inactive in normal operation).
std::vector<CMat> solve_u_subproblem(const std::vector<CMat>& objective_grad_u,
                                     const std::vector<RateSurrogate>& surrogates_u, const Vec& rate_floors,
                                     const std::vector<CMat>& u_now, double trust_radius = 1e3,
                                     const QcqpOptions& opt = {});

/// One slot's inputs for the SCA transceiver design over the transmitting
/// users. Noise blocks are the common random numbers shared by every
/// iteration of the slot.
struct ScaContext {
    const SemanticModel* model = nullptr;
    std::vector<Vec> z;         // true features, one per tx user
    std::vector<CMat> h;        // channels, N_r x N_t
    Vec sigma2;
    Vec weights;                // exp(b (t - epsilon_i))
    std::vector<int> lengths;   // L_i
    double p_max = 1.0;
    double bandwidth_hz = 1.0;
    double t_max_s = 1.0;
    std::vector<CMat> noise;    // per user: N_r x (uses_i * M)

    int num_users() const { return static_cast<int>(z.size()); }
};

struct ScaOptions {
    double gamma0 = 1.0;     // step schedule gamma0 / (1 + n)
    int max_iters = 40;
    double tol_obj = 1e-5;
    double u_trust_radius = 1e3;
    QcqpOptions qcqp;
};

struct ScaTraceRow {
    int iter;
    double objective;
    double power;
    Vec r_tilde;  // surrogate rates at the iterate
    Vec r_true;   // exact rates at the iterate
};

struct ScaResult {
    BeamformerSet bf;
    std::vector<ScaTraceRow> trace;
    double objective = 0.0;
    bool converged = false;
};

/// Drift-plus-penalty transceiver objective sum_i weights_i g_i under the
/// context's common random numbers.
double sca_objective(const ScaContext& ctx, const BeamformerSet& bf);

/// Diminishing-step SCA outer loop (surrogate build, convex subproblem,
/// convex-combination update, V then U).
ScaResult sca_optimize(const ScaContext& ctx, BeamformerSet init, const ScaOptions& opt = {});

/// One iterate update, exposed for step-level tests.
BeamformerSet sca_iterate(const ScaContext& ctx, const BeamformerSet& current, double gamma,
                          const ScaOptions& opt = {});

}  // namespace aois
