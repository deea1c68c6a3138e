#include "aois/rate.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>

namespace aois {

namespace {

// log2 det of a Hermitian positive definite matrix via Cholesky.
// The PD tolerance is relative to the trace: eigenvalues above
// -1e-10 * trace(A) are treated as rounding noise.
double logdet2_hpd(const CMat& a_raw, const char* what) {
    CMat a = 0.5 * (a_raw + a_raw.adjoint());
    Eigen::LLT<CMat> llt(a);
    if (llt.info() == Eigen::Success) {
        double acc = 0.0;
        const auto& l = llt.matrixLLT();
        for (Eigen::Index i = 0; i < a.rows(); ++i) acc += std::log2(l(i, i).real());
        return 2.0 * acc;
    }
    Eigen::SelfAdjointEigenSolver<CMat> es(a, Eigen::EigenvaluesOnly);
    const double tol = -1e-10 * std::abs(a.trace().real());
    const double lo = es.eigenvalues().minCoeff();
    if (lo <= tol) {
        std::ostringstream msg;
        msg << what << ": matrix not positive definite (min eigenvalue " << lo << ", trace "
            << a.trace().real() << ", condition " << es.eigenvalues().maxCoeff() / std::abs(lo) << ")";
        throw NumericalError(msg.str());
    }
    double acc = 0.0;
    for (Eigen::Index i = 0; i < a.rows(); ++i) acc += std::log2(std::max(es.eigenvalues()[i], 1e-300));
    return acc;
}

}  // namespace

double mimo_rate(const CMat& h, const std::vector<CMat>& V, int self, const CMat& U, double sigma2) {
    const Eigen::Index n_rx = h.rows();
    if (U.rows() != n_rx || U.cols() != n_rx) throw std::invalid_argument("mimo_rate: U must be N_r x N_r");
    if (self < 0 || self >= static_cast<int>(V.size())) throw std::invalid_argument("mimo_rate: bad user index");

    CMat interference = sigma2 * CMat::Identity(n_rx, n_rx);
    for (int j = 0; j < static_cast<int>(V.size()); ++j) {
        if (j == self || V[j].size() == 0) continue;
        const CMat g = U.adjoint() * h * V[j];
        interference += g * g.adjoint();
    }
    const CMat x = U.adjoint() * h * V[self];
    const CMat total = interference + x * x.adjoint();
    // det(I + S B^-1) = det(B + S) / det(B)
    return logdet2_hpd(total, "mimo_rate") - logdet2_hpd(interference, "mimo_rate");
}

double miso_rate(const CVec& h, const std::vector<CVec>& v, int self, double sigma2) {
    if (self < 0 || self >= static_cast<int>(v.size())) throw std::invalid_argument("miso_rate: bad user index");
    double denom = sigma2;
    for (int j = 0; j < static_cast<int>(v.size()); ++j) {
        if (j == self || v[j].size() == 0) continue;
        denom += std::norm(h.dot(v[j]));
    }
    const double signal = std::norm(h.dot(v[self]));
    return std::log2(1.0 + signal / denom);
}

double transmission_delay(double symbols, double bandwidth_hz, double rate_bps_hz) {
    if (symbols < 0.0 || !(bandwidth_hz > 0.0) || rate_bps_hz < 0.0)
        throw std::invalid_argument("transmission_delay: bad arguments");
    if (symbols == 0.0) return 0.0;
    if (rate_bps_hz == 0.0) return kInfiniteDelay;
    return symbols / (bandwidth_hz * rate_bps_hz);
}

RateReport make_rate_report(const Vec& rates_bps_hz, const std::vector<int>& lengths, double bandwidth_hz,
                            double t_max_s) {
    const Eigen::Index users = rates_bps_hz.size();
    if (static_cast<Eigen::Index>(lengths.size()) != users)
        throw std::invalid_argument("make_rate_report: length/rate size mismatch");
    RateReport rep;
    rep.rate_bps_hz = rates_bps_hz;
    rep.delay_s = Vec::Zero(users);
    rep.feasible.resize(users);
    for (Eigen::Index i = 0; i < users; ++i) {
        rep.delay_s[i] = transmission_delay(lengths[i], bandwidth_hz, rates_bps_hz[i]);
        rep.feasible[i] = rep.delay_s[i] <= t_max_s;
    }
    return rep;
}

}  // namespace aois
