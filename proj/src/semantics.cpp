#include "aois/semantics.hpp"

#include <Eigen/QR>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace aois {

namespace {

// Compensated accumulator; keeps estimate_g independent of reduction order
// at double precision.
struct KahanSum {
    double sum = 0.0, carry = 0.0;
    void add(double v) {
        const double y = v - carry;
        const double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
};

CMat haar_columns(int rows, int cols, Rng& rng) {
    CMat g(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) g(r, c) = rng.cgaussian();
    Eigen::HouseholderQR<CMat> qr(g);
    CMat q = qr.householderQ() * CMat::Identity(rows, cols);
    // Fix the column phases so the factorization is unique.
    const CMat r = qr.matrixQR().topRows(cols).triangularView<Eigen::Upper>();
    for (int c = 0; c < cols; ++c) {
        const cplx d = r(c, c);
        if (std::abs(d) > 0.0) q.col(c) *= d / std::abs(d);
    }
    return q;
}

}  // namespace

SemanticModel SemanticModel::make(int feature_dim, int max_len, int task_dim, uint64_t seed) {
    if (feature_dim < 1 || task_dim < 1) throw ConfigError("SemanticModel: dimensions must be >= 1");
    if (max_len < feature_dim)
        throw ConfigError("SemanticModel: max_len must be >= feature_dim for exact full-length decoding");
    Rng rng(derive_seed(seed, {kModelTag}));

    SemanticModel m;
    m.enc = haar_columns(max_len, feature_dim, rng);
    m.dec = m.enc.completeOrthogonalDecomposition().pseudoInverse();
    m.task.resize(task_dim, feature_dim);
    for (int r = 0; r < task_dim; ++r)
        for (int c = 0; c < feature_dim; ++c) m.task(r, c) = rng.gaussian();

    m.power_scale.resize(max_len);
    for (int l = 1; l <= max_len; ++l) {
        const double e = m.enc.topRows(l).squaredNorm();  // E||enc_L z||^2 for z ~ N(0, I)
        m.power_scale[l - 1] = std::sqrt(static_cast<double>(l) / e);
    }
    return m;
}

SemanticSource::SemanticSource(int dim, double rho, uint64_t seed)
    : rho_(rho), z_(dim), rng_(derive_seed(seed, {kSourceTag})) {
    if (dim < 1) throw ConfigError("SemanticSource: dim must be >= 1");
    if (rho < 0.0 || rho > 1.0) throw ConfigError("SemanticSource: rho must be in [0, 1]");
    for (int i = 0; i < dim; ++i) z_[i] = rng_.gaussian();
}

void SemanticSource::advance() {
    const double w = std::sqrt(1.0 - rho_ * rho_);
    for (Eigen::Index i = 0; i < z_.size(); ++i) z_[i] = rho_ * z_[i] + w * rng_.gaussian();
}

CVec encode(const SemanticModel& m, const Vec& z, int length) {
    if (length < 1 || length > m.max_len())
        throw ConfigError("encode: symbol length " + std::to_string(length) + " outside model capacity");
    if (z.size() != m.feature_dim()) throw std::invalid_argument("encode: feature dimension mismatch");
    return m.power_scale[length - 1] * (m.enc.topRows(length) * z.cast<cplx>());
}

Vec decode(const SemanticModel& m, const CVec& x_hat, int length) {
    if (x_hat.size() != length) throw std::invalid_argument("decode: symbol length mismatch");
    if (length < 1 || length > m.max_len()) throw ConfigError("decode: symbol length outside model capacity");
    return (m.dec.leftCols(length) * x_hat).real() / m.power_scale[length - 1];
}

double similarity(const SemanticModel& m, const Vec& z, const Vec& z_hat) {
    const Vec fz = m.task * z;
    const Vec fh = m.task * z_hat;
    const double nz = fz.norm(), nh = fh.norm();
    if (nz == 0.0 || nh == 0.0) throw std::domain_error("similarity: task output has zero norm");
    return fz.dot(fh) / (nz * nh);
}

int LinkInstance::channel_uses() const {
    const int d = streams();
    return (length() + d - 1) / d;
}

CMat draw_unit_noise(int rows, int cols, Rng& rng) {
    CMat n(rows, cols);
    for (int c = 0; c < cols; ++c)
        for (int r = 0; r < rows; ++r) n(r, c) = rng.cgaussian();
    return n;
}

namespace {

// Per-channel-use transmit chunks c_{j,k}, zero-padded to each user's
// stream count.
std::vector<std::vector<CVec>> make_chunks(const LinkInstance& link, int uses) {
    const int users = static_cast<int>(link.V.size());
    std::vector<std::vector<CVec>> chunks(users);
    for (int j = 0; j < users; ++j) {
        const int d = static_cast<int>(link.V[j].cols());
        const int lj = static_cast<int>(link.x[j].size());
        chunks[j].resize(uses, CVec::Zero(d));
        for (int k = 0; k < uses; ++k) {
            const int from = k * d;
            const int take = std::min(d, lj - from);
            for (int s = 0; s < take; ++s) chunks[j][k][s] = link.x[j][from + s];
        }
    }
    return chunks;
}

}  // namespace

Vec decode_realization(const SemanticModel& m, const LinkInstance& link, const CMat& noise) {
    const int d = link.streams();
    const int len = link.length();
    const int uses = link.channel_uses();
    if (noise.rows() != link.h.rows() || noise.cols() < uses)
        throw std::invalid_argument("decode_realization: noise shape mismatch");

    const auto chunks = make_chunks(link, uses);
    const double sd = std::sqrt(link.sigma2);
    CVec x_hat = CVec::Zero(len);
    for (int k = 0; k < uses; ++k) {
        CVec tx = CVec::Zero(link.h.cols());
        for (std::size_t j = 0; j < chunks.size(); ++j)
            if (link.x[j].size() > 0) tx += link.V[j] * chunks[j][k];
        const CVec w = link.U.adjoint() * (link.h * tx + sd * noise.col(k));
        const int take = std::min(d, len - k * d);
        x_hat.segment(k * d, take) = w.head(take);
    }
    return decode(m, x_hat, len);
}

Vec decode_noiseless(const SemanticModel& m, const LinkInstance& link) {
    return decode_realization(m, link, CMat::Zero(link.h.rows(), link.channel_uses()));
}

MismatchEstimate estimate_g(const SemanticModel& m, const Vec& z_true, const LinkInstance& link,
                            const CMat& noise, GradWrt wrt) {
    const int users = static_cast<int>(link.V.size());
    const int n_rx = static_cast<int>(link.h.rows());
    const int d = link.streams();
    const int len = link.length();
    const int uses = link.channel_uses();
    if (noise.rows() != n_rx || noise.cols() % uses != 0)
        throw std::invalid_argument("estimate_g: noise must hold whole channel-use blocks");
    const int samples = static_cast<int>(noise.cols()) / uses;

    const Vec fz = m.task * z_true;
    const double nz = fz.norm();
    if (nz == 0.0) throw std::domain_error("estimate_g: task output of the true feature has zero norm");

    const CMat dec_l = m.dec.leftCols(len) / m.power_scale[len - 1];
    const auto chunks = make_chunks(link, uses);
    const double sd = std::sqrt(link.sigma2);

    // Noise-free receive per channel use; shared by all samples.
    std::vector<CVec> y0(uses);
    for (int k = 0; k < uses; ++k) {
        CVec tx = CVec::Zero(link.h.cols());
        for (int j = 0; j < users; ++j)
            if (link.x[j].size() > 0) tx += link.V[j] * chunks[j][k];
        y0[k] = link.h * tx;
    }

    MismatchEstimate est;
    est.samples = samples;
    const bool want_v = (wrt == GradWrt::kV || wrt == GradWrt::kBoth);
    const bool want_u = (wrt == GradWrt::kU || wrt == GradWrt::kBoth);
    if (want_v) {
        est.grad_v.resize(users);
        for (int j = 0; j < users; ++j) est.grad_v[j] = CMat::Zero(link.V[j].rows(), link.V[j].cols());
    }
    if (want_u) est.grad_u = CMat::Zero(n_rx, n_rx);

    KahanSum mean_acc, sq_acc;
    CVec x_hat(len), g_x(len);
    std::vector<CVec> y_m(uses);
    for (int s = 0; s < samples; ++s) {
        for (int k = 0; k < uses; ++k) {
            y_m[k] = y0[k] + sd * noise.col(s * uses + k);
            const CVec w = link.U.adjoint() * y_m[k];
            const int take = std::min(d, len - k * d);
            x_hat.segment(k * d, take) = w.head(take);
        }
        const Vec z_hat = (dec_l * x_hat).real();
        const Vec fh = m.task * z_hat;
        const double nh = fh.norm();
        const double cos_s = (nh > 0.0) ? fz.dot(fh) / (nz * nh) : 0.0;
        mean_acc.add(cos_s);
        sq_acc.add(cos_s * cos_s);

        if ((want_v || want_u) && nh > 0.0) {
            // d cos / d f_hat, then back through task map and real part of
            // the linear decoder; -1/M is the chain factor from g.
            const Vec dcos = fz / (nz * nh) - (cos_s / (nh * nh)) * fh;
            const Vec r = (-1.0 / samples) * (m.task.transpose() * dcos);
            g_x.noalias() = dec_l.adjoint() * r.cast<cplx>();
            for (int k = 0; k < uses; ++k) {
                const int take = std::min(d, len - k * d);
                CVec gw = CVec::Zero(n_rx);
                gw.head(take) = g_x.segment(k * d, take);
                if (want_v) {
                    const CVec gy = link.U * gw;
                    const CVec ha_gy = link.h.adjoint() * gy;
                    for (int j = 0; j < users; ++j)
                        if (link.x[j].size() > 0) est.grad_v[j].noalias() += ha_gy * chunks[j][k].adjoint();
                }
                if (want_u) est.grad_u.noalias() += y_m[k] * gw.adjoint();
            }
        }
    }

    const double mean = mean_acc.sum / samples;
    est.g_raw = 1.0 - mean;
    est.g = std::clamp(est.g_raw, 0.0, 1.0);
    if (samples > 1) {
        const double var = std::max(0.0, (sq_acc.sum - samples * mean * mean) / (samples - 1));
        est.std_error = std::sqrt(var / samples);
    }
    if (est.g_raw > 1.0) {  // clamp active: the clamped value is locally flat
        for (auto& g : est.grad_v) g.setZero();
        if (est.grad_u.size() > 0) est.grad_u.setZero();
    }
    return est;
}

MismatchEstimate estimate_g(const SemanticModel& m, const Vec& z_true, const LinkInstance& link,
                            int samples, Rng& rng, GradWrt wrt) {
    if (samples < 1) throw std::invalid_argument("estimate_g: samples must be >= 1");
    const CMat noise = draw_unit_noise(static_cast<int>(link.h.rows()), samples * link.channel_uses(), rng);
    return estimate_g(m, z_true, link, noise, wrt);
}

void SemanticModel::save_csv(std::ostream& out) const {
    out << "matrix,row,col,re,im\n";
    char buf[160];
    auto dump_c = [&](const char* name, const CMat& a) {
        for (Eigen::Index r = 0; r < a.rows(); ++r)
            for (Eigen::Index c = 0; c < a.cols(); ++c) {
                std::snprintf(buf, sizeof(buf), "%s,%lld,%lld,%.17g,%.17g\n", name, static_cast<long long>(r),
                              static_cast<long long>(c), a(r, c).real(), a(r, c).imag());
                out << buf;
            }
    };
    dump_c("enc", enc);
    dump_c("dec", dec);
    for (Eigen::Index r = 0; r < task.rows(); ++r)
        for (Eigen::Index c = 0; c < task.cols(); ++c) {
            std::snprintf(buf, sizeof(buf), "task,%lld,%lld,%.17g,0\n", static_cast<long long>(r),
                          static_cast<long long>(c), task(r, c));
            out << buf;
        }
    for (Eigen::Index l = 0; l < power_scale.size(); ++l) {
        std::snprintf(buf, sizeof(buf), "power_scale,%lld,0,%.17g,0\n", static_cast<long long>(l), power_scale[l]);
        out << buf;
    }
}

SemanticModel SemanticModel::load_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line.rfind("matrix,row,col,re,im", 0) != 0)
        throw std::invalid_argument("SemanticModel::load_csv: missing header");
    struct Entry {
        std::string name;
        int row, col;
        double re, im;
    };
    std::vector<Entry> entries;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        Entry e;
        std::istringstream ss(line);
        std::getline(ss, e.name, ',');
        char comma;
        if (!(ss >> e.row >> comma >> e.col >> comma >> e.re >> comma >> e.im))
            throw std::invalid_argument("SemanticModel::load_csv: malformed row: " + line);
        entries.push_back(std::move(e));
    }
    auto dims = [&](const std::string& name, int& rows, int& cols) {
        rows = cols = 0;
        for (const Entry& e : entries)
            if (e.name == name) {
                rows = std::max(rows, e.row + 1);
                cols = std::max(cols, e.col + 1);
            }
    };
    SemanticModel m;
    int r, c;
    dims("enc", r, c);
    m.enc = CMat::Zero(r, c);
    dims("dec", r, c);
    m.dec = CMat::Zero(r, c);
    dims("task", r, c);
    m.task = Mat::Zero(r, c);
    dims("power_scale", r, c);
    m.power_scale = Vec::Zero(r);
    for (const Entry& e : entries) {
        if (e.name == "enc") m.enc(e.row, e.col) = cplx(e.re, e.im);
        else if (e.name == "dec") m.dec(e.row, e.col) = cplx(e.re, e.im);
        else if (e.name == "task") m.task(e.row, e.col) = e.re;
        else if (e.name == "power_scale") m.power_scale[e.row] = e.re;
        else throw std::invalid_argument("SemanticModel::load_csv: unknown matrix " + e.name);
    }
    return m;
}

}  // namespace aois
