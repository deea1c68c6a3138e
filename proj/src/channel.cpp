#include "aois/channel.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace aois {

CMat sample_block_fading(int n_rx, int n_tx, Rng& rng) {
    if (n_rx < 1 || n_tx < 1) throw std::invalid_argument("sample_block_fading: antenna counts must be >= 1");
    CMat h(n_rx, n_tx);
    for (int r = 0; r < n_rx; ++r)
        for (int c = 0; c < n_tx; ++c) h(r, c) = rng.cgaussian();
    return h;
}

double path_loss_db(double distance_km) {
    if (!(distance_km > 0.0)) throw std::domain_error("path_loss_db: distance must be positive");
    return 128.1 + 37.6 * std::log10(distance_km);
}

double noise_power_w(double bandwidth_hz, double psd_dbm_hz) {
    if (!(bandwidth_hz > 0.0)) throw std::invalid_argument("noise_power_w: bandwidth must be positive");
    const double dbm = psd_dbm_hz + 10.0 * std::log10(bandwidth_hz);
    return std::pow(10.0, (dbm - 30.0) / 10.0);
}

std::vector<CVec> apply_downlink(const ChannelState& ch, const BeamformerSet& bf,
                                 const std::vector<CVec>& symbols, Rng& rng) {
    const int users = ch.num_users();
    if (bf.num_users() != users || static_cast<int>(symbols.size()) != users)
        throw std::invalid_argument("apply_downlink: user count mismatch");

    const int n_tx = static_cast<int>(ch.per_user.front().cols());
    CVec tx = CVec::Zero(n_tx);
    for (int j = 0; j < users; ++j) {
        if (symbols[j].size() == 0) continue;  // silent user
        if (symbols[j].size() != bf.V[j].cols())
            throw std::invalid_argument("apply_downlink: symbol length of user " + std::to_string(j) +
                                        " does not match beamformer columns");
        tx += bf.V[j] * symbols[j];
    }

    std::vector<CVec> rx(users);
    for (int i = 0; i < users; ++i) {
        const CMat& h = ch.per_user[i];
        CVec y = h * tx;
        const double sd = std::sqrt(ch.noise_variance[i]);
        for (Eigen::Index r = 0; r < y.size(); ++r) y[r] += sd * rng.cgaussian();
        rx[i] = std::move(y);
    }
    return rx;
}

BeamformerSet BeamformerSet::matched_init(const std::vector<CMat>& H, int streams, double p_max) {
    BeamformerSet bf;
    const int users = static_cast<int>(H.size());
    bf.V.resize(users);
    bf.U.resize(users);
    for (int i = 0; i < users; ++i) {
        const int n_rx = static_cast<int>(H[i].rows());
        // Columns of H_i^H point each stream at the receiver.
        bf.V[i] = H[i].adjoint().leftCols(std::min<Eigen::Index>(streams, H[i].rows()));
        if (bf.V[i].cols() < streams) {
            CMat padded = CMat::Zero(H[i].cols(), streams);
            padded.leftCols(bf.V[i].cols()) = bf.V[i];
            bf.V[i] = padded;
        }
        bf.U[i] = CMat::Identity(n_rx, n_rx);
    }
    double p = bf.total_power();
    if (p > 0.0) {
        const double scale = std::sqrt(p_max / p);
        for (auto& v : bf.V) v *= scale;
    }
    return bf;
}

void export_channel_trace(std::ostream& out, const std::vector<ChannelState>& trace) {
    out << "slot,user,row,col,re,im\n";
    char buf[128];
    for (const ChannelState& ch : trace) {
        for (int u = 0; u < ch.num_users(); ++u) {
            const CMat& h = ch.per_user[u];
            for (Eigen::Index r = 0; r < h.rows(); ++r)
                for (Eigen::Index c = 0; c < h.cols(); ++c) {
                    std::snprintf(buf, sizeof(buf), "%d,%d,%lld,%lld,%.17g,%.17g\n", ch.slot, u,
                                  static_cast<long long>(r), static_cast<long long>(c), h(r, c).real(),
                                  h(r, c).imag());
                    out << buf;
                }
        }
    }
}

std::vector<ChannelState> import_channel_trace(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line.rfind("slot,user,row,col,re,im", 0) != 0)
        throw std::invalid_argument("import_channel_trace: missing header row");

    // First pass collects triplets, dimensions are inferred from the max indices.
    struct Entry {
        int slot, user, row, col;
        double re, im;
    };
    std::vector<Entry> entries;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        Entry e{};
        std::istringstream ss(line);
        char comma;
        if (!(ss >> e.slot >> comma >> e.user >> comma >> e.row >> comma >> e.col >> comma >> e.re >> comma >> e.im))
            throw std::invalid_argument("import_channel_trace: malformed row: " + line);
        entries.push_back(e);
    }
    if (entries.empty()) return {};

    int users = 0, rows = 0, cols = 0;
    std::vector<int> slots;
    for (const Entry& e : entries) {
        users = std::max(users, e.user + 1);
        rows = std::max(rows, e.row + 1);
        cols = std::max(cols, e.col + 1);
        if (slots.empty() || slots.back() != e.slot) slots.push_back(e.slot);
    }

    std::vector<ChannelState> trace;
    for (int s : slots) {
        ChannelState ch;
        ch.slot = s;
        ch.per_user.assign(users, CMat::Zero(rows, cols));
        ch.noise_variance = Vec::Ones(users);
        ch.pathloss_db = Vec::Zero(users);
        trace.push_back(std::move(ch));
    }
    std::size_t idx = 0;
    for (const Entry& e : entries) {
        while (trace[idx].slot != e.slot) ++idx;
        trace[idx].per_user[e.user](e.row, e.col) = cplx(e.re, e.im);
    }
    return trace;
}

}  // namespace aois
