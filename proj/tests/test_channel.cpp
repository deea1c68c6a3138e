#include <doctest.h>

#include <cmath>
#include <sstream>

#include "aois/channel.hpp"
#include "test_helpers.hpp"

using namespace aois;

TEST_CASE("block fading draws are deterministic per seed") {
    Rng a(42), b(42);
    const CMat h1 = sample_block_fading(1, 1, a);
    const CMat h2 = sample_block_fading(1, 1, b);
    CHECK(h1(0, 0) == h2(0, 0));

    Rng c(43);
    CHECK(sample_block_fading(1, 1, c)(0, 0) != h1(0, 0));
}

TEST_CASE("block fading entries are CN(0,1)") {
    Rng rng(7);
    const int n = 1'000'000;
    double sum_mag2 = 0.0, sum_re2 = 0.0, sum_im2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const cplx h = rng.cgaussian();
        sum_mag2 += std::norm(h);
        sum_re2 += h.real() * h.real();
        sum_im2 += h.imag() * h.imag();
    }
    CHECK(sum_mag2 / n == doctest::Approx(1.0).epsilon(0.01));
    CHECK(sum_re2 / n == doctest::Approx(0.5).epsilon(0.02));
    CHECK(sum_im2 / n == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("blocks are independent: chi-square on consecutive-block quartile pairs") {
    // 4x4 contingency table of (block k, block k+1) first-entry real parts,
    // quartiles of N(0, 0.5); independence => chi2(9) below the 1% critical
    // value 21.67.
    const int blocks = 20'000;
    std::vector<double> x(blocks);
    for (int b = 0; b < blocks; ++b) {
        Rng rng(derive_seed(123, {kChannelTag, static_cast<uint64_t>(b), 0}));
        x[b] = sample_block_fading(2, 2, rng)(0, 0).real();
    }
    const double sd = std::sqrt(0.5);
    auto bin = [&](double v) {
        if (v < -0.6745 * sd) return 0;
        if (v < 0.0) return 1;
        if (v < 0.6745 * sd) return 2;
        return 3;
    };
    double table[4][4] = {};
    for (int b = 0; b + 1 < blocks; ++b) table[bin(x[b])][bin(x[b + 1])] += 1.0;
    const double n = blocks - 1;
    double row[4] = {}, col[4] = {};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            row[i] += table[i][j];
            col[j] += table[i][j];
        }
    double chi2 = 0.0;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            const double expect = row[i] * col[j] / n;
            chi2 += (table[i][j] - expect) * (table[i][j] - expect) / expect;
        }
    CHECK(chi2 < 21.666);  // chi2_{0.99, df=9}
}

TEST_CASE("path loss formula") {
    CHECK(path_loss_db(1.0) == doctest::Approx(128.1));
    CHECK(path_loss_db(10.0) == doctest::Approx(165.7));
    CHECK(path_loss_db(0.1) == doctest::Approx(90.5));
    CHECK_THROWS_AS(path_loss_db(0.0), std::domain_error);
    CHECK_THROWS_AS(path_loss_db(-1.0), std::domain_error);
}

TEST_CASE("noise power from PSD") {
    const double w = noise_power_w(5e6, -174.0);
    const double dbm = 10.0 * std::log10(w) + 30.0;
    CHECK(dbm == doctest::Approx(-107.0103).epsilon(1e-4));
    CHECK(w == doctest::Approx(1.9905e-14).epsilon(1e-3));
    CHECK(10.0 * std::log10(noise_power_w(1.0, -174.0)) + 30.0 == doctest::Approx(-174.0));
    CHECK(10.0 * std::log10(noise_power_w(2.0, -174.0)) + 30.0 == doctest::Approx(-171.0).epsilon(1e-4));
}

namespace {

ChannelState tiny_channel(int users, int n_rx, int n_tx, double sigma2, uint64_t seed) {
    ChannelState ch;
    Rng rng(seed);
    for (int u = 0; u < users; ++u) ch.per_user.push_back(aois::testing::random_cmat(n_rx, n_tx, rng));
    ch.noise_variance = Vec::Constant(users, sigma2);
    ch.pathloss_db = Vec::Zero(users);
    return ch;
}

}  // namespace

TEST_CASE("apply_downlink: identity chain with zero noise reproduces the symbol") {
    ChannelState ch;
    ch.per_user = {CMat::Identity(2, 2)};
    ch.noise_variance = Vec::Zero(1);
    ch.pathloss_db = Vec::Zero(1);
    BeamformerSet bf;
    bf.V = {CMat::Identity(2, 2)};
    bf.U = {CMat::Identity(2, 2)};
    CVec e1(2);
    e1 << 1.0, 0.0;
    Rng rng(1);
    const auto y = apply_downlink(ch, bf, {e1}, rng);
    CHECK((y[0] - e1).norm() == doctest::Approx(0.0));
}

TEST_CASE("apply_downlink: null interferer matches the single-user result") {
    ChannelState ch2 = tiny_channel(2, 2, 3, 0.3, 5);
    BeamformerSet bf2;
    Rng brng(9);
    bf2.V = {aois::testing::random_cmat(3, 2, brng), CMat::Zero(3, 2)};
    bf2.U = {CMat::Identity(2, 2), CMat::Identity(2, 2)};
    CVec x(2);
    x << cplx(0.5, -0.25), cplx(-1.0, 2.0);

    Rng rng_a(77);
    const auto y_two = apply_downlink(ch2, bf2, {x, CVec::Zero(2)}, rng_a);

    ChannelState ch1;
    ch1.per_user = {ch2.per_user[0]};
    ch1.noise_variance = Vec::Constant(1, 0.3);
    ch1.pathloss_db = Vec::Zero(1);
    BeamformerSet bf1;
    bf1.V = {bf2.V[0]};
    bf1.U = {bf2.U[0]};
    Rng rng_b(77);  // shared noise draw for user 0
    const auto y_one = apply_downlink(ch1, bf1, {x}, rng_b);
    CHECK((y_two[0] - y_one[0]).norm() == doctest::Approx(0.0));
}

TEST_CASE("apply_downlink matches an independent matrix-product evaluation") {
    ChannelState ch = tiny_channel(2, 2, 4, 0.0, 11);
    Rng brng(12);
    BeamformerSet bf;
    bf.V = {aois::testing::random_cmat(4, 2, brng), aois::testing::random_cmat(4, 2, brng)};
    bf.U = {CMat::Identity(2, 2), CMat::Identity(2, 2)};
    Rng xrng(13);
    const CVec x0 = aois::testing::random_cvec(2, xrng), x1 = aois::testing::random_cvec(2, xrng);
    Rng rng(14);
    const auto y = apply_downlink(ch, bf, {x0, x1}, rng);

    // Direct re-evaluation, summing user contributions one matrix at a time.
    for (int i = 0; i < 2; ++i) {
        CVec expect = ch.per_user[i] * bf.V[0] * x0 + ch.per_user[i] * bf.V[1] * x1;
        CHECK((y[i] - expect).norm() < 1e-12);
    }
}

TEST_CASE("apply_downlink superposition with shared noise") {
    ChannelState ch = tiny_channel(2, 2, 3, 0.4, 21);
    Rng brng(22);
    BeamformerSet bf;
    bf.V = {aois::testing::random_cmat(3, 1, brng), aois::testing::random_cmat(3, 1, brng)};
    bf.U = {CMat::Identity(2, 2), CMat::Identity(2, 2)};
    Rng xrng(23);
    const CVec x0 = aois::testing::random_cvec(1, xrng), x1 = aois::testing::random_cvec(1, xrng);

    Rng r1(99);
    const auto y_joint = apply_downlink(ch, bf, {x0, x1}, r1);
    // Single-user runs without noise, plus the shared draw added once.
    ChannelState ch0 = ch;
    ch0.noise_variance = Vec::Zero(2);
    Rng r2(99);
    const auto y_a = apply_downlink(ch0, bf, {x0, CVec::Zero(1)}, r2);
    const auto y_b = apply_downlink(ch0, bf, {CVec::Zero(1), x1}, r2);
    Rng r3(99);
    const double sd = std::sqrt(0.4);
    for (int u = 0; u < 2; ++u) {
        CVec noise(2);
        for (int r = 0; r < 2; ++r) noise[r] = sd * r3.cgaussian();
        CHECK((y_joint[u] - (y_a[u] + y_b[u] + noise)).norm() < 1e-12);
    }
}

TEST_CASE("apply_downlink rejects mismatched symbol lengths") {
    ChannelState ch = tiny_channel(1, 2, 3, 0.0, 31);
    BeamformerSet bf;
    bf.V = {CMat::Zero(3, 2)};
    bf.U = {CMat::Identity(2, 2)};
    Rng rng(1);
    CHECK_THROWS_AS(apply_downlink(ch, bf, {CVec::Zero(3)}, rng), std::invalid_argument);
}

TEST_CASE("channel trace CSV round trip") {
    std::vector<ChannelState> trace;
    for (int s = 0; s < 3; ++s) {
        ChannelState ch = tiny_channel(2, 2, 2, 1.0, 100 + s);
        ch.slot = s;
        trace.push_back(ch);
    }
    std::ostringstream out;
    export_channel_trace(out, trace);
    std::istringstream in(out.str());
    const auto back = import_channel_trace(in);
    REQUIRE(back.size() == trace.size());
    for (std::size_t s = 0; s < trace.size(); ++s)
        for (int u = 0; u < 2; ++u) CHECK((back[s].per_user[u] - trace[s].per_user[u]).norm() == 0.0);
}
