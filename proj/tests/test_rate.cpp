#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>

#include "aois/rate.hpp"
#include "test_helpers.hpp"

using namespace aois;
using aois::testing::random_cmat;
using aois::testing::random_cvec;

namespace {

// Independent oracle: eigenvalues of I + S B^-1 (non-Hermitian product),
// rate = sum log2 of their real parts.
double mimo_rate_eig_oracle(const CMat& h, const std::vector<CMat>& v, int self, const CMat& u, double sigma2) {
    const Eigen::Index n = h.rows();
    CMat b = sigma2 * CMat::Identity(n, n);
    for (int j = 0; j < static_cast<int>(v.size()); ++j) {
        if (j == self) continue;
        const CMat g = u.adjoint() * h * v[j];
        b += g * g.adjoint();
    }
    const CMat x = u.adjoint() * h * v[self];
    const CMat m = CMat::Identity(n, n) + x * x.adjoint() * b.inverse();
    Eigen::ComplexEigenSolver<CMat> es(m);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) acc += std::log2(es.eigenvalues()[i].real());
    return acc;
}

}  // namespace

TEST_CASE("mimo_rate scalar plug-in") {
    const CMat h = CMat::Constant(1, 1, 2.0);
    const std::vector<CMat> v = {CMat::Constant(1, 1, 1.0)};
    const CMat u = CMat::Constant(1, 1, 1.0);
    CHECK(mimo_rate(h, v, 0, u, 1.0) == doctest::Approx(std::log2(5.0)).epsilon(1e-12));
}

TEST_CASE("mimo_rate is zero for a silent transmitter") {
    Rng rng(3);
    const CMat h = random_cmat(2, 3, rng);
    const std::vector<CMat> v = {CMat::Zero(3, 2)};
    CHECK(mimo_rate(h, v, 0, CMat::Identity(2, 2), 0.7) == doctest::Approx(0.0));
}

TEST_CASE("mimo_rate matches the eigenvalue oracle on random instances") {
    for (uint64_t seed = 0; seed < 50; ++seed) {
        Rng rng(1000 + seed);
        const CMat h = random_cmat(2, 2, rng);
        const std::vector<CMat> v = {random_cmat(2, 2, rng), random_cmat(2, 2, rng)};
        const CMat u = random_cmat(2, 2, rng);
        for (int self = 0; self < 2; ++self) {
            const double got = mimo_rate(h, v, self, u, 0.8);
            const double expect = mimo_rate_eig_oracle(h, v, self, u, 0.8);
            CHECK(got == doctest::Approx(expect).epsilon(1e-9));
        }
    }
}

TEST_CASE("mimo_rate rejects a non positive definite interference matrix") {
    const CMat h = CMat::Identity(2, 2);
    const std::vector<CMat> v = {CMat::Identity(2, 2)};
    CHECK_THROWS_AS(mimo_rate(h, v, 0, CMat::Zero(2, 2), 0.0), NumericalError);
}

TEST_CASE("miso_rate plug-in and zero-forcing property") {
    const double p = 7.5;
    CVec h = CVec::Zero(3);
    h[0] = 1.0;
    std::vector<CVec> v = {std::sqrt(p) * h};
    CHECK(miso_rate(h, v, 0, 1.0) == doctest::Approx(std::log2(1.0 + p)).epsilon(1e-12));

    // An interferer orthogonal to h changes nothing.
    CVec v2 = CVec::Zero(3);
    v2[1] = cplx(2.0, -1.0);
    v.push_back(v2);
    CHECK(miso_rate(h, v, 0, 1.0) == doctest::Approx(std::log2(1.0 + p)).epsilon(1e-12));
}

TEST_CASE("miso_rate equals mimo_rate with one receive antenna") {
    for (uint64_t seed = 0; seed < 30; ++seed) {
        Rng rng(2000 + seed);
        const int users = 4, n_tx = 3;
        const CMat h_row = random_cmat(1, n_tx, rng);
        std::vector<CMat> v_mat;
        std::vector<CVec> v_vec;
        for (int j = 0; j < users; ++j) {
            v_mat.push_back(random_cmat(n_tx, 1, rng));
            v_vec.push_back(v_mat.back().col(0));
        }
        const CVec h = h_row.row(0).adjoint();  // miso convention: y = h^H sum v_j x_j
        const double miso = miso_rate(h, v_vec, 1, 0.6);
        const double mimo = mimo_rate(h_row, v_mat, 1, CMat::Identity(1, 1), 0.6);
        CHECK(miso == doctest::Approx(mimo).epsilon(1e-9));
    }
}

TEST_CASE("transmission delay") {
    CHECK(transmission_delay(1000.0, 5e6, 2.0) == doctest::Approx(1e-4));
    CHECK(transmission_delay(0.0, 5e6, 3.0) == 0.0);
    CHECK(std::isinf(transmission_delay(10.0, 5e6, 0.0)));
}

TEST_CASE("rate report flags delay-budget violations") {
    Vec rates(3);
    rates << 2.0, 0.5, 0.0;
    const auto rep = make_rate_report(rates, {1000, 1000, 1000}, 5e6, 1.5e-4);
    CHECK(rep.delay_s[0] == doctest::Approx(1e-4));
    CHECK(rep.feasible == std::vector<bool>{true, false, false});
    CHECK(std::isinf(rep.delay_s[2]));
}

TEST_CASE("mimo_rate nondecreasing when scaling the desired beamformer up") {
    for (uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(3000 + seed);
        const CMat h = random_cmat(2, 3, rng);
        std::vector<CMat> v = {random_cmat(3, 2, rng), random_cmat(3, 2, rng)};
        const CMat u = CMat::Identity(2, 2);
        double prev = -1.0;
        for (int k = 0; k <= 10; ++k) {
            auto scaled = v;
            scaled[0] = (k / 10.0) * v[0];
            const double r = mimo_rate(h, scaled, 0, u, 0.9);
            CHECK(r >= prev - 1e-12);
            prev = r;
        }
    }
}

TEST_CASE("delay budget is the rate floor in disguise") {
    Rng rng(4000);
    const double bandwidth = 2.0, t_max = 3.0;
    for (int trial = 0; trial < 200; ++trial) {
        const double length = 1.0 + 20.0 * rng.uniform();
        const double rate = 4.0 * rng.uniform();
        const double delay = transmission_delay(length, bandwidth, rate);
        const bool by_delay = delay <= t_max;
        const bool by_rate = rate >= length / (bandwidth * t_max);
        CHECK(by_delay == by_rate);
    }
}
