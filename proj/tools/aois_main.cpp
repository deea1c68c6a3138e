// Command-line front end: run episodes, sweep a parameter axis, or verify
// the core numerical properties.

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "aois/engine.hpp"
#include "aois/rate.hpp"
#include "aois/sca.hpp"
#include "aois/zf.hpp"

namespace {

using namespace aois;

int run_verify() {
    int failures = 0;
    auto check = [&](const char* what, bool ok, double worst) {
        std::printf("%s %s (worst %.3g)\n", ok ? "PASS" : "FAIL", what, worst);
        if (!ok) ++failures;
    };

    {
        Rng rng(1);
        double worst = 0.0;
        for (int k = 0; k < 2000; ++k) {
            const int n = 1 + static_cast<int>(rng.uniform() * 3);
            const int d = 1 + static_cast<int>(rng.uniform() * 3);
            CMat x0(n, d), x(n, d), a(n, n), b(n, n);
            for (auto* m : {&x0, &x})
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < d; ++j) (*m)(i, j) = rng.cgaussian();
            for (auto* m : {&a, &b})
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j) (*m)(i, j) = rng.cgaussian();
            const CMat y0 = a * a.adjoint() + 0.3 * CMat::Identity(n, n);
            const CMat y = b * b.adjoint() + 0.3 * CMat::Identity(n, n);
            const CMat m = CMat::Identity(d, d) + x.adjoint() * y.inverse() * x;
            const double truth = std::log(std::abs(m.determinant()));
            worst = std::max(worst, logdet_lower_bound(x, y, x0, y0) - truth);
        }
        check("log-det minorizer majorization (2000 random instances)", worst <= 1e-9, worst);
    }
    {
        Rng rng(2);
        double worst = 0.0;
        for (int k = 0; k < 500; ++k) {
            const int users = 1 + static_cast<int>(rng.uniform() * 5);
            Vec p0(users), h(users), extra(users);
            for (int i = 0; i < users; ++i) {
                p0[i] = rng.uniform();
                h[i] = 0.1 + rng.uniform();
                extra[i] = rng.uniform() + 1e-6;
            }
            const Vec p = p0 + extra;
            const Vec q = extra.array().sqrt();
            worst = std::max(worst, (reparameterized_power(q, p0, h, h.dot(p)) - p).cwiseAbs().maxCoeff());
        }
        check("power reparameterization equivalence (500 random instances)", worst < 1e-10, worst);
    }
    {
        const auto model = SemanticModel::make(4, 8, 3, 3);
        Rng rng(4);
        double worst = 0.0;
        const double step = 1e-5;
        for (int k = 0; k < 20; ++k) {
            Vec z(4);
            for (int i = 0; i < 4; ++i) z[i] = rng.gaussian();
            LinkInstance link;
            link.h = CMat(2, 3);
            for (int r = 0; r < 2; ++r)
                for (int c = 0; c < 3; ++c) link.h(r, c) = rng.cgaussian();
            link.sigma2 = 0.4;
            link.V = {CMat(3, 2)};
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 2; ++c) link.V[0](r, c) = 0.5 * rng.cgaussian();
            link.x = {encode(model, z, 8)};
            link.self = 0;
            link.U = CMat::Identity(2, 2);
            Rng nrng(derive_seed(5, {static_cast<uint64_t>(k)}));
            const CMat noise = draw_unit_noise(2, 8 * link.channel_uses(), nrng);
            const auto est = estimate_g(model, z, link, noise, GradWrt::kV);
            CMat fd = CMat::Zero(3, 2);
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 2; ++c)
                    for (int part = 0; part < 2; ++part) {
                        const cplx delta = part == 0 ? cplx(step, 0) : cplx(0, step);
                        link.V[0](r, c) += delta;
                        const double up = estimate_g(model, z, link, noise).g;
                        link.V[0](r, c) -= 2.0 * delta;
                        const double dn = estimate_g(model, z, link, noise).g;
                        link.V[0](r, c) += delta;
                        fd(r, c) += (part == 0 ? cplx(1, 0) : cplx(0, 1)) * ((up - dn) / (2.0 * step));
                    }
            worst = std::max(worst, (fd - est.grad_v[0]).norm() / fd.norm());
        }
        check("finite-difference gradient agreement (20 instances)", worst <= 1e-4, worst);
    }
    std::printf(failures == 0 ? "verify: all checks passed\n" : "verify: %d check(s) failed\n", failures);
    return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"AoIS-aware downlink scheduling simulator"};
    app.require_subcommand(1);

    std::string config_path, mode_str = "zf", out_dir = "out", axis_str = "p_max";
    uint64_t seed = 0;
    bool seed_set = false;
    int slots = 0;
    std::vector<double> values;

    auto* run = app.add_subcommand("run", "simulate one episode and write CSV results");
    run->add_option("--config", config_path, "JSON config file")->required()->check(CLI::ExistingFile);
    run->add_option("--mode", mode_str, "sca|zf|always|never");
    run->add_option("--seed", seed, "override rng_seed")->each([&](const std::string&) { seed_set = true; });
    run->add_option("--slots", slots, "override slot count");
    run->add_option("--out", out_dir, "output directory");

    auto* sweep_cmd = app.add_subcommand("sweep", "episode aggregates along one parameter axis");
    sweep_cmd->add_option("--config", config_path, "JSON config file")->required()->check(CLI::ExistingFile);
    sweep_cmd->add_option("--mode", mode_str, "sca|zf|always|never");
    sweep_cmd->add_option("--axis", axis_str, "p_max|mean_length|omega");
    sweep_cmd->add_option("--values", values, "comma separated values")->required()->delimiter(',');
    sweep_cmd->add_option("--seed", seed, "override rng_seed")->each([&](const std::string&) { seed_set = true; });
    sweep_cmd->add_option("--slots", slots, "override slot count");
    sweep_cmd->add_option("--out", out_dir, "output directory");

    auto* verify = app.add_subcommand("verify", "run the built-in property checks");
    (void)verify;

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand("verify")) return run_verify();

        SystemConfig cfg = SystemConfig::from_file(config_path);
        if (seed_set) cfg.rng_seed = seed;
        if (slots > 0) cfg.slots = slots;
        const Mode mode = mode_from_string(mode_str);

        if (app.got_subcommand("run")) {
            const EpisodeResult res = run_episode(cfg, mode);
            write_episode_outputs(res, out_dir);
            emit_plots(res, out_dir);
            std::printf("wrote %s/{episode.csv,summary.json,*.dat,plots.gp}\n", out_dir.c_str());
            std::printf("avg AoIS %.6g, avg cost %.6g, transmissions %g\n", res.avg_aois, res.avg_cost.sum(),
                        res.transmissions.sum());
        } else {
            const SweepAxis axis = sweep_axis_from_string(axis_str);
            const auto rows = sweep(cfg, mode, axis, values);
            std::filesystem::create_directories(out_dir);
            const auto path = std::filesystem::path(out_dir) / "sweep.csv";
            std::ofstream out(path, std::ios::binary);
            write_sweep_csv(out, axis, rows);
            std::printf("wrote %s\n", path.string().c_str());
            for (const auto& r : rows) std::printf("  %-10g avg AoIS %.6g\n", r.value, r.avg_aois);
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
