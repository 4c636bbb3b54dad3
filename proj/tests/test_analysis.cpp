#include "mimtwin/analysis.hpp"
#include "mimtwin/backaction.hpp"
#include "mimtwin/config.hpp"
#include "mimtwin/constants.hpp"
#include "mimtwin/errors.hpp"
#include "mimtwin/heating.hpp"
#include "mimtwin/spectra.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

using namespace mimtwin;
using namespace mimtwin::analysis;
using constants::pi;
using constants::two_pi;
using spectra::Spectrum;
using spectra::SpectrumScene;

namespace {

SpectrumScene base_scene()
{
    return config::preset("paper-fig5").scene_template();
}

Spectrum lorentzian_spectrum(double center, double fwhm, double area, double background, double f0, double f1,
                             std::size_t n)
{
    std::vector<double> f = spectra::uniform_grid(f0, f1, n);
    std::vector<double> p(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double h = 0.5 * fwhm;
        p[i] = background + area / pi * h / ((f[i] - center) * (f[i] - center) + h * h);
    }
    return Spectrum(std::move(f), std::move(p), {});
}

std::vector<PowerLawPoint> power_law(double c, double s, const std::vector<double>& xs)
{
    std::vector<PowerLawPoint> out;
    for (double x : xs)
        out.push_back({x, c * std::pow(x, s), std::nullopt});
    return out;
}

std::vector<double> log_spaced(double lo, double hi, int n)
{
    std::vector<double> out;
    for (int i = 0; i < n; ++i)
        out.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1)));
    return out;
}

} // namespace

TEST_CASE("lorentzian fit: exact recovery on noiseless data")
{
    struct Case {
        double center, fwhm, area, background;
    };
    for (const Case c : {Case{1.3e6, 3.7, 2.0, 5e-6}, Case{1.0e3, 0.01, 1e-9, 1e-12}, Case{5e7, 900.0, 7e3, 1.0}}) {
        const Spectrum s = lorentzian_spectrum(c.center, c.fwhm, c.area, c.background, c.center - 30.0 * c.fwhm,
                                               c.center + 30.0 * c.fwhm, 1201);
        const LorentzianFit fit = fit_lorentzian(s);
        REQUIRE(fit.converged);
        CHECK(fit.center == doctest::Approx(c.center).epsilon(1e-9));
        CHECK(fit.fwhm == doctest::Approx(c.fwhm).epsilon(1e-6));
        CHECK(fit.area == doctest::Approx(c.area).epsilon(1e-6));
        CHECK(fit.background == doctest::Approx(c.background).epsilon(1e-6));
        CHECK(fit.evaluate(c.center) == doctest::Approx(c.background + 2.0 * c.area / (pi * c.fwhm)).epsilon(1e-6));
    }
}

TEST_CASE("lorentzian fit: explicit window and minimum bin count")
{
    const Spectrum s = lorentzian_spectrum(100.0, 2.0, 1.0, 0.1, 0.0, 200.0, 2001);
    LorentzianOptions opt;
    opt.window = std::make_pair(80.0, 120.0);
    const LorentzianFit fit = fit_lorentzian(s, opt);
    CHECK(fit.converged);
    CHECK(fit.window_lo >= 80.0);
    CHECK(fit.window_hi <= 120.0);
    CHECK(fit.fwhm == doctest::Approx(2.0).epsilon(1e-6));

    opt.window = std::make_pair(99.0, 100.4);
    CHECK_THROWS_AS(fit_lorentzian(s, opt), InputError);
    opt.window = std::make_pair(300.0, 400.0);
    CHECK_THROWS_AS(fit_lorentzian(s, opt), InputError);
}

TEST_CASE("lorentzian fit: coverage of the reported uncertainties")
{
    int center_ok = 0, fwhm_ok = 0, area_ok = 0, converged = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        SpectrumScene scene = base_scene();
        scene.rng_seed = seed;
        const auto truth = spectra::evaluate_scene(scene);
        const LorentzianFit fit = fit_lorentzian(synthesize_series_point(scene));
        if (!fit.converged)
            continue;
        ++converged;
        center_ok += std::abs(fit.center - truth.center_hz()) <= 3.0 * fit.center_err;
        fwhm_ok += std::abs(fit.fwhm - truth.fwhm_hz()) <= 3.0 * fit.fwhm_err;
        area_ok += std::abs(fit.area - truth.area) <= 3.0 * fit.area_err;
    }
    CHECK(converged == 100);
    CHECK(center_ok >= 95);
    CHECK(fwhm_ok >= 95);
    CHECK(area_ok >= 95);
}

TEST_CASE("lorentzian fit: flat spectrum has no significant peak")
{
    SpectrumScene scene = base_scene();
    scene.transduction_k = 1e-300;
    const auto truth = spectra::evaluate_scene(scene);
    const Spectrum s = spectra::synthesize_spectrum(scene, truth.center_hz() - 200.0, truth.center_hz() + 200.0, 1024);
    const LorentzianFit fit = fit_lorentzian(s);
    const bool degenerate = !fit.converged || std::abs(fit.area) <= 3.0 * fit.area_err;
    CHECK(degenerate);
}

TEST_CASE("lorentzian fit: non-finite data is rejected")
{
    // Spectrum refuses non-finite values, so the only route is through the constructor
    CHECK_THROWS_AS(Spectrum({1.0, 2.0, 3.0}, {1.0, std::nan(""), 1.0}, {}), DomainError);
}

TEST_CASE("power law: exact data")
{
    const auto pts = power_law(3.5, -1.0, log_spaced(1e-6, 1e-2, 9));
    const PowerLawFit fit = fit_powerlaw(pts);
    CHECK(std::abs(fit.exponent_s + 1.0) <= 1e-12);
    CHECK(fit.sigma_s <= 1e-10);
    CHECK(fit.prefactor == doctest::Approx(3.5).epsilon(1e-10));
    CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fit.n_points == 9);

    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int i = 0; i < 200; ++i) {
        const double s = u(rng);
        const auto p = power_law(std::exp(u(rng)), s, log_spaced(1e-3, 1e3, 7));
        CHECK(std::abs(fit_powerlaw(p).exponent_s - s) <= 1e-12);
    }
}

TEST_CASE("power law: noisy data recovers the exponent")
{
    int inside = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> noise(0.0, 0.05);
        auto pts = power_law(2.0, -0.67, log_spaced(0.5e-6, 10e-6, 12));
        for (auto& p : pts)
            p.y *= 1.0 + noise(rng);
        const PowerLawFit fit = fit_powerlaw(pts);
        inside += std::abs(fit.exponent_s + 0.67) <= 0.05;
        CHECK(fit.sigma_s > 0.0);
    }
    CHECK(inside >= 45);
}

TEST_CASE("power law: weighted and grouped fits")
{
    auto pts = power_law(1.0, 0.5, log_spaced(1.0, 100.0, 6));
    for (auto& p : pts)
        p.sigma_y = 0.01 * p.y;
    CHECK(std::abs(fit_powerlaw(pts, true).exponent_s - 0.5) <= 1e-12);

    const std::vector<std::vector<PowerLawPoint>> groups = {power_law(1.0, -0.7, log_spaced(1.0, 10.0, 5)),
                                                           power_law(9.0, -0.7, log_spaced(2.0, 30.0, 4))};
    const PowerLawFit g = fit_powerlaw_grouped(groups);
    CHECK(std::abs(g.exponent_s + 0.7) <= 1e-12);
    CHECK(g.prefactor == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("power law: invalid inputs")
{
    CHECK_THROWS_AS(fit_powerlaw(power_law(1.0, 1.0, {1.0, 2.0})), InputError);
    CHECK_THROWS_AS(fit_powerlaw({{1.0, 1.0, {}}, {2.0, -1.0, {}}, {3.0, 1.0, {}}}), DomainError);
    CHECK_THROWS_AS(fit_powerlaw({{0.0, 1.0, {}}, {2.0, 1.0, {}}, {3.0, 1.0, {}}}), DomainError);
    CHECK_THROWS_AS(fit_powerlaw({{2.0, 1.0, {}}, {2.0, 3.0, {}}, {2.0, 2.0, {}}}), InputError);
}

TEST_CASE("g0 from damping: algebraic inverse and limits")
{
    const double kappa = two_pi * 2e6;
    const double om = two_pi * 1.3e6;
    const double delta = -two_pi * 1.5e6;
    const double g0 = two_pi * 1.2;
    const double gm = om / 1e9;
    std::vector<std::pair<double, double>> series;
    for (double n : {1e5, 4e5, 1e6, 2.2e6})
        series.emplace_back(n, gm + backaction::backaction_rates(g0, n, delta, kappa, om).gamma_opt);
    CHECK(infer_g0_from_damping(series, delta, kappa, om) == doctest::Approx(g0).epsilon(1e-9));

    const double k_small = two_pi * 1e3;
    CHECK(backaction::damping_kernel(-om, k_small, om) == doctest::Approx(4.0 / k_small).epsilon(1e-6));

    CHECK_THROWS_AS(infer_g0_from_damping(series, -delta, kappa, om), DomainError);
    CHECK_THROWS_AS(infer_g0_from_damping({series[0]}, delta, kappa, om), InputError);
    std::vector<std::pair<double, double>> falling = {{1e5, 2.0}, {2e5, 1.0}, {3e5, 0.5}};
    CHECK_THROWS_AS(infer_g0_from_damping(falling, delta, kappa, om), InputError);
}

TEST_CASE("gorodetsky calibration: noiseless round trip")
{
    SpectrumScene scene = base_scene();
    scene.n_averages = 1000000000;
    const auto truth = spectra::evaluate_scene(scene);
    const double omega_mod = truth.omega_eff + two_pi * 10.0 * truth.fwhm_hz();
    const double beta = 2.0 * scene.g0 * std::sqrt(truth.n_f) / omega_mod;
    scene.cal_tone = spectra::CalibrationTone{beta, omega_mod};
    SeriesOptions opt;
    opt.n_bins = 4096;
    const Spectrum s = synthesize_series_point(scene, opt);

    const GorodetskyResult r = gorodetsky_g0(s, beta, omega_mod, truth.n_th, truth.gamma_m);
    CHECK(r.g0 == doctest::Approx(scene.g0).epsilon(1e-3));
    CHECK(r.occupation == doctest::Approx(truth.n_f).epsilon(1e-3));

    const BathEstimate b = gorodetsky_bath(s, beta, omega_mod, scene.g0, scene.mech.omega_m, truth.gamma_m);
    CHECK(b.n_th == doctest::Approx(truth.n_th).epsilon(2e-3));
    CHECK(b.temperature
          == doctest::Approx(backaction::temperature_from_occupation(truth.n_th, scene.mech.omega_m)).epsilon(2e-3));
}

TEST_CASE("gorodetsky calibration: noisy round trip")
{
    int inside = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        SpectrumScene scene = base_scene();
        scene.rng_seed = seed;
        const auto truth = spectra::evaluate_scene(scene);
        const double omega_mod = truth.omega_eff + two_pi * 10.0 * truth.fwhm_hz();
        const double beta = 2.0 * scene.g0 * std::sqrt(truth.n_f) / omega_mod;
        scene.cal_tone = spectra::CalibrationTone{beta, omega_mod};
        SeriesOptions opt;
        opt.n_bins = 4096;
        const GorodetskyResult r = gorodetsky_g0(synthesize_series_point(scene, opt), beta, omega_mod, truth.n_th,
                                                 truth.gamma_m);
        inside += std::abs(r.g0 / scene.g0 - 1.0) <= 0.05;
    }
    CHECK(inside >= 19);
}

TEST_CASE("gorodetsky calibration: missing or overlapping tone")
{
    SpectrumScene scene = base_scene();
    const auto truth = spectra::evaluate_scene(scene);
    const double far = truth.omega_eff + two_pi * 10.0 * truth.fwhm_hz();
    const Spectrum plain = synthesize_series_point(scene);
    CHECK_THROWS_AS(gorodetsky_g0(plain, 1e-6, far, truth.n_th), InputError);

    const double near = truth.omega_eff + two_pi * 1.0 * truth.fwhm_hz();
    scene.cal_tone = spectra::CalibrationTone{1e-6, near};
    CHECK_THROWS_AS(gorodetsky_g0(synthesize_series_point(scene), 1e-6, near, truth.n_th), InputError);

    CHECK_THROWS_AS(gorodetsky_g0(plain, 1e-6, two_pi * 1.0, truth.n_th), InputError);
}

TEST_CASE("two-stage gorodetsky protocol")
{
    const SpectrumScene scene = base_scene();
    GorodetskyProtocol protocol;
    const GorodetskyOutcome out = run_gorodetsky_protocol(scene, protocol);
    CHECK(out.g0 == doctest::Approx(scene.g0).epsilon(0.05));
    CHECK(out.t_bath == doctest::Approx(0.643).epsilon(0.15));
}

TEST_CASE("pdh fit recovers the linewidth")
{
    const double kappa = two_pi * 2.0e6;
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto sweep = spectra::synthesize_error_sweep(kappa, 0.95 * kappa, two_pi * 20e6, 30e6, 601, 0.01, seed);
        const PdhFit fit = fit_pdh(sweep);
        CHECK(fit.converged);
        CHECK(fit.kappa == doctest::Approx(kappa).epsilon(0.02));
        CHECK(fit.kappa_err > 0.0);
    }
    spectra::ErrorSignalSweep tiny;
    tiny.detuning_hz = {0.0, 1.0};
    tiny.error = {0.0, 0.0};
    tiny.mod_freq_hz = 20e6;
    CHECK_THROWS_AS(fit_pdh(tiny), InputError);
}

TEST_CASE("cooling series: identities and per-point records")
{
    const SpectrumScene scene = base_scene();
    const auto powers = log_spaced(0.5e-6, 10e-6, 8);
    const std::vector<double> detunings = {-two_pi * 1.0e6, -two_pi * 1.5e6};
    const ThermometryReport report = run_cooling_series(scene, powers, detunings);
    CHECK(report.points.size() == powers.size() * detunings.size());
    CHECK(report.alpha - report.slope_s == 1.0);
    CHECK(report.per_detuning.size() == 2);
    for (const SeriesPoint& p : report.points) {
        CHECK(p.ok);
        CHECK(p.seed != 0);
        CHECK(p.a_over_p2 == doctest::Approx(p.fit.area / (p.power * p.power)).epsilon(1e-12));
        CHECK(p.frequency_shift_hz == doctest::Approx(p.fit.center - scene.mech.omega_m / two_pi).epsilon(1e-12));
    }
    // distinct, reproducible seeds per point
    CHECK(point_seed(7, 0) != point_seed(7, 1));
    CHECK(point_seed(7, 3) == point_seed(7, 3));
    const ThermometryReport again = run_cooling_series(scene, powers, detunings);
    CHECK(again.slope_s == report.slope_s);
}

TEST_CASE("cooling series: slopes for the heating presets")
{
    const auto powers = log_spaced(0.5e-6, 10e-6, 12);
    const std::vector<double> detunings = {-two_pi * 1.0e6, -two_pi * 1.5e6, -two_pi * 2.0e6};

    SpectrumScene none = base_scene();
    none.heating = heating::preset("none");
    const ThermometryReport r_none = run_cooling_series(none, powers, detunings);
    CHECK(r_none.slope_s == doctest::Approx(-1.0).epsilon(0.03));
    CHECK(r_none.g0_inferred == doctest::Approx(none.g0).epsilon(0.05));

    SpectrumScene measured = base_scene();
    measured.heating = heating::preset("measured");
    const ThermometryReport r_meas = run_cooling_series(measured, powers, detunings);
    CHECK(std::abs(r_meas.slope_s + 0.67) <= 0.05);
    CHECK(std::abs(r_meas.alpha - 0.33) <= 0.05);

    SpectrumScene lit = base_scene();
    lit.heating = heating::preset("literature");
    const ThermometryReport r_lit = run_cooling_series(lit, powers, detunings);
    CHECK(std::abs(r_lit.alpha - 0.55) <= 0.05);
}

TEST_CASE("cooling series: linewidth grows with power on noiseless data")
{
    SpectrumScene scene = base_scene();
    scene.n_averages = 1000000000;
    const auto powers = log_spaced(0.5e-6, 10e-6, 10);
    const ThermometryReport r = run_cooling_series(scene, powers, {-two_pi * 1.5e6});
    for (std::size_t i = 1; i < r.points.size(); ++i)
        CHECK(r.points[i].fit.fwhm > r.points[i - 1].fit.fwhm);
}

TEST_CASE("cooling series: spring shift changes sign across the sideband when resolved")
{
    SpectrumScene scene = base_scene();
    scene.kappa = two_pi * 0.2e6;
    scene.drive.kappa_ext = 0.95 * scene.kappa;
    scene.n_averages = 1000000000;
    scene.drive.input_power = 1e-7;
    const ThermometryReport r =
        run_cooling_series(scene, log_spaced(1e-7, 1e-6, 3), {-two_pi * 1.0e6, -two_pi * 2.0e6});
    double near = 0.0, far = 0.0;
    for (const SeriesPoint& p : r.points) {
        REQUIRE(p.ok);
        (p.detuning > -two_pi * 1.5e6 ? near : far) += p.frequency_shift_hz;
    }
    CHECK(near > 0.0);
    CHECK(far < 0.0);
}

TEST_CASE("cooling series: failures are recorded per point")
{
    SpectrumScene scene = base_scene();
    CHECK_THROWS_AS(run_cooling_series(scene, {2e-6, 1e-6}, {-two_pi * 1e6}), InputError);
    CHECK_THROWS_AS(run_cooling_series(scene, {}, {-two_pi * 1e6}), InputError);
    // blue detuning at high power: every point is unstable
    CHECK_THROWS_AS(run_cooling_series(scene, {1e-4, 2e-4, 4e-4}, {two_pi * 1.5e6}), NumericalError);
}
