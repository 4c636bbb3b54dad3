#include "mimtwin/analysis.hpp"
#include "mimtwin/config.hpp"
#include "mimtwin/constants.hpp"
#include "mimtwin/errors.hpp"
#include "mimtwin/spectra.hpp"
#include "mimtwin/spectrum_io.hpp"

#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

using namespace mimtwin;
using namespace mimtwin::spectra;
using constants::pi;
using constants::two_pi;

namespace {

SpectrumScene base_scene()
{
    return config::preset("paper-fig5").scene_template();
}

// Analyzer span of `linewidths` effective linewidths around the resonance.
std::pair<double, double> span_of(const SpectrumScene& scene, double linewidths)
{
    const SceneState s = evaluate_scene(scene);
    return {s.center_hz() - 0.5 * linewidths * s.fwhm_hz(), s.center_hz() + 0.5 * linewidths * s.fwhm_hz()};
}

std::string rewrite(const Spectrum& s, const std::string& from, const std::string& to)
{
    std::ostringstream os;
    write_spectrum(os, s);
    std::string text = os.str();
    const auto at = text.find(from);
    REQUIRE(at != std::string::npos);
    text.replace(at, from.size(), to);
    return text;
}

std::size_t line_of(const std::string& text, const std::string& needle)
{
    const auto at = text.find(needle);
    return static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<long>(at), '\n')) + 1;
}

} // namespace

TEST_CASE("scene state follows the backaction and heating models")
{
    const SpectrumScene scene = base_scene();
    const SceneState s = evaluate_scene(scene);
    CHECK(s.gamma_eff == doctest::Approx(s.gamma_m + s.gamma_opt).epsilon(1e-15));
    CHECK(s.omega_eff == doctest::Approx(scene.mech.omega_m + s.spring_shift).epsilon(1e-15));
    CHECK(s.n_f * s.gamma_eff == doctest::Approx(s.gamma_m * s.n_th).epsilon(1e-12));
    const double p = scene.drive.input_power;
    CHECK(s.area == doctest::Approx(scene.transduction_k * p * p * s.n_f).epsilon(1e-15));
    CHECK(s.background == doctest::Approx(scene.shot_coeff * p).epsilon(1e-15));
    CHECK(s.n_th >= scene.heating.n_base);
}

TEST_CASE("flat spectrum when the mechanical signal vanishes")
{
    SpectrumScene scene = base_scene();
    scene.transduction_k = 1e-300;
    scene.n_averages = 100000000;
    const auto [lo, hi] = span_of(scene, 60.0);
    const Spectrum s = synthesize_spectrum(scene, lo, hi, 256);
    for (double v : s.psd())
        CHECK(v == doctest::Approx(scene.drive.input_power).epsilon(1e-3));
}

TEST_CASE("ensemble mean converges to the analytic PSD")
{
    SpectrumScene scene = base_scene();
    scene.n_averages = 400;
    const auto [lo, hi] = span_of(scene, 60.0);
    const std::size_t n = 256;
    std::vector<double> mean(n, 0.0);
    const int seeds = 200;
    for (int k = 0; k < seeds; ++k) {
        scene.rng_seed = 1000 + static_cast<std::uint64_t>(k);
        const Spectrum s = synthesize_spectrum(scene, lo, hi, n);
        for (std::size_t i = 0; i < n; ++i)
            mean[i] += s.psd()[i] / seeds;
    }
    const SceneState state = evaluate_scene(scene);
    const auto f = uniform_grid(lo, hi, n);
    for (std::size_t i = 0; i < n; ++i) {
        // closed form written out independently of mean_psd
        const double half = 0.5 * state.gamma_eff / two_pi;
        const double d = f[i] - state.omega_eff / two_pi;
        const double expected = scene.shot_coeff * scene.drive.input_power + state.area / pi * half / (d * d + half * half);
        CHECK(mean[i] == doctest::Approx(expected).epsilon(0.02));
    }
}

TEST_CASE("integrated Lorentzian recovers the area")
{
    const SpectrumScene scene = base_scene();
    const SceneState state = evaluate_scene(scene);
    const auto [lo, hi] = span_of(scene, 100.0);
    const auto f = uniform_grid(lo, hi, 20001);
    double integral = 0.0;
    for (std::size_t i = 1; i < f.size(); ++i)
        integral += 0.5 * (f[i] - f[i - 1])
                    * (mean_psd(state, f[i]) + mean_psd(state, f[i - 1]) - 2.0 * state.background);
    CHECK(integral == doctest::Approx(state.area).epsilon(0.01));
}

TEST_CASE("reproducible for a fixed seed")
{
    SpectrumScene scene = base_scene();
    const auto [lo, hi] = span_of(scene, 60.0);
    scene.rng_seed = 77;
    const Spectrum a = synthesize_spectrum(scene, lo, hi, 512);
    const Spectrum b = synthesize_spectrum(scene, lo, hi, 512);
    CHECK(a == b);
    std::ostringstream oa, ob;
    write_spectrum(oa, a);
    write_spectrum(ob, b);
    CHECK(oa.str() == ob.str());
    scene.rng_seed = 78;
    CHECK_FALSE(synthesize_spectrum(scene, lo, hi, 512) == a);
}

TEST_CASE("metadata and the coarse-grid flag")
{
    SpectrumScene scene = base_scene();
    auto [lo, hi] = span_of(scene, 60.0);
    const Spectrum fine = synthesize_spectrum(scene, lo, hi, 512);
    CHECK_FALSE(fine.metadata().coarse_grid);
    CHECK(fine.metadata().power_w == scene.drive.input_power);
    CHECK(fine.metadata().detuning_hz == doctest::Approx(scene.drive.detuning / two_pi).epsilon(1e-15));
    CHECK(fine.metadata().rbw_hz == doctest::Approx(fine.bin_width()).epsilon(1e-12));
    std::tie(lo, hi) = span_of(scene, 1000.0);
    CHECK(synthesize_spectrum(scene, lo, hi, 128).metadata().coarse_grid);
}

TEST_CASE("synthesis preconditions")
{
    SpectrumScene scene = base_scene();
    const auto [lo, hi] = span_of(scene, 60.0);
    CHECK_THROWS_AS(synthesize_spectrum(scene, lo, hi, 63), DomainError);
    CHECK_THROWS_AS(synthesize_spectrum(scene, hi, hi + 1e3, 512), DomainError);
    scene.n_averages = 0;
    CHECK_THROWS_AS(synthesize_spectrum(scene, lo, hi, 512), DomainError);

    SpectrumScene blue = base_scene();
    blue.drive.detuning = -blue.drive.detuning;
    blue.drive.input_power = 1e-4;
    CHECK_THROWS_AS(evaluate_scene(blue), InstabilityError);
}

TEST_CASE("background is linear in power")
{
    std::vector<analysis::PowerLawPoint> points;
    for (double p = 1e-8; p <= 1.0001e-5; p *= std::pow(10.0, 0.25)) {
        SpectrumScene scene = base_scene();
        scene.drive.input_power = p;
        scene.n_averages = 100000000;
        analysis::SeriesOptions opt;
        const Spectrum s = analysis::synthesize_series_point(scene, opt);
        const auto fit = analysis::fit_lorentzian(s);
        REQUIRE(fit.converged);
        points.push_back({p, fit.background, std::nullopt});
    }
    const auto law = analysis::fit_powerlaw(points);
    CHECK(law.exponent_s == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("fitted linewidth tracks the effective damping")
{
    // 8192 bins over 60 linewidths puts the per-spectrum scatter near 0.5%
    analysis::SeriesOptions opt;
    opt.n_bins = 8192;
    double bias = 0.0;
    const int seeds = 20;
    for (int seed = 1; seed <= seeds; ++seed) {
        SpectrumScene scene = base_scene();
        scene.rng_seed = static_cast<std::uint64_t>(seed);
        const SceneState state = evaluate_scene(scene);
        const auto fit = analysis::fit_lorentzian(analysis::synthesize_series_point(scene, opt));
        REQUIRE(fit.converged);
        CHECK(fit.fwhm == doctest::Approx(state.fwhm_hz()).epsilon(0.02));
        bias += (fit.fwhm / state.fwhm_hz() - 1.0) / seeds;
    }
    CHECK(std::abs(bias) < 0.005);
}

TEST_CASE("calibration tone")
{
    SpectrumScene scene = base_scene();
    const SceneState state = evaluate_scene(scene);
    const auto [lo, hi] = span_of(scene, 60.0);
    const Spectrum plain = synthesize_spectrum(scene, lo, hi, 512);
    const double omega_mod = state.omega_eff + two_pi * 10.0 * state.fwhm_hz();

    CHECK(inject_calibration_tone(plain, {0.0, omega_mod}, scene) == plain);

    const auto added = [&](double beta) {
        const Spectrum s = inject_calibration_tone(plain, {beta, omega_mod}, scene);
        double sum = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i)
            sum += (s.psd()[i] - plain.psd()[i]) * s.bin_width();
        return sum;
    };
    const double a1 = added(1e-4);
    CHECK(a1 == doctest::Approx(calibration_tone_area(scene, {1e-4, omega_mod})).epsilon(1e-9));
    CHECK(added(2e-4) / a1 == doctest::Approx(4.0).epsilon(1e-9));

    // exactly one bin changes
    const Spectrum toned = inject_calibration_tone(plain, {1e-4, omega_mod}, scene);
    int changed = 0;
    for (std::size_t i = 0; i < toned.size(); ++i)
        changed += toned.psd()[i] != plain.psd()[i];
    CHECK(changed == 1);

    CHECK_THROWS_AS(inject_calibration_tone(plain, {1e-4, two_pi * (hi + 1e4)}, scene), std::out_of_range);
}

TEST_CASE("error-signal sweep")
{
    const double kappa = two_pi * 2e6;
    const auto clean = synthesize_error_sweep(kappa, 0.95 * kappa, two_pi * 20e6, 30e6, 601, 0.0, 4);
    CHECK(clean.detuning_hz.size() == 601);
    CHECK(clean.detuning_hz.front() == doctest::Approx(-15e6));
    CHECK(std::abs(clean.error[300]) < 1e-12);
    const auto a = synthesize_error_sweep(kappa, 0.95 * kappa, two_pi * 20e6, 30e6, 601, 0.01, 4);
    const auto b = synthesize_error_sweep(kappa, 0.95 * kappa, two_pi * 20e6, 30e6, 601, 0.01, 4);
    CHECK(a == b);
    CHECK_FALSE(a == clean);
    CHECK_THROWS_AS(synthesize_error_sweep(kappa, kappa, two_pi * 20e6, 30e6, 8, 0.0, 4), DomainError);
}

TEST_CASE("spectrum file: lossless round trip")
{
    SpectrumScene scene = base_scene();
    scene.rng_seed = 12345678901234567ull;
    const auto [lo, hi] = span_of(scene, 60.0);
    const Spectrum s = synthesize_spectrum(scene, lo, hi, 512);
    std::stringstream io;
    write_spectrum(io, s);
    CHECK(read_spectrum(io) == s);
}

TEST_CASE("spectrum file: rejected inputs carry line numbers")
{
    SpectrumScene scene = base_scene();
    const auto [lo, hi] = span_of(scene, 60.0);
    const Spectrum s = synthesize_spectrum(scene, lo, hi, 64);
    std::ostringstream os;
    write_spectrum(os, s);
    const std::string text = os.str();

    // negative PSD on the fifth data row
    std::istringstream lines(text);
    std::string line, target;
    int data_rows = 0;
    while (std::getline(lines, line))
        if (!line.empty() && line[0] != '#' && line.rfind("freq_hz", 0) != 0 && ++data_rows == 5)
            target = line;
    const std::string bad_row = target.substr(0, target.find(',') + 1) + "-1";
    const std::string negative = rewrite(s, target, bad_row);
    try {
        std::istringstream is(negative);
        read_spectrum(is);
        FAIL("negative PSD accepted");
    } catch (const ParseError& e) {
        CHECK(e.line() == line_of(negative, bad_row));
        CHECK(std::string(e.what()).find("negative") != std::string::npos);
    }

    // non-uniform grid
    const std::string shifted = rewrite(s, target, "1," + target.substr(target.find(',') + 1));
    std::istringstream is1(shifted);
    CHECK_THROWS_AS(read_spectrum(is1), ParseError);

    // unknown header key
    const std::string unknown = rewrite(s, "# seed=", "# sead=");
    try {
        std::istringstream is(unknown);
        read_spectrum(is);
        FAIL("unknown key accepted");
    } catch (const ParseError& e) {
        CHECK(e.line() == line_of(unknown, "# sead="));
    }

    const std::string garbled = rewrite(s, "# rbw_hz=", "# rbw_hz=x");
    std::istringstream is2(garbled);
    CHECK_THROWS_AS(read_spectrum(is2), ParseError);

    std::istringstream is3("freq_hz,psd\n1,2\n2,3\n");
    CHECK_THROWS_AS(read_spectrum(is3), ParseError);
}

TEST_CASE("spectrum file: a million bins round-trip within a second")
{
    std::vector<double> f = uniform_grid(1.0e6, 1.6e6, 1000000);
    std::vector<double> p(f.size());
    for (std::size_t i = 0; i < p.size(); ++i)
        p[i] = 1.0 + 1e-3 * static_cast<double>(i % 977);
    const Spectrum s(std::move(f), std::move(p), {0.6, 5e-6, -1.5e6, 9, false});
    const auto start = std::chrono::steady_clock::now();
    std::stringstream io;
    write_spectrum(io, s);
    const Spectrum back = read_spectrum(io);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    CHECK(back == s);
    CHECK(seconds < 1.0);
}

TEST_CASE("error-sweep file round trip")
{
    const double kappa = two_pi * 2e6;
    const auto sweep = synthesize_error_sweep(kappa, 0.95 * kappa, two_pi * 20e6, 30e6, 101, 0.01, 8);
    std::stringstream io;
    write_error_sweep(io, sweep);
    CHECK(read_error_sweep(io) == sweep);
    std::stringstream wrong;
    write_spectrum(wrong, Spectrum({1.0, 2.0}, {1.0, 1.0}, {}));
    CHECK_THROWS_AS(read_error_sweep(wrong), ParseError);
}

TEST_CASE("format_double is shortest round-trip")
{
    for (double v : {0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-300, 0.0}) {
        const std::string s = format_double(v);
        CHECK(std::stod(s) == v);
    }
    CHECK(format_double(0.1) == "0.1");
}
