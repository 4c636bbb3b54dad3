#include "mimtwin/spectra.hpp"

#include "mimtwin/constants.hpp"
#include "mimtwin/errors.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

namespace mimtwin::spectra {

using constants::pi;
using constants::two_pi;

void SpectrumScene::validate() const
{
    if (!(kappa > 0.0))
        throw DomainError("scene: kappa must be positive");
    if (!(fsr_hz > 0.0))
        throw DomainError("scene: fsr must be positive");
    mech.validate(1e-6);
    drive.validate(kappa);
    heating.validate();
    if (!(g0 >= 0.0))
        throw DomainError("scene: g0 must be non-negative");
    if (!(transduction_k > 0.0) || !(shot_coeff > 0.0))
        throw DomainError("scene: transduction_k and shot_coeff must be positive");
    if (n_averages < 1)
        throw DomainError("scene: n_averages must be >= 1");
}

double SceneState::center_hz() const
{
    return omega_eff / two_pi;
}

double SceneState::fwhm_hz() const
{
    return gamma_eff / two_pi;
}

SceneState evaluate_scene(const SpectrumScene& scene)
{
    scene.validate();
    SceneState s;
    s.n_cav = backaction::intracavity_photons(scene.drive, scene.kappa);
    s.intracavity_power = backaction::intracavity_power(s.n_cav, scene.drive.laser_omega, scene.fsr_hz);
    s.n_th = heating::bath_occupation(s.intracavity_power, scene.heating);
    s.gamma_m = heating::damping_of_bath(s.n_th, scene.heating);
    const auto rates =
        backaction::backaction_rates(scene.g0, s.n_cav, scene.drive.detuning, scene.kappa, scene.mech.omega_m);
    s.gamma_opt = rates.gamma_opt;
    s.spring_shift = rates.spring_shift;
    s.gamma_eff = s.gamma_m + s.gamma_opt;
    if (!(s.gamma_eff > 0.0))
        throw InstabilityError("scene: effective damping is not positive (blue-detuned instability)");
    s.omega_eff = scene.mech.omega_m + s.spring_shift;
    s.n_f = backaction::steady_state_occupation(s.gamma_m, s.n_th, s.gamma_opt);
    const double p = scene.drive.input_power;
    s.area = scene.transduction_k * p * p * s.n_f;
    s.background = scene.shot_coeff * p;
    return s;
}

Spectrum::Spectrum(std::vector<double> freq_hz, std::vector<double> psd, SpectrumMetadata meta)
    : freq_(std::move(freq_hz)), psd_(std::move(psd)), meta_(meta)
{
    if (freq_.size() != psd_.size())
        throw DomainError("spectrum: frequency and PSD columns differ in length");
    if (freq_.size() < 2)
        throw DomainError("spectrum: need at least two bins");
    check_grid(freq_);
    for (double v : psd_)
        if (!std::isfinite(v) || v < 0.0)
            throw DomainError("spectrum: PSD values must be finite and non-negative");
}

double Spectrum::bin_width() const
{
    return (freq_.back() - freq_.front()) / static_cast<double>(freq_.size() - 1);
}

void check_grid(std::span<const double> freq)
{
    if (freq.size() < 2)
        return;
    const double step = (freq.back() - freq.front()) / static_cast<double>(freq.size() - 1);
    if (!(step > 0.0) || !std::isfinite(step))
        throw DomainError("frequency grid must be strictly increasing");
    const double scale = std::max(std::abs(freq.front()), std::abs(freq.back()));
    const double tol = 1e-6 * step + 8.0 * std::numeric_limits<double>::epsilon() * scale;
    for (std::size_t i = 1; i < freq.size(); ++i) {
        const double d = freq[i] - freq[i - 1];
        if (!(d > 0.0) || std::abs(d - step) > tol)
            throw DomainError("frequency grid is not uniform at bin " + std::to_string(i));
    }
}

std::vector<double> uniform_grid(double f_start, double f_stop, std::size_t n_bins)
{
    if (n_bins < 2 || !(f_stop > f_start))
        throw DomainError("uniform_grid: need f_start < f_stop and at least two bins");
    std::vector<double> f(n_bins);
    const double step = (f_stop - f_start) / static_cast<double>(n_bins - 1);
    for (std::size_t i = 0; i < n_bins; ++i)
        f[i] = f_start + step * static_cast<double>(i);
    f.back() = f_stop;
    return f;
}

double mean_psd(const SceneState& state, double f)
{
    const double half = 0.5 * state.fwhm_hz();
    const double d = f - state.center_hz();
    return state.background + state.area / pi * half / (d * d + half * half);
}

Spectrum synthesize_spectrum(const SpectrumScene& scene, double f_start, double f_stop, std::size_t n_bins)
{
    const SceneState state = evaluate_scene(scene);
    if (n_bins < 64)
        throw DomainError("synthesize_spectrum: need at least 64 bins");
    if (!(f_start < state.center_hz() && state.center_hz() < f_stop))
        throw DomainError("synthesize_spectrum: mechanical resonance outside the frequency span");

    std::vector<double> freq = uniform_grid(f_start, f_stop, n_bins);
    const double rbw = (f_stop - f_start) / static_cast<double>(n_bins - 1);

    // Welch average of M periodograms: each bin is mean * chi2(2M) / 2M = mean * Gamma(M, 1/M).
    std::mt19937_64 rng(scene.rng_seed);
    std::gamma_distribution<double> averaging(static_cast<double>(scene.n_averages),
                                              1.0 / static_cast<double>(scene.n_averages));
    std::vector<double> psd(n_bins);
    for (std::size_t i = 0; i < n_bins; ++i)
        psd[i] = mean_psd(state, freq[i]) * averaging(rng);

    SpectrumMetadata meta;
    meta.rbw_hz = rbw;
    meta.power_w = scene.drive.input_power;
    meta.detuning_hz = scene.drive.detuning / two_pi;
    meta.seed = scene.rng_seed;
    meta.coarse_grid = state.fwhm_hz() < 3.0 * rbw;

    Spectrum out(std::move(freq), std::move(psd), meta);
    if (scene.cal_tone)
        return inject_calibration_tone(out, *scene.cal_tone, scene);
    return out;
}

double calibration_tone_area(const SpectrumScene& scene, const CalibrationTone& tone)
{
    if (!(scene.g0 > 0.0))
        throw DomainError("calibration tone: g0 must be positive");
    const double p = scene.drive.input_power;
    const double b = tone.beta * tone.omega_mod;
    return scene.transduction_k * p * p * b * b / (4.0 * scene.g0 * scene.g0);
}

Spectrum inject_calibration_tone(const Spectrum& spectrum, const CalibrationTone& tone, const SpectrumScene& scene)
{
    const auto f = spectrum.freq();
    const double f_mod = tone.omega_mod / two_pi;
    const double df = spectrum.bin_width();
    if (!(f_mod >= f.front() - 0.5 * df && f_mod <= f.back() + 0.5 * df))
        throw std::out_of_range("calibration tone at " + std::to_string(f_mod) + " Hz lies outside the grid");
    if (tone.beta == 0.0)
        return spectrum;

    const auto bin = static_cast<std::size_t>(std::lround((f_mod - f.front()) / df));
    std::vector<double> psd(spectrum.psd().begin(), spectrum.psd().end());
    psd[std::min(bin, psd.size() - 1)] += calibration_tone_area(scene, tone) / df;
    return Spectrum(std::vector<double>(f.begin(), f.end()), std::move(psd), spectrum.metadata());
}

ErrorSignalSweep synthesize_error_sweep(double kappa, double kappa_ext, double mod_freq, double span_hz,
                                        std::size_t n_points, double noise_rel, std::uint64_t seed)
{
    if (n_points < 16 || !(span_hz > 0.0))
        throw DomainError("synthesize_error_sweep: need a positive span and at least 16 points");
    ErrorSignalSweep sweep;
    sweep.detuning_hz = uniform_grid(-0.5 * span_hz, 0.5 * span_hz, n_points);
    sweep.mod_freq_hz = mod_freq / two_pi;
    sweep.kappa_ext_ratio = kappa_ext / kappa;
    sweep.seed = seed;
    std::vector<double> delta(n_points);
    for (std::size_t i = 0; i < n_points; ++i)
        delta[i] = two_pi * sweep.detuning_hz[i];
    sweep.error = backaction::pdh_error_signal(delta, kappa, kappa_ext, mod_freq);

    double peak = 0.0;
    for (double e : sweep.error)
        peak = std::max(peak, std::abs(e));
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, noise_rel * peak);
    if (noise_rel > 0.0)
        for (double& e : sweep.error)
            e += noise(rng);
    return sweep;
}

} // namespace mimtwin::spectra
