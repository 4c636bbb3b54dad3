#pragma once

#include "mimtwin/backaction.hpp"
#include "mimtwin/heating.hpp"
#include "mimtwin/mechanics.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace mimtwin::spectra {

// Phase-modulation tone used for g0 calibration.
struct CalibrationTone {
    double beta = 0.0;      // modulation depth, rad
    double omega_mod = 0.0; // rad/s
};

// Everything needed to predict a direct-detection photocurrent PSD.
struct SpectrumScene {
    double kappa = 0.0;     // rad/s
    double fsr_hz = 0.0;    // sets the intracavity power that drives heating
    MechanicalMode mech;
    backaction::OpticalDrive drive;
    heating::HeatingModel heating;
    double g0 = 0.0;        // rad/s
    double transduction_k = 1.0; // PSD area per (W^2 phonon)
    double shot_coeff = 1.0;     // PSD per W
    std::optional<CalibrationTone> cal_tone;
    int n_averages = 100;
    std::uint64_t rng_seed = 0;

    void validate() const;
};

// Noiseless predictions of a scene.
struct SceneState {
    double n_cav = 0.0;
    double intracavity_power = 0.0;
    double n_th = 0.0;
    double gamma_m = 0.0;
    double gamma_opt = 0.0;
    double spring_shift = 0.0;
    double gamma_eff = 0.0;
    double omega_eff = 0.0;
    double n_f = 0.0;
    double area = 0.0;       // K P^2 n_f
    double background = 0.0; // shot_coeff P

    double center_hz() const;
    double fwhm_hz() const;
};

SceneState evaluate_scene(const SpectrumScene& scene);

struct SpectrumMetadata {
    double rbw_hz = 0.0;
    double power_w = 0.0;
    double detuning_hz = 0.0;
    std::uint64_t seed = 0;
    bool coarse_grid = false; // linewidth spans fewer than three bins

    bool operator==(const SpectrumMetadata&) const = default;
};

// One-sided PSD on a uniform, strictly increasing frequency grid.
class Spectrum {
public:
    Spectrum(std::vector<double> freq_hz, std::vector<double> psd, SpectrumMetadata meta);

    std::span<const double> freq() const { return freq_; }
    std::span<const double> psd() const { return psd_; }
    const SpectrumMetadata& metadata() const { return meta_; }
    std::size_t size() const { return freq_.size(); }
    double bin_width() const;

    bool operator==(const Spectrum&) const = default;

private:
    std::vector<double> freq_;
    std::vector<double> psd_;
    SpectrumMetadata meta_;
};

// Throws DomainError unless the grid is uniform and increasing and all PSD values
// are finite and non-negative.
void check_grid(std::span<const double> freq);

std::vector<double> uniform_grid(double f_start, double f_stop, std::size_t n_bins);

// Mean PSD of a scene at frequency f (Hz), without the calibration tone.
double mean_psd(const SceneState& state, double f);

Spectrum synthesize_spectrum(const SpectrumScene& scene, double f_start, double f_stop, std::size_t n_bins);

// Integrated area of the calibration tone: K P^2 beta^2 Omega_mod^2 / (4 g0^2).
double calibration_tone_area(const SpectrumScene& scene, const CalibrationTone& tone);

// PDH error-signal sweep: detuning axis (Hz) and demodulated error signal.
struct ErrorSignalSweep {
    std::vector<double> detuning_hz;
    std::vector<double> error;
    double mod_freq_hz = 0.0;
    double kappa_ext_ratio = 1.0;
    std::uint64_t seed = 0;

    bool operator==(const ErrorSignalSweep&) const = default;
};

// Synthesizes an error-signal sweep over +/- span_hz / 2 with additive
// Gaussian noise of standard deviation noise_rel * max|error|.
ErrorSignalSweep synthesize_error_sweep(double kappa, double kappa_ext, double mod_freq, double span_hz,
                                        std::size_t n_points, double noise_rel, std::uint64_t seed);

// Adds the coherent tone into the single bin nearest omega_mod / 2pi.
Spectrum inject_calibration_tone(const Spectrum& spectrum, const CalibrationTone& tone, const SpectrumScene& scene);

} // namespace mimtwin::spectra
