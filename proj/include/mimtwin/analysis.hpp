#pragma once

#include "mimtwin/spectra.hpp"
#include "mimtwin/spectrum_io.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace mimtwin::analysis {

// Constant background plus a Lorentzian of integrated area `area`:
//   psd(f) = background + area / pi * (fwhm/2) / ((f - center)^2 + (fwhm/2)^2)
struct LorentzianFit {
    double center = 0.0;
    double fwhm = 0.0;
    double area = 0.0;
    double background = 0.0;
    double center_err = 0.0;
    double fwhm_err = 0.0;
    double area_err = 0.0;
    double background_err = 0.0;
    bool converged = false;
    double residual_norm = 0.0;
    int iterations = 0;
    double window_lo = 0.0;
    double window_hi = 0.0;

    double evaluate(double f) const;
};

struct LorentzianOptions {
    // Fit window in Hz; when empty the window is +/- window_linewidths around
    // the highest bin and is refined once with the fitted linewidth.
    std::optional<std::pair<double, double>> window;
    double window_linewidths = 20.0;
    // Bins ignored by peak detection and by the fit (e.g. a calibration tone).
    std::vector<std::size_t> exclude_bins;
    bool weighted = true;
    int max_iterations = 200;
};

LorentzianFit fit_lorentzian(const spectra::Spectrum& spectrum, const LorentzianOptions& options = {});

struct PowerLawPoint {
    double x = 0.0;
    double y = 0.0;
    std::optional<double> sigma_y;
};

struct PowerLawFit {
    double exponent_s = 0.0;
    double prefactor = 0.0;
    double sigma_s = 0.0;
    double r_squared = 0.0;
    std::size_t n_points = 0;
};

// Linear regression of ln y on ln x. Weighted when every point carries sigma_y
// and `weighted` is set; otherwise ordinary least squares.
PowerLawFit fit_powerlaw(const std::vector<PowerLawPoint>& points, bool weighted = false);

// Common exponent with an independent prefactor per group (fixed effects).
// The reported prefactor is that of the first group.
PowerLawFit fit_powerlaw_grouped(const std::vector<std::vector<PowerLawPoint>>& groups, bool weighted = false);

// g0 from the slope of Gamma_eff versus n_cav at fixed red detuning.
double infer_g0_from_damping(const std::vector<std::pair<double, double>>& series, double delta, double kappa,
                             double omega_m);

struct CalibrationMeasurement {
    LorentzianFit mechanical;
    double tone_area = 0.0;
    double tone_frequency = 0.0;
};

// Fits the mechanical peak with the tone bin masked and measures the tone area
// above the fitted model.
CalibrationMeasurement measure_calibration(const spectra::Spectrum& spectrum, double omega_mod);

struct GorodetskyResult {
    double g0 = 0.0;         // rad/s
    double occupation = 0.0; // phonons of the mode during the measurement
    CalibrationMeasurement measurement;
};

// g0^2 = beta^2 Omega_mod^2 / (4 n) * A_mech / A_cal, with n the mode occupation.
// When gamma_m is given the bath occupation n_th_assumed is reduced by the
// observed backaction, n = n_th Gamma_m / Gamma_eff.
GorodetskyResult gorodetsky_g0(const spectra::Spectrum& spectrum, double beta, double omega_mod, double n_th_assumed,
                               std::optional<double> gamma_m = std::nullopt);

struct BathEstimate {
    double n_mode = 0.0;
    double n_th = 0.0;
    double temperature = 0.0; // K
    CalibrationMeasurement measurement;
};

// Dual mode: known g0, infer the bath occupation and temperature.
BathEstimate gorodetsky_bath(const spectra::Spectrum& spectrum, double beta, double omega_mod, double g0,
                             double omega_m, std::optional<double> gamma_m = std::nullopt);

struct PdhFit {
    double kappa = 0.0; // rad/s
    double kappa_err = 0.0;
    double gain = 0.0;
    double offset = 0.0; // rad/s
    bool converged = false;
};

PdhFit fit_pdh(const spectra::ErrorSignalSweep& sweep);

struct SeriesPoint {
    double power = 0.0;    // input power, W
    double detuning = 0.0; // rad/s
    double n_cav = 0.0;
    LorentzianFit fit;
    double frequency_shift_hz = 0.0; // fitted center minus Omega_m / 2pi
    double a_over_p2 = 0.0;
    double a_over_p2_err = 0.0;
    bool ok = false;
    std::string error;
    spectra::SceneState truth;
    std::uint64_t seed = 0;
};

struct DetuningSummary {
    double detuning = 0.0;
    PowerLawFit slope;
    double g0 = 0.0;
    std::size_t converged_points = 0;
};

struct ThermometryReport {
    std::vector<SeriesPoint> points;
    std::vector<DetuningSummary> per_detuning;
    PowerLawFit shared_fit;    // common exponent, per-detuning prefactors
    PowerLawFit pooled_power;  // single regression on (P_in, A/P^2)
    PowerLawFit pooled_n_cav;  // single regression on (n_cav, A/P^2)
    double slope_s = 0.0;
    double sigma_s = 0.0;
    double alpha = 0.0;        // 1 + slope_s: decoherence rate exponent
    double g0_inferred = 0.0;  // rad/s
    double t_bath_estimate = std::numeric_limits<double>::quiet_NaN(); // K
};

struct SeriesOptions {
    std::size_t n_bins = 512;
    double span_linewidths = 60.0; // analyzer span around the expected resonance
    // Called with the point index and its synthesized spectrum.
    std::function<void(std::size_t, const spectra::Spectrum&)> on_spectrum;
};

// Seeds per point are derived from the template seed so each spectrum is
// reproducible on its own.
std::uint64_t point_seed(std::uint64_t base, std::size_t index);

spectra::Spectrum synthesize_series_point(const spectra::SpectrumScene& scene, const SeriesOptions& options = {});

ThermometryReport run_cooling_series(const spectra::SpectrumScene& scene_template, const std::vector<double>& powers,
                                     const std::vector<double>& detunings, const SeriesOptions& options = {});

// Fills the derived block of a report from its per-point records.
void summarize(ThermometryReport& report, double kappa, double omega_m);

struct GorodetskyProtocol {
    double t_calibration = 4.0; // K, stage one bath temperature (assumed known)
    double t_bath = 0.643;      // K, stage two bath temperature to be recovered
    double power = 2e-9;        // W, weak probe so backaction stays comparable to Gamma_m
    double detuning = 0.0;      // rad/s; 0 selects the template detuning
    double beta = 0.0;          // 0 selects a depth giving A_cal ~ A_mech
    double tone_offset_linewidths = 10.0;
    std::size_t n_bins = 1024;
};

struct GorodetskyOutcome {
    double g0 = 0.0;
    double n_th = 0.0;
    double t_bath = 0.0;
};

GorodetskyOutcome run_gorodetsky_protocol(const spectra::SpectrumScene& scene_template,
                                          const GorodetskyProtocol& protocol);

} // namespace mimtwin::analysis
