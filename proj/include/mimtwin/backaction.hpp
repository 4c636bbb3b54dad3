#pragma once

#include <span>
#include <vector>

namespace mimtwin::backaction {

// Laser drive. Detuning follows delta = omega_L - omega_c (red detuning < 0).
struct OpticalDrive {
    double input_power = 0.0;  // W
    double detuning = 0.0;     // rad/s
    double mode_match = 1.0;   // eta in (0, 1]
    double kappa_ext = 0.0;    // rad/s
    double laser_omega = 0.0;  // rad/s

    void validate(double kappa) const;
};

struct BackactionRates {
    double gamma_opt = 0.0;    // rad/s
    double spring_shift = 0.0; // rad/s
};

struct BackactionResult {
    double n_cav = 0.0;
    double gamma_opt = 0.0;
    double spring_shift = 0.0;
    double gamma_eff = 0.0;
    double n_f = 0.0;
};

double intracavity_photons(const OpticalDrive& drive, double kappa);

// Circulating power for n_cav photons: n hbar omega FSR.
double intracavity_power(double n_cav, double laser_omega, double fsr_hz);

// Anti-Stokes minus Stokes Lorentzian weights, per unit g0^2 n_cav.
double damping_kernel(double delta, double kappa, double omega_m);
double spring_kernel(double delta, double kappa, double omega_m);

BackactionRates backaction_rates(double g0, double n_cav, double delta, double kappa, double omega_m);

// n_f = Gamma_m n_th / (Gamma_opt + Gamma_m). With include_quantum_limit the
// sideband-cooling floor n_min = A+ / (A- - A+) is added with weight Gamma_opt.
double steady_state_occupation(double gamma_m, double n_th, double gamma_opt, bool include_quantum_limit = false,
                               double kappa = 0.0, double delta = 0.0, double omega_m = 0.0);

BackactionResult evaluate(const OpticalDrive& drive, double kappa, double g0, double omega_m, double gamma_m,
                          double n_th);

// Bose-Einstein occupation of a mode at frequency omega_m.
double occupation_from_temperature(double temperature, double omega_m);
double temperature_from_occupation(double n_th, double omega_m);

// Ideal PDH error signal from the reflection R = 1 - kappa_ext / (kappa/2 - i delta).
double pdh_error(double delta, double kappa, double kappa_ext, double mod_freq);
std::vector<double> pdh_error_signal(std::span<const double> delta_sweep, double kappa, double kappa_ext,
                                     double mod_freq);

} // namespace mimtwin::backaction
