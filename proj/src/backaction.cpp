#include "mimtwin/backaction.hpp"

#include "mimtwin/constants.hpp"
#include "mimtwin/errors.hpp"

#include <cmath>
#include <complex>

namespace mimtwin::backaction {

namespace {

double lorentz(double x, double kappa)
{
    return kappa / (0.25 * kappa * kappa + x * x);
}

} // namespace

void OpticalDrive::validate(double kappa) const
{
    if (!(input_power >= 0.0))
        throw DomainError("drive: input power must be non-negative");
    if (!(mode_match > 0.0 && mode_match <= 1.0))
        throw DomainError("drive: mode matching must lie in (0, 1]");
    if (!(kappa_ext >= 0.0) || kappa_ext > kappa)
        throw DomainError("drive: kappa_ext must lie in [0, kappa]");
    if (!(laser_omega > 0.0))
        throw DomainError("drive: laser frequency must be positive");
}

double intracavity_photons(const OpticalDrive& drive, double kappa)
{
    if (!(kappa > 0.0))
        throw DomainError("intracavity_photons: kappa must be positive");
    const double photon_flux = drive.mode_match * drive.input_power / (constants::hbar * drive.laser_omega);
    return drive.kappa_ext * photon_flux / (0.25 * kappa * kappa + drive.detuning * drive.detuning);
}

double intracavity_power(double n_cav, double laser_omega, double fsr_hz)
{
    return n_cav * constants::hbar * laser_omega * fsr_hz;
}

double damping_kernel(double delta, double kappa, double omega_m)
{
    return lorentz(delta + omega_m, kappa) - lorentz(delta - omega_m, kappa);
}

double spring_kernel(double delta, double kappa, double omega_m)
{
    const double q = 0.25 * kappa * kappa;
    const double up = delta + omega_m;
    const double down = delta - omega_m;
    return up / (q + up * up) + down / (q + down * down);
}

BackactionRates backaction_rates(double g0, double n_cav, double delta, double kappa, double omega_m)
{
    if (!(kappa > 0.0) || !(omega_m > 0.0))
        throw DomainError("backaction_rates: kappa and omega_m must be positive");
    const double g2n = g0 * g0 * n_cav;
    return {g2n * damping_kernel(delta, kappa, omega_m), g2n * spring_kernel(delta, kappa, omega_m)};
}

double steady_state_occupation(double gamma_m, double n_th, double gamma_opt, bool include_quantum_limit,
                               double kappa, double delta, double omega_m)
{
    if (!(gamma_m > 0.0))
        throw DomainError("steady_state_occupation: gamma_m must be positive");
    const double gamma_eff = gamma_opt + gamma_m;
    if (!(gamma_eff > 0.0))
        throw InstabilityError("steady_state_occupation: optical anti-damping exceeds intrinsic damping");
    double numerator = gamma_m * n_th;
    if (include_quantum_limit) {
        if (!(kappa > 0.0) || !(omega_m > 0.0))
            throw DomainError("steady_state_occupation: quantum limit needs kappa and omega_m");
        const double a_minus = lorentz(delta + omega_m, kappa);
        const double a_plus = lorentz(delta - omega_m, kappa);
        // gamma_opt * n_min = g0^2 n_cav A+; undefined at delta = 0 where gamma_opt vanishes.
        if (a_minus != a_plus)
            numerator += gamma_opt * a_plus / (a_minus - a_plus);
    }
    return numerator / gamma_eff;
}

BackactionResult evaluate(const OpticalDrive& drive, double kappa, double g0, double omega_m, double gamma_m,
                          double n_th)
{
    BackactionResult out;
    out.n_cav = intracavity_photons(drive, kappa);
    const BackactionRates rates = backaction_rates(g0, out.n_cav, drive.detuning, kappa, omega_m);
    out.gamma_opt = rates.gamma_opt;
    out.spring_shift = rates.spring_shift;
    out.gamma_eff = gamma_m + rates.gamma_opt;
    out.n_f = steady_state_occupation(gamma_m, n_th, rates.gamma_opt);
    return out;
}

double occupation_from_temperature(double temperature, double omega_m)
{
    if (!(temperature >= 0.0))
        throw DomainError("occupation_from_temperature: temperature must be non-negative");
    if (temperature == 0.0)
        return 0.0;
    return 1.0 / std::expm1(constants::hbar * omega_m / (constants::boltzmann * temperature));
}

double temperature_from_occupation(double n_th, double omega_m)
{
    if (!(n_th >= 0.0))
        throw DomainError("temperature_from_occupation: occupation must be non-negative");
    if (n_th == 0.0)
        return 0.0;
    return constants::hbar * omega_m / (constants::boltzmann * std::log1p(1.0 / n_th));
}

double pdh_error(double delta, double kappa, double kappa_ext, double mod_freq)
{
    using cplx = std::complex<double>;
    const auto reflection = [&](double d) { return 1.0 - kappa_ext / cplx(0.5 * kappa, -d); };
    const cplx carrier = reflection(delta);
    const cplx beat = carrier * std::conj(reflection(delta - mod_freq))
                      - std::conj(carrier) * reflection(delta + mod_freq);
    return beat.imag();
}

std::vector<double> pdh_error_signal(std::span<const double> delta_sweep, double kappa, double kappa_ext,
                                     double mod_freq)
{
    std::vector<double> out;
    out.reserve(delta_sweep.size());
    for (double d : delta_sweep)
        out.push_back(pdh_error(d, kappa, kappa_ext, mod_freq));
    return out;
}

} // namespace mimtwin::backaction
