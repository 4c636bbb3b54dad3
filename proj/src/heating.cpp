#include "mimtwin/heating.hpp"

#include "mimtwin/backaction.hpp"
#include "mimtwin/constants.hpp"
#include "mimtwin/errors.hpp"

#include <cmath>
#include <string>

namespace mimtwin::heating {

void HeatingModel::validate() const
{
    if (!(n_base > 0.0))
        throw DomainError("heating: n_base must be positive");
    if (!(p_ref > 0.0))
        throw DomainError("heating: p_ref must be positive");
    if (!(heat_coeff >= 0.0))
        throw DomainError("heating: heat_coeff must be non-negative");
    if (!(beta_temp >= 0.0) || !(beta_damp >= 0.0))
        throw DomainError("heating: exponents must be non-negative");
    if (!(gamma_ref > 0.0))
        throw DomainError("heating: gamma_ref must be positive");
}

double bath_occupation(double power, const HeatingModel& model)
{
    if (!(power >= 0.0))
        throw DomainError("bath_occupation: power must be non-negative");
    if (model.heat_coeff == 0.0 || power == 0.0)
        return model.n_base;
    return model.n_base * (1.0 + model.heat_coeff * std::pow(power / model.p_ref, model.beta_temp));
}

double damping_of_bath(double n_th, const HeatingModel& model)
{
    if (!(n_th > 0.0))
        throw DomainError("damping_of_bath: occupation must be positive");
    return model.gamma_ref * std::pow(n_th / model.n_base, model.beta_damp);
}

Decoherence decoherence(double power, const HeatingModel& model)
{
    const double n_th = bath_occupation(power, model);
    Decoherence out;
    out.rate = damping_of_bath(n_th, model) * n_th;
    out.tau = 1.0 / out.rate;
    return out;
}

double effective_exponent(const HeatingModel& model)
{
    return model.beta_temp * (1.0 + model.beta_damp);
}

HeatingModel preset(std::string_view name)
{
    const double omega_m = constants::two_pi * 1.30e6;
    const double n_cryostat = backaction::occupation_from_temperature(0.020, omega_m);
    const double n_hot = backaction::occupation_from_temperature(0.643, omega_m);

    HeatingModel model;
    model.n_base = n_cryostat;
    // 2.2e6 photons at 805 nm in a 24 mm cavity
    model.p_ref = 3.39e-3;
    model.heat_coeff = n_hot / n_cryostat - 1.0;
    model.beta_damp = 0.66;
    model.gamma_ref = omega_m / 1e9;

    if (name == "measured")
        model.beta_temp = 0.2;
    else if (name == "literature")
        model.beta_temp = 0.33;
    else if (name == "none") {
        model.beta_temp = 0.2;
        model.heat_coeff = 0.0;
    } else
        throw DomainError("heating: unknown preset '" + std::string(name) + "'");
    return model;
}

} // namespace mimtwin::heating
