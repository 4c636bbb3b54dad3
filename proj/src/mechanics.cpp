#include "mimtwin/mechanics.hpp"

#include "mimtwin/constants.hpp"
#include "mimtwin/errors.hpp"

#include <cmath>

namespace mimtwin {

double zero_point_amplitude(double m_eff, double omega_m)
{
    return std::sqrt(constants::hbar / (2.0 * m_eff * omega_m));
}

MechanicalMode MechanicalMode::from_mass(double omega_m, double quality_factor, double m_eff)
{
    MechanicalMode mode;
    mode.omega_m = omega_m;
    mode.quality_factor = quality_factor;
    mode.gamma_m_intrinsic = omega_m / quality_factor;
    mode.m_eff = m_eff;
    mode.x_zpf = zero_point_amplitude(m_eff, omega_m);
    mode.validate();
    return mode;
}

void MechanicalMode::validate(double rel_tol) const
{
    if (!(omega_m > 0.0) || !(gamma_m_intrinsic > 0.0) || !(m_eff > 0.0) || !(x_zpf > 0.0)
        || !(quality_factor > 0.0))
        throw DomainError("mechanical mode: all parameters must be positive");
    const double q = omega_m / gamma_m_intrinsic;
    if (std::abs(q - quality_factor) > rel_tol * quality_factor)
        throw DomainError("mechanical mode: quality_factor inconsistent with omega_m / gamma_m");
    const double x = zero_point_amplitude(m_eff, omega_m);
    if (std::abs(x - x_zpf) > rel_tol * x)
        throw DomainError("mechanical mode: x_zpf inconsistent with m_eff and omega_m");
}

} // namespace mimtwin
