#pragma once

namespace mimtwin {

// Soft-clamped defect mode. Rates are angular (rad/s).
struct MechanicalMode {
    double omega_m = 0.0;
    double gamma_m_intrinsic = 0.0;
    double m_eff = 0.0;
    double x_zpf = 0.0;
    double quality_factor = 0.0;

    // Builds a consistent mode from frequency, Q and effective mass.
    static MechanicalMode from_mass(double omega_m, double quality_factor, double m_eff);

    // Throws DomainError unless every field is positive, Q = omega/gamma and
    // x_zpf = sqrt(hbar / (2 m omega)) hold to rel_tol.
    void validate(double rel_tol = 1e-9) const;
};

double zero_point_amplitude(double m_eff, double omega_m);

} // namespace mimtwin
