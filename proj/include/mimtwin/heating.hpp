#pragma once

#include <string_view>

namespace mimtwin::heating {

// Optical-absorption heating of the mechanical bath.
//   n_th(P)     = n_base (1 + heat_coeff (P / p_ref)^beta_temp)
//   gamma_m(n)  = gamma_ref (n / n_base)^beta_damp
// P is the intracavity (circulating) power.
struct HeatingModel {
    double n_base = 1.0;
    double p_ref = 1.0;
    double heat_coeff = 0.0;
    double beta_temp = 0.0;
    double beta_damp = 0.0;
    double gamma_ref = 1.0;

    void validate() const;
};

struct Decoherence {
    double rate = 0.0; // gamma_m * n_th, rad/s
    double tau = 0.0;  // s
};

double bath_occupation(double power, const HeatingModel& model);
double damping_of_bath(double n_th, const HeatingModel& model);
Decoherence decoherence(double power, const HeatingModel& model);

// Asymptotic log-log slope of the decoherence rate: beta_temp (1 + beta_damp).
double effective_exponent(const HeatingModel& model);

// Shipped presets. "literature": beta_temp 0.33, beta_damp 0.66. "measured":
// beta_temp 0.2, beta_damp 0.66. "none": heat_coeff 0. All share the
// 20 mK cryostat bath and reach 643 mK at p_ref for Omega_m/2pi = 1.30 MHz.
HeatingModel preset(std::string_view name);

} // namespace mimtwin::heating
