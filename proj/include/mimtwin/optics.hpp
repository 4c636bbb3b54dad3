#pragma once

#include "mimtwin/mechanics.hpp"

#include <complex>
#include <cstddef>
#include <vector>

namespace mimtwin::optics {

using complex = std::complex<double>;

// Plano-concave Fabry-Perot resonator. Lengths in meters; transmissions and
// internal loss are power fractions per round trip.
struct CavityGeometry {
    double length = 0.0;
    double roc = 0.0;
    double wavelength = 0.0;
    double t1 = 0.0; // input (more transmissive) mirror
    double t2 = 0.0;
    double internal_loss = 0.0;

    double total_loss() const { return t1 + t2 + internal_loss; }
    void validate() const;
};

struct MembraneSpec {
    double thickness = 0.0;
    double refractive_index = 1.0;
    double position = 0.0; // from the flat mirror
    double defect_diameter = 0.0;
    double tilt = 0.0;
    double mode_overlap = 1.0;

    void validate(const CavityGeometry& geom) const;
};

struct GaussianMode {
    double waist = 0.0;
    double waist_position = 0.0;
    double rayleigh_range = 0.0;
    double wavelength = 0.0;

    double spot_radius_at(double z) const;
};

struct CavityProps {
    double fsr_hz = 0.0;
    double kappa = 0.0;     // rad/s, full linewidth
    double kappa_ext = 0.0; // rad/s, input-mirror contribution
    double finesse = 0.0;
    GaussianMode mode;
};

CavityProps empty_cavity_props(const CavityGeometry& geom);

double free_spectral_range(double length);
double finesse_from_linewidth(double length, double kappa);

// Fundamental mode of a flat/curved resonator; the waist sits on the flat mirror.
GaussianMode plano_concave_mode(double length, double roc, double wavelength);

// Amplitude coefficients of the membrane reduced to an infinitesimally thin
// sheet located at the membrane's mid-plane (e^{ikz} convention).
struct SheetCoefficients {
    complex r{0.0, 0.0};
    complex t{1.0, 0.0};
};

SheetCoefficients membrane_coefficients(const MembraneSpec& mem, double wavelength);

// Lossless symmetric sheet with |r| = reflectivity; phases chosen as for a
// thin dielectric film (r = i|r|, t real positive up to a common phase).
SheetCoefficients ideal_sheet(double reflectivity);

// Resonance condition of a cavity with ideal end mirrors and a sheet at z.
// Mode N is labelled by its empty-cavity order kL = pi N; the resonance
// phase offset epsilon in (-pi/2, pi/2) gives k L = pi N + epsilon - phi_t.
class MimDispersion {
public:
    MimDispersion(double length, const SheetCoefficients& sheet);

    double phase_offset(long mode, double z) const;
    double omega(long mode, double z) const;
    // omega_N(z) - omega_N(empty cavity)
    double frequency_shift(long mode, double z) const;
    // (omega_{N+1} - omega_N) / 2pi - c / 2L, computed without cancellation.
    double delta_fsr_hz(long mode, double z) const;

    double length() const { return length_; }
    double reflectivity() const { return r_abs_; }

private:
    double length_;
    double r_abs_;
    double sign_;
    double phi_t_;
};

struct MimResonance {
    long mode = 0;
    double omega = 0.0;
    double delta_fsr_hz = 0.0;
};

long nearest_mode_index(const CavityGeometry& geom);

std::vector<MimResonance> mim_resonances(const CavityGeometry& geom, const MembraneSpec& mem,
                                         long first_mode, long last_mode);
std::vector<MimResonance> mim_resonances(const CavityGeometry& geom, const SheetCoefficients& sheet,
                                         double z, long first_mode, long last_mode);

struct CouplingSample {
    double z = 0.0;
    double g0 = 0.0;         // rad/s, |d omega/dz| x_zpf xi
    double domega_dz = 0.0;  // signed, rad/s per meter
};

struct CouplingProfile {
    std::vector<CouplingSample> samples;
    double g0_max_analytic = 0.0;
    long mode = 0;
};

// Symmetric-difference derivative of omega_N with respect to membrane
// position, Richardson-extrapolated from steps h and h/2.
double domega_dz(const MimDispersion& disp, long mode, double z, double step);

double g0_max_analytic(const CavityGeometry& geom, double reflectivity, double x_zpf,
                       double mode_overlap);

// Samples g0(z) over one half-wavelength starting at the membrane position.
CouplingProfile coupling_vs_position(const CavityGeometry& geom, const MembraneSpec& mem,
                                     const MechanicalMode& mech, std::size_t n_samples = 400);
CouplingProfile coupling_vs_position(const CavityGeometry& geom, const SheetCoefficients& sheet,
                                     double z_start, double x_zpf, double mode_overlap,
                                     std::size_t n_samples = 400);

// Power outside a circular aperture of diameter D for a Gaussian spot of
// radius w. A lower bound on the scattering loss of a patterned membrane.
double clipping_loss(double spot_radius, double defect_diameter);

// Tilt between membrane and mirror from the period of the back-reflection
// fringes. double_pass: theta = lambda / (2 period); single_pass: lambda / period.
double tilt_from_fringes(double wavelength, double fringe_period);
double tilt_from_fringes_single_pass(double wavelength, double fringe_period);

} // namespace mimtwin::optics
