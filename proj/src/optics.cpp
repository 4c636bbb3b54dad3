#include "mimtwin/optics.hpp"

#include "mimtwin/constants.hpp"
#include "mimtwin/errors.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <string>

namespace mimtwin::optics {

using constants::pi;
using constants::speed_of_light;
using constants::two_pi;

void CavityGeometry::validate() const
{
    if (!(wavelength > 0.0))
        throw DomainError("cavity: wavelength must be positive");
    if (!(length > 0.0))
        throw DomainError("cavity: length must be positive");
    if (!(length < roc))
        throw DomainError("cavity: unstable resonator, length must be below the mirror radius of curvature");
    for (double f : {t1, t2, internal_loss})
        if (!(f >= 0.0 && f < 1.0))
            throw DomainError("cavity: transmissions and losses must lie in [0, 1)");
    if (!(total_loss() > 0.0))
        throw DomainError("cavity: total round-trip loss must be positive");
}

void MembraneSpec::validate(const CavityGeometry& geom) const
{
    if (!(thickness > 0.0))
        throw DomainError("membrane: thickness must be positive");
    if (!(refractive_index >= 1.0))
        throw DomainError("membrane: refractive index must be >= 1");
    if (!(position > 0.0 && position < geom.length))
        throw DomainError("membrane: position must lie strictly inside the cavity");
    if (!(mode_overlap > 0.0 && mode_overlap <= 1.0))
        throw DomainError("membrane: mode overlap must lie in (0, 1]");
    if (!(defect_diameter > 0.0))
        throw DomainError("membrane: defect diameter must be positive");
}

double GaussianMode::spot_radius_at(double z) const
{
    const double u = (z - waist_position) / rayleigh_range;
    return waist * std::sqrt(1.0 + u * u);
}

double free_spectral_range(double length)
{
    return speed_of_light / (2.0 * length);
}

double finesse_from_linewidth(double length, double kappa)
{
    if (!(length > 0.0) || !(kappa > 0.0))
        throw DomainError("finesse: length and linewidth must be positive");
    return free_spectral_range(length) / (kappa / two_pi);
}

GaussianMode plano_concave_mode(double length, double roc, double wavelength)
{
    if (!(length > 0.0 && length < roc))
        throw DomainError("gaussian mode: unstable resonator (need 0 < L < R)");
    GaussianMode mode;
    mode.wavelength = wavelength;
    mode.waist_position = 0.0;
    mode.rayleigh_range = std::sqrt(length * (roc - length));
    mode.waist = std::sqrt(wavelength * mode.rayleigh_range / pi);
    return mode;
}

CavityProps empty_cavity_props(const CavityGeometry& geom)
{
    geom.validate();
    CavityProps props;
    props.fsr_hz = free_spectral_range(geom.length);
    // kappa / 2pi = FSR / F with F = 2pi / (round-trip loss)
    props.finesse = two_pi / geom.total_loss();
    props.kappa = two_pi * props.fsr_hz / props.finesse;
    props.kappa_ext = props.kappa * geom.t1 / geom.total_loss();
    props.mode = plano_concave_mode(geom.length, geom.roc, geom.wavelength);
    return props;
}

namespace {

// 2x2 transfer matrix acting on (forward, backward) amplitudes, left = M * right.
using Matrix2 = std::array<complex, 4>;

Matrix2 multiply(const Matrix2& a, const Matrix2& b)
{
    return {a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3],
            a[2] * b[0] + a[3] * b[2], a[2] * b[1] + a[3] * b[3]};
}

Matrix2 interface_matrix(double n_a, double n_b)
{
    const double r = (n_a - n_b) / (n_a + n_b);
    const double t = 2.0 * n_a / (n_a + n_b);
    return {complex(1.0 / t), complex(r / t), complex(r / t), complex(1.0 / t)};
}

Matrix2 propagation_matrix(double phase)
{
    const complex i(0.0, 1.0);
    return {std::exp(-i * phase), complex(0.0), complex(0.0), std::exp(i * phase)};
}

} // namespace

SheetCoefficients membrane_coefficients(const MembraneSpec& mem, double wavelength)
{
    if (!(mem.refractive_index >= 1.0))
        throw DomainError("membrane: refractive index must be >= 1");
    if (!(mem.thickness >= 0.0) || !(wavelength > 0.0))
        throw DomainError("membrane: thickness must be non-negative and wavelength positive");

    const double k0 = two_pi / wavelength;
    const double n = mem.refractive_index;
    const Matrix2 m = multiply(multiply(interface_matrix(1.0, n), propagation_matrix(k0 * n * mem.thickness)),
                               interface_matrix(n, 1.0));
    // Move the reference planes from the two faces to the mid-plane.
    const complex shift = std::exp(complex(0.0, -k0 * mem.thickness));
    SheetCoefficients out;
    out.r = m[2] / m[0] * shift;
    out.t = 1.0 / m[0] * shift;
    return out;
}

SheetCoefficients ideal_sheet(double reflectivity)
{
    if (!(reflectivity >= 0.0 && reflectivity < 1.0))
        throw DomainError("sheet reflectivity must lie in [0, 1)");
    return {complex(0.0, reflectivity), complex(std::sqrt(1.0 - reflectivity * reflectivity), 0.0)};
}

MimDispersion::MimDispersion(double length, const SheetCoefficients& sheet)
    : length_(length), r_abs_(std::abs(sheet.r)), sign_(0.0), phi_t_(std::arg(sheet.t))
{
    if (!(length > 0.0))
        throw DomainError("dispersion: cavity length must be positive");
    if (!(r_abs_ < 1.0))
        throw NumericalError("dispersion: |r| = " + std::to_string(r_abs_)
                             + " leaves no root bracket (need |r| < 1)");
    // Lossless sheet: r t* is purely imaginary; its sign picks the branch.
    const double im = (sheet.r * std::conj(sheet.t)).imag();
    if (r_abs_ > 0.0)
        sign_ = im >= 0.0 ? 1.0 : -1.0;
}

double MimDispersion::phase_offset(long mode, double z) const
{
    if (r_abs_ == 0.0)
        return 0.0;
    const double ratio = 2.0 * z / length_;
    // pi * (2 N z / L) reduced modulo 2 pi before adding the small terms
    const double base = pi * std::fmod(static_cast<double>(mode) * ratio, 2.0);
    const double coupling = sign_ * r_abs_;
    const auto residual = [&](double eps) {
        const double phi = base + (eps - phi_t_) * ratio - eps + phi_t_;
        return std::sin(eps) - coupling * std::cos(phi);
    };

    double lo = -0.5 * pi;
    double hi = 0.5 * pi;
    if (!(residual(lo) < 0.0 && residual(hi) > 0.0))
        throw NumericalError("dispersion: root not bracketed for mode " + std::to_string(mode)
                             + " at z = " + std::to_string(z));
    // Bisection to full double resolution; well inside the 1 Hz requirement.
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi)
            break;
        if (residual(mid) < 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

double MimDispersion::omega(long mode, double z) const
{
    const double k = (pi * static_cast<double>(mode) + phase_offset(mode, z) - phi_t_) / length_;
    return speed_of_light * k;
}

double MimDispersion::frequency_shift(long mode, double z) const
{
    return speed_of_light * (phase_offset(mode, z) - phi_t_) / length_;
}

double MimDispersion::delta_fsr_hz(long mode, double z) const
{
    return speed_of_light * (phase_offset(mode + 1, z) - phase_offset(mode, z)) / (two_pi * length_);
}

long nearest_mode_index(const CavityGeometry& geom)
{
    return std::lround(2.0 * geom.length / geom.wavelength);
}

std::vector<MimResonance> mim_resonances(const CavityGeometry& geom, const SheetCoefficients& sheet,
                                         double z, long first_mode, long last_mode)
{
    if (last_mode < first_mode)
        throw DomainError("mim_resonances: empty mode range");
    const MimDispersion disp(geom.length, sheet);
    std::vector<MimResonance> out;
    out.reserve(static_cast<std::size_t>(last_mode - first_mode + 1));
    double eps_next = disp.phase_offset(first_mode, z);
    for (long n = first_mode; n <= last_mode; ++n) {
        const double eps = eps_next;
        eps_next = disp.phase_offset(n + 1, z);
        MimResonance res;
        res.mode = n;
        res.omega = disp.omega(n, z);
        res.delta_fsr_hz = speed_of_light * (eps_next - eps) / (two_pi * geom.length);
        out.push_back(res);
    }
    return out;
}

std::vector<MimResonance> mim_resonances(const CavityGeometry& geom, const MembraneSpec& mem,
                                         long first_mode, long last_mode)
{
    geom.validate();
    mem.validate(geom);
    return mim_resonances(geom, membrane_coefficients(mem, geom.wavelength), mem.position, first_mode,
                          last_mode);
}

double domega_dz(const MimDispersion& disp, long mode, double z, double step)
{
    const double min_step = 64.0 * std::numeric_limits<double>::epsilon() * std::max(z, disp.length());
    if (!(step > min_step))
        throw NumericalError("domega_dz: step " + std::to_string(step) + " m underflows");
    if (z - step <= 0.0 || z + step >= disp.length())
        throw DomainError("domega_dz: stencil leaves the cavity");
    // omega is ~1e15 rad/s; difference the phase offsets instead to avoid cancellation.
    const auto central_eps = [&](double h) {
        return speed_of_light / disp.length()
               * (disp.phase_offset(mode, z + h) - disp.phase_offset(mode, z - h)) / (2.0 * h);
    };
    const double d1 = central_eps(step);
    const double d2 = central_eps(0.5 * step);
    return (4.0 * d2 - d1) / 3.0;
}

double g0_max_analytic(const CavityGeometry& geom, double reflectivity, double x_zpf, double mode_overlap)
{
    const double omega_c = two_pi * speed_of_light / geom.wavelength;
    return 2.0 * (omega_c / geom.length) * reflectivity * x_zpf * mode_overlap;
}

CouplingProfile coupling_vs_position(const CavityGeometry& geom, const SheetCoefficients& sheet,
                                     double z_start, double x_zpf, double mode_overlap,
                                     std::size_t n_samples)
{
    if (!(x_zpf > 0.0))
        throw DomainError("coupling: x_zpf must be positive");
    if (n_samples < 2)
        throw DomainError("coupling: need at least two samples");
    const MimDispersion disp(geom.length, sheet);
    CouplingProfile profile;
    profile.mode = nearest_mode_index(geom);
    profile.g0_max_analytic = g0_max_analytic(geom, std::abs(sheet.r), x_zpf, mode_overlap);

    const double step = geom.wavelength / 2000.0;
    const double period = 0.5 * geom.wavelength;
    profile.samples.reserve(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i) {
        CouplingSample s;
        s.z = z_start + period * static_cast<double>(i) / static_cast<double>(n_samples);
        s.domega_dz = domega_dz(disp, profile.mode, s.z, step);
        s.g0 = std::abs(s.domega_dz) * x_zpf * mode_overlap;
        profile.samples.push_back(s);
    }
    return profile;
}

CouplingProfile coupling_vs_position(const CavityGeometry& geom, const MembraneSpec& mem,
                                     const MechanicalMode& mech, std::size_t n_samples)
{
    geom.validate();
    mem.validate(geom);
    return coupling_vs_position(geom, membrane_coefficients(mem, geom.wavelength), mem.position, mech.x_zpf,
                                mem.mode_overlap, n_samples);
}

double clipping_loss(double spot_radius, double defect_diameter)
{
    if (!(spot_radius > 0.0) || !(defect_diameter >= 0.0))
        throw DomainError("clipping_loss: spot radius must be positive, diameter non-negative");
    if (std::isinf(defect_diameter))
        return 0.0;
    const double u = defect_diameter / spot_radius;
    return std::exp(-0.5 * u * u);
}

double tilt_from_fringes(double wavelength, double fringe_period)
{
    if (!(fringe_period > 0.0))
        throw DomainError("tilt: fringe period must be positive");
    return wavelength / (2.0 * fringe_period);
}

double tilt_from_fringes_single_pass(double wavelength, double fringe_period)
{
    if (!(fringe_period > 0.0))
        throw DomainError("tilt: fringe period must be positive");
    return wavelength / fringe_period;
}

} // namespace mimtwin::optics
