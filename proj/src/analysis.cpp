#include "mimtwin/analysis.hpp"

#include "mimtwin/backaction.hpp"
#include "mimtwin/constants.hpp"
#include "mimtwin/errors.hpp"
#include "mimtwin/least_squares.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace mimtwin::analysis {

using constants::pi;
using constants::two_pi;
using spectra::Spectrum;

double LorentzianFit::evaluate(double f) const
{
    const double half = 0.5 * fwhm;
    const double d = f - center;
    return background + area / pi * half / (d * d + half * half);
}

namespace {

double median(std::vector<double> v)
{
    if (v.empty())
        return 0.0;
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    return *mid;
}

struct Window {
    std::size_t first = 0;
    std::size_t last = 0; // inclusive
};

Window window_indices(std::span<const double> f, double lo, double hi)
{
    const auto b = std::lower_bound(f.begin(), f.end(), lo);
    const auto e = std::upper_bound(f.begin(), f.end(), hi);
    if (b >= e)
        throw InputError("fit_lorentzian: empty fit window");
    return {static_cast<std::size_t>(b - f.begin()), static_cast<std::size_t>(e - f.begin()) - 1};
}

struct Guess {
    double center = 0.0;
    double fwhm = 0.0;
    double area = 0.0;
    double background = 0.0;
};

Guess initial_guess(const Spectrum& s, const Window& w, const std::vector<bool>& masked)
{
    const auto f = s.freq();
    const auto y = s.psd();
    const double df = s.bin_width();

    // Highest bin; the lower frequency wins a tie.
    std::size_t peak = w.last + 1;
    std::vector<double> values;
    for (std::size_t i = w.first; i <= w.last; ++i) {
        if (masked[i])
            continue;
        values.push_back(y[i]);
        if (peak > w.last || y[i] > y[peak])
            peak = i;
    }
    if (peak > w.last)
        throw InputError("fit_lorentzian: every bin in the window is masked");

    Guess g;
    g.center = f[peak];
    g.background = median(values);
    const double half_level = g.background + 0.5 * (y[peak] - g.background);
    std::size_t left = peak;
    while (left > w.first && (masked[left - 1] || y[left - 1] > half_level))
        --left;
    std::size_t right = peak;
    while (right < w.last && (masked[right + 1] || y[right + 1] > half_level))
        ++right;
    g.fwhm = std::max(f[right] - f[left], df);

    double excess = 0.0;
    for (std::size_t i = w.first; i <= w.last; ++i)
        if (!masked[i])
            excess += (y[i] - g.background) * df;
    const double from_height = (y[peak] - g.background) * 0.5 * pi * g.fwhm;
    g.area = excess > 0.0 ? excess : std::max(from_height, 1e-300);
    return g;
}

LorentzianFit fit_window(const Spectrum& s, const Window& w, const std::vector<bool>& masked, const Guess& guess,
                         const LorentzianOptions& options)
{
    const auto f = s.freq();
    const auto y = s.psd();
    std::vector<std::size_t> idx;
    for (std::size_t i = w.first; i <= w.last; ++i)
        if (!masked[i])
            idx.push_back(i);
    if (idx.size() < 16)
        throw InputError("fit_lorentzian: fewer than 16 bins in the fit window");

    const double f_ref = guess.center;
    const auto n = static_cast<Eigen::Index>(idx.size());

    // params: center offset from f_ref, fwhm, area, background
    const auto model = [&](const Eigen::VectorXd& p, std::size_t i) {
        const double half = 0.5 * p(1);
        const double d = (f[i] - f_ref) - p(0);
        return p(3) + p(2) / pi * half / (d * d + half * half);
    };
    const fit::ResidualFunction residual = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd* jac) {
        if (!(p(1) > 0.0))
            return false;
        const double half = 0.5 * p(1);
        for (Eigen::Index k = 0; k < n; ++k) {
            const std::size_t i = idx[static_cast<std::size_t>(k)];
            const double d = (f[i] - f_ref) - p(0);
            const double den = d * d + half * half;
            r(k) = p(3) + p(2) / pi * half / den - y[i];
            if (jac != nullptr) {
                (*jac)(k, 0) = p(2) / pi * half * 2.0 * d / (den * den);
                (*jac)(k, 1) = p(2) / pi * 0.5 * (d * d - half * half) / (den * den);
                (*jac)(k, 2) = half / (pi * den);
                (*jac)(k, 3) = 1.0;
            }
        }
        return true;
    };
    double y_max = 0.0;
    for (std::size_t i : idx)
        y_max = std::max(y_max, std::abs(y[i]));
    const double floor = std::max(1e-12 * y_max, std::numeric_limits<double>::min());
    fit::WeightFunction weights;
    if (options.weighted)
        weights = [&](const Eigen::VectorXd& p) {
            Eigen::VectorXd w(n);
            for (Eigen::Index k = 0; k < n; ++k) {
                const double m = std::max(model(p, idx[static_cast<std::size_t>(k)]), floor);
                w(k) = 1.0 / (m * m);
            }
            return w;
        };

    Eigen::VectorXd p0(4);
    p0 << 0.0, guess.fwhm, guess.area, guess.background;
    if (guess.center != f_ref)
        p0(0) = guess.center - f_ref;
    fit::SolverOptions so;
    so.max_iterations = options.max_iterations;
    so.scale = Eigen::VectorXd(4);
    so.scale << guess.fwhm, guess.fwhm, std::abs(guess.area), std::abs(guess.background) + 1e-300;

    const fit::SolverResult res = fit::solve(residual, p0, n, so, weights);

    LorentzianFit out;
    out.center = f_ref + res.params(0);
    out.fwhm = res.params(1);
    out.area = res.params(2);
    out.background = res.params(3);
    const auto err = [&](Eigen::Index i) { return std::sqrt(std::max(res.covariance(i, i), 0.0)); };
    out.center_err = err(0);
    out.fwhm_err = err(1);
    out.area_err = err(2);
    out.background_err = err(3);
    out.iterations = res.iterations;
    out.residual_norm = std::sqrt(res.weighted_rss);
    out.converged = res.converged && out.fwhm > 0.0 && out.area > 0.0 && std::isfinite(out.area_err);
    out.window_lo = f[w.first];
    out.window_hi = f[w.last];
    return out;
}

} // namespace

LorentzianFit fit_lorentzian(const Spectrum& spectrum, const LorentzianOptions& options)
{
    const auto f = spectrum.freq();
    const auto y = spectrum.psd();
    for (double v : y)
        if (!std::isfinite(v))
            throw InputError("fit_lorentzian: non-finite PSD value");
    std::vector<bool> masked(f.size(), false);
    for (std::size_t i : options.exclude_bins)
        if (i < masked.size())
            masked[i] = true;

    if (options.window) {
        const Window w = window_indices(f, options.window->first, options.window->second);
        return fit_window(spectrum, w, masked, initial_guess(spectrum, w, masked), options);
    }

    const Window all{0, f.size() - 1};
    Guess guess = initial_guess(spectrum, all, masked);
    const double span = options.window_linewidths;
    Window w = window_indices(f, guess.center - span * guess.fwhm, guess.center + span * guess.fwhm);
    // Re-estimate background and area inside the window before fitting.
    const Guess local = initial_guess(spectrum, w, masked);
    guess.background = local.background;
    guess.area = local.area;
    LorentzianFit fit = fit_window(spectrum, w, masked, guess, options);
    // a peak that wandered out of its own window is not a fit of that peak
    if (!(fit.fwhm > 0.0) || !(fit.center >= fit.window_lo && fit.center <= fit.window_hi)) {
        fit.converged = false;
        return fit;
    }

    try {
        const Window refined = window_indices(f, fit.center - span * fit.fwhm, fit.center + span * fit.fwhm);
        if (refined.first == w.first && refined.last == w.last)
            return fit;
        const Guess from_fit{fit.center, fit.fwhm, fit.area > 0.0 ? fit.area : guess.area, fit.background};
        LorentzianFit second = fit_window(spectrum, refined, masked, from_fit, options);
        if (!(second.center >= second.window_lo && second.center <= second.window_hi))
            second.converged = false;
        return second;
    } catch (const InputError&) {
        return fit; // refined window too narrow; keep the first pass
    }
}

namespace {

struct LogPoint {
    double u = 0.0;
    double v = 0.0;
    double w = 1.0;
};

std::vector<LogPoint> to_log(const std::vector<PowerLawPoint>& points, bool weighted)
{
    const bool use_sigma =
        weighted && std::all_of(points.begin(), points.end(), [](const PowerLawPoint& p) {
            return p.sigma_y.has_value() && *p.sigma_y > 0.0;
        });
    std::vector<LogPoint> out;
    out.reserve(points.size());
    for (const auto& p : points) {
        if (!(p.x > 0.0) || !(p.y > 0.0) || !std::isfinite(p.x) || !std::isfinite(p.y))
            throw DomainError("fit_powerlaw: x and y must be positive and finite");
        LogPoint lp{std::log(p.x), std::log(p.y), 1.0};
        if (use_sigma) {
            const double rel = *p.sigma_y / p.y;
            lp.w = 1.0 / (rel * rel);
        }
        out.push_back(lp);
    }
    return out;
}

struct GroupSums {
    double sxx = 0.0;
    double sxy = 0.0;
    double syy = 0.0;
    double mean_u = 0.0;
    double mean_v = 0.0;
};

GroupSums centered_sums(const std::vector<LogPoint>& pts)
{
    GroupSums s;
    double sw = 0.0;
    for (const auto& p : pts) {
        sw += p.w;
        s.mean_u += p.w * p.u;
        s.mean_v += p.w * p.v;
    }
    s.mean_u /= sw;
    s.mean_v /= sw;
    for (const auto& p : pts) {
        const double du = p.u - s.mean_u;
        const double dv = p.v - s.mean_v;
        s.sxx += p.w * du * du;
        s.sxy += p.w * du * dv;
        s.syy += p.w * dv * dv;
    }
    return s;
}

} // namespace

PowerLawFit fit_powerlaw(const std::vector<PowerLawPoint>& points, bool weighted)
{
    if (points.size() < 3)
        throw InputError("fit_powerlaw: need at least three points");
    return fit_powerlaw_grouped({points}, weighted);
}

PowerLawFit fit_powerlaw_grouped(const std::vector<std::vector<PowerLawPoint>>& groups, bool weighted)
{
    std::vector<std::vector<LogPoint>> logs;
    std::size_t n = 0;
    for (const auto& g : groups) {
        if (g.size() < 2)
            continue;
        logs.push_back(to_log(g, weighted));
        n += g.size();
    }
    if (logs.empty() || n < logs.size() + 2)
        throw InputError("fit_powerlaw: not enough points for the requested groups");

    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    std::vector<GroupSums> sums;
    for (const auto& pts : logs) {
        sums.push_back(centered_sums(pts));
        sxx += sums.back().sxx;
        sxy += sums.back().sxy;
        syy += sums.back().syy;
    }
    if (!(sxx > 0.0))
        throw InputError("fit_powerlaw: x values are not distinct");

    PowerLawFit out;
    out.n_points = n;
    out.exponent_s = sxy / sxx;
    out.prefactor = std::exp(sums.front().mean_v - out.exponent_s * sums.front().mean_u);
    double rss = 0.0;
    for (std::size_t g = 0; g < logs.size(); ++g)
        for (const auto& p : logs[g]) {
            const double r = (p.v - sums[g].mean_v) - out.exponent_s * (p.u - sums[g].mean_u);
            rss += p.w * r * r;
        }
    const double dof = static_cast<double>(n - logs.size() - 1);
    out.sigma_s = std::sqrt(rss / dof / sxx);
    out.r_squared = syy > 0.0 ? 1.0 - rss / syy : 1.0;
    return out;
}

double infer_g0_from_damping(const std::vector<std::pair<double, double>>& series, double delta, double kappa,
                             double omega_m)
{
    if (!(delta < 0.0))
        throw DomainError("infer_g0_from_damping: needs red detuning (delta < 0)");
    if (series.size() < 2)
        throw InputError("infer_g0_from_damping: need at least two points");
    double mx = 0.0, my = 0.0;
    for (const auto& [x, y] : series) {
        mx += x;
        my += y;
    }
    mx /= static_cast<double>(series.size());
    my /= static_cast<double>(series.size());
    double sxx = 0.0, sxy = 0.0;
    for (const auto& [x, y] : series) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if (!(sxx > 0.0))
        throw InputError("infer_g0_from_damping: need at least two distinct photon numbers");
    const double slope = sxy / sxx;
    const double kernel = backaction::damping_kernel(delta, kappa, omega_m);
    if (!(slope > 0.0) || !(kernel > 0.0))
        throw InputError("infer_g0_from_damping: damping does not grow with photon number "
                         "(blue detuning or noise-dominated data)");
    return std::sqrt(slope / kernel);
}

CalibrationMeasurement measure_calibration(const Spectrum& spectrum, double omega_mod)
{
    const auto f = spectrum.freq();
    const auto y = spectrum.psd();
    const double df = spectrum.bin_width();
    const double f_mod = omega_mod / two_pi;
    if (!(f_mod >= f.front() && f_mod <= f.back()))
        throw InputError("gorodetsky: modulation frequency lies outside the spectrum");
    const auto bin = static_cast<std::size_t>(std::lround((f_mod - f.front()) / df));

    LorentzianOptions opts;
    opts.exclude_bins = {bin};
    CalibrationMeasurement m;
    m.mechanical = fit_lorentzian(spectrum, opts);
    if (!m.mechanical.converged)
        throw InputError("gorodetsky: mechanical peak fit did not converge");
    m.tone_frequency = f[bin];
    if (std::abs(m.tone_frequency - m.mechanical.center) <= 3.0 * m.mechanical.fwhm)
        throw InputError("gorodetsky: calibration tone overlaps the mechanical peak");

    // Scatter of the data around the model sets the detection threshold.
    double ss = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (i == bin || f[i] < m.mechanical.window_lo || f[i] > m.mechanical.window_hi)
            continue;
        const double rel = y[i] / m.mechanical.evaluate(f[i]) - 1.0;
        ss += rel * rel;
        ++count;
    }
    const double rel_noise = count > 1 ? std::sqrt(ss / static_cast<double>(count - 1)) : 1.0;
    const double local = m.mechanical.evaluate(f[bin]);
    const double excess = y[bin] - local;
    if (!(excess > 10.0 * std::max(rel_noise, 1e-12) * local))
        throw InputError("gorodetsky: no calibration tone found at the modulation frequency");
    m.tone_area = excess * df;
    return m;
}

GorodetskyResult gorodetsky_g0(const Spectrum& spectrum, double beta, double omega_mod, double n_th_assumed,
                               std::optional<double> gamma_m)
{
    if (!(beta > 0.0) || !(n_th_assumed > 0.0))
        throw InputError("gorodetsky: beta and the assumed occupation must be positive");
    GorodetskyResult out;
    out.measurement = measure_calibration(spectrum, omega_mod);
    out.occupation = n_th_assumed;
    if (gamma_m)
        out.occupation *= *gamma_m / (two_pi * out.measurement.mechanical.fwhm);
    const double b = beta * omega_mod;
    out.g0 = std::sqrt(b * b / (4.0 * out.occupation) * out.measurement.mechanical.area / out.measurement.tone_area);
    return out;
}

BathEstimate gorodetsky_bath(const Spectrum& spectrum, double beta, double omega_mod, double g0, double omega_m,
                             std::optional<double> gamma_m)
{
    if (!(beta > 0.0) || !(g0 > 0.0))
        throw InputError("gorodetsky: beta and g0 must be positive");
    BathEstimate out;
    out.measurement = measure_calibration(spectrum, omega_mod);
    const double b = beta * omega_mod;
    out.n_mode = b * b * out.measurement.mechanical.area / (4.0 * g0 * g0 * out.measurement.tone_area);
    out.n_th = out.n_mode;
    if (gamma_m)
        out.n_th *= two_pi * out.measurement.mechanical.fwhm / *gamma_m;
    out.temperature = backaction::temperature_from_occupation(out.n_th, omega_m);
    return out;
}

PdhFit fit_pdh(const spectra::ErrorSignalSweep& sweep)
{
    const std::size_t n = sweep.detuning_hz.size();
    if (n < 16 || sweep.error.size() != n)
        throw InputError("fit_pdh: need at least 16 samples");
    const double mod = two_pi * sweep.mod_freq_hz;
    const double ratio = sweep.kappa_ext_ratio;
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i)
        x[i] = two_pi * sweep.detuning_hz[i];

    // Extrema of the carrier dispersion feature sit at +/- kappa/2.
    std::size_t i_max = n, i_min = n;
    for (std::size_t i = 0; i < n; ++i) {
        if (std::abs(x[i]) > 0.5 * mod)
            continue;
        if (i_max == n || sweep.error[i] > sweep.error[i_max])
            i_max = i;
        if (i_min == n || sweep.error[i] < sweep.error[i_min])
            i_min = i;
    }
    if (i_max == n || i_max == i_min)
        throw InputError("fit_pdh: no carrier feature within half the modulation frequency");
    const double kappa0 = std::abs(x[i_max] - x[i_min]);
    const double offset0 = 0.5 * (x[i_max] + x[i_min]);
    const double unit = backaction::pdh_error(x[i_max] - offset0, kappa0, ratio * kappa0, mod);
    if (unit == 0.0)
        throw InputError("fit_pdh: degenerate initial guess");
    const double gain0 = sweep.error[i_max] / unit;

    const auto model = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r) {
        if (!(p(1) > 0.0))
            return false;
        for (std::size_t i = 0; i < n; ++i)
            r(static_cast<Eigen::Index>(i)) =
                p(0) * backaction::pdh_error(x[i] - p(2), p(1), ratio * p(1), mod) - sweep.error[i];
        return true;
    };
    Eigen::VectorXd step(3);
    step << 1e-7 * std::abs(gain0), 1e-7 * kappa0, 1e-7 * kappa0;
    Eigen::VectorXd p0(3);
    p0 << gain0, kappa0, offset0;
    fit::SolverOptions so;
    so.scale = Eigen::VectorXd(3);
    so.scale << std::abs(gain0), kappa0, kappa0;
    so.step_tolerance = 1e-9;
    const auto res =
        fit::solve(fit::with_numeric_jacobian(model, step), p0, static_cast<Eigen::Index>(n), so);

    PdhFit out;
    out.gain = res.params(0);
    out.kappa = res.params(1);
    out.offset = res.params(2);
    out.kappa_err = std::sqrt(std::max(res.covariance(1, 1), 0.0));
    out.converged = res.converged && out.kappa > 0.0;
    return out;
}

std::uint64_t point_seed(std::uint64_t base, std::size_t index)
{
    // splitmix64 finalizer
    std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(index) + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

Spectrum synthesize_series_point(const spectra::SpectrumScene& scene, const SeriesOptions& options)
{
    const spectra::SceneState state = spectra::evaluate_scene(scene);
    const double half_span = 0.5 * options.span_linewidths * state.fwhm_hz();
    return spectra::synthesize_spectrum(scene, state.center_hz() - half_span, state.center_hz() + half_span,
                                        options.n_bins);
}

ThermometryReport run_cooling_series(const spectra::SpectrumScene& scene_template, const std::vector<double>& powers,
                                     const std::vector<double>& detunings, const SeriesOptions& options)
{
    if (powers.empty() || detunings.empty())
        throw InputError("run_cooling_series: need at least one power and one detuning");
    for (std::size_t i = 0; i < powers.size(); ++i)
        if (!(powers[i] > 0.0) || (i > 0 && !(powers[i] > powers[i - 1])))
            throw InputError("run_cooling_series: powers must be positive and ascending");

    ThermometryReport report;
    std::size_t index = 0;
    for (double delta : detunings) {
        for (double power : powers) {
            SeriesPoint pt;
            pt.power = power;
            pt.detuning = delta;
            pt.seed = point_seed(scene_template.rng_seed, index);
            spectra::SpectrumScene scene = scene_template;
            scene.drive.input_power = power;
            scene.drive.detuning = delta;
            scene.rng_seed = pt.seed;
            scene.cal_tone.reset();
            try {
                pt.truth = spectra::evaluate_scene(scene);
                pt.n_cav = pt.truth.n_cav;
                const Spectrum spectrum = synthesize_series_point(scene, options);
                if (options.on_spectrum)
                    options.on_spectrum(index, spectrum);
                pt.fit = fit_lorentzian(spectrum);
                pt.frequency_shift_hz = pt.fit.center - scene.mech.omega_m / two_pi;
                pt.a_over_p2 = pt.fit.area / (power * power);
                pt.a_over_p2_err = pt.fit.area_err / (power * power);
                pt.ok = pt.fit.converged;
                if (!pt.ok)
                    pt.error = "lorentzian fit did not converge";
            } catch (const std::exception& e) {
                pt.ok = false;
                pt.error = e.what();
            }
            report.points.push_back(std::move(pt));
            ++index;
        }
    }
    summarize(report, scene_template.kappa, scene_template.mech.omega_m);
    return report;
}

void summarize(ThermometryReport& report, double kappa, double omega_m)
{
    std::vector<double> order;
    std::map<double, std::vector<const SeriesPoint*>> by_detuning;
    for (const auto& p : report.points) {
        if (!by_detuning.contains(p.detuning))
            order.push_back(p.detuning);
        if (p.ok)
            by_detuning[p.detuning].push_back(&p);
        else
            by_detuning[p.detuning];
    }

    report.per_detuning.clear();
    std::vector<std::vector<PowerLawPoint>> groups;
    std::vector<PowerLawPoint> pooled_power, pooled_ncav;
    double g0_sum = 0.0;
    std::size_t g0_count = 0;
    for (double delta : order) {
        const auto& pts = by_detuning[delta];
        DetuningSummary summary;
        summary.detuning = delta;
        summary.converged_points = pts.size();
        summary.g0 = std::numeric_limits<double>::quiet_NaN();
        summary.slope.exponent_s = std::numeric_limits<double>::quiet_NaN();
        if (pts.size() >= 3) {
            std::vector<PowerLawPoint> group;
            std::vector<std::pair<double, double>> damping;
            for (const SeriesPoint* p : pts) {
                group.push_back({p->power, p->a_over_p2, p->a_over_p2_err});
                pooled_power.push_back({p->power, p->a_over_p2, p->a_over_p2_err});
                pooled_ncav.push_back({p->n_cav, p->a_over_p2, p->a_over_p2_err});
                damping.emplace_back(p->n_cav, two_pi * p->fit.fwhm);
            }
            summary.slope = fit_powerlaw(group);
            groups.push_back(std::move(group));
            if (delta < 0.0) {
                try {
                    summary.g0 = infer_g0_from_damping(damping, delta, kappa, omega_m);
                    g0_sum += summary.g0;
                    ++g0_count;
                } catch (const std::exception&) {
                    // recorded as NaN
                }
            }
        }
        report.per_detuning.push_back(summary);
    }
    if (groups.empty())
        throw NumericalError("cooling series: no detuning has three converged points");

    report.shared_fit = fit_powerlaw_grouped(groups);
    report.pooled_power = fit_powerlaw(pooled_power);
    report.pooled_n_cav = fit_powerlaw(pooled_ncav);
    report.slope_s = report.shared_fit.exponent_s;
    report.sigma_s = report.shared_fit.sigma_s;
    report.alpha = 1.0 + report.slope_s;
    report.g0_inferred = g0_count > 0 ? g0_sum / static_cast<double>(g0_count)
                                      : std::numeric_limits<double>::quiet_NaN();
}

GorodetskyOutcome run_gorodetsky_protocol(const spectra::SpectrumScene& scene_template,
                                          const GorodetskyProtocol& protocol)
{
    const double omega_m = scene_template.mech.omega_m;
    const double gamma_m = scene_template.mech.gamma_m_intrinsic;

    const auto stage_scene = [&](double temperature, std::uint64_t seed) {
        spectra::SpectrumScene scene = scene_template;
        scene.heating.heat_coeff = 0.0;
        scene.heating.n_base = backaction::occupation_from_temperature(temperature, omega_m);
        scene.heating.gamma_ref = gamma_m;
        scene.drive.input_power = protocol.power;
        if (protocol.detuning != 0.0)
            scene.drive.detuning = protocol.detuning;
        scene.rng_seed = seed;
        scene.cal_tone.reset();
        const spectra::SceneState state = spectra::evaluate_scene(scene);
        spectra::CalibrationTone tone;
        tone.omega_mod = two_pi * (state.center_hz() + protocol.tone_offset_linewidths * state.fwhm_hz());
        tone.beta = protocol.beta > 0.0 ? protocol.beta
                                        : 2.0 * scene.g0 * std::sqrt(state.n_f) / tone.omega_mod;
        scene.cal_tone = tone;
        const double half_span = (protocol.tone_offset_linewidths + 20.0) * state.fwhm_hz();
        const Spectrum spectrum = spectra::synthesize_spectrum(scene, state.center_hz() - half_span,
                                                               state.center_hz() + half_span, protocol.n_bins);
        return std::pair{tone, spectrum};
    };

    const auto [tone_hot, hot] = stage_scene(protocol.t_calibration, point_seed(scene_template.rng_seed, 1000001));
    const GorodetskyResult cal =
        gorodetsky_g0(hot, tone_hot.beta, tone_hot.omega_mod,
                      backaction::occupation_from_temperature(protocol.t_calibration, omega_m), gamma_m);

    const auto [tone_cold, cold] = stage_scene(protocol.t_bath, point_seed(scene_template.rng_seed, 1000002));
    const BathEstimate bath = gorodetsky_bath(cold, tone_cold.beta, tone_cold.omega_mod, cal.g0, omega_m, gamma_m);

    return {cal.g0, bath.n_th, bath.temperature};
}

} // namespace mimtwin::analysis
