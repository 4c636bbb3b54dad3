#include "mimtwin/report.hpp"

#include "mimtwin/constants.hpp"
#include "mimtwin/spectrum_io.hpp"

#include <cmath>
#include <ostream>

namespace mimtwin::analysis {

using constants::two_pi;
using spectra::format_double;

namespace {

std::string csv_text(std::string s)
{
    for (char& c : s)
        if (c == ',' || c == '\n' || c == '\r')
            c = ';';
    return s;
}

} // namespace

void write_report_table(std::ostream& os, const ThermometryReport& report)
{
    os << "index,power_w,detuning_hz,n_cav,ok,center_hz,center_err_hz,fwhm_hz,fwhm_err_hz,area,area_err,"
          "background,background_err,frequency_shift_hz,a_over_p2,a_over_p2_err,seed,error\n";
    for (std::size_t i = 0; i < report.points.size(); ++i) {
        const SeriesPoint& p = report.points[i];
        const LorentzianFit& f = p.fit;
        os << i << ',' << format_double(p.power) << ',' << format_double(p.detuning / two_pi) << ','
           << format_double(p.n_cav) << ',' << (p.ok ? 1 : 0) << ',' << format_double(f.center) << ','
           << format_double(f.center_err) << ',' << format_double(f.fwhm) << ',' << format_double(f.fwhm_err) << ','
           << format_double(f.area) << ',' << format_double(f.area_err) << ',' << format_double(f.background) << ','
           << format_double(f.background_err) << ',' << format_double(p.frequency_shift_hz) << ','
           << format_double(p.a_over_p2) << ',' << format_double(p.a_over_p2_err) << ',' << p.seed << ','
           << csv_text(p.error) << '\n';
    }
}

void write_report_summary(std::ostream& os, const ThermometryReport& report)
{
    os << "slope_s=" << format_double(report.slope_s) << '\n'
       << "sigma_s=" << format_double(report.sigma_s) << '\n'
       << "alpha=" << format_double(report.alpha) << '\n'
       << "g0_hz=" << format_double(report.g0_inferred / two_pi) << '\n'
       << "t_bath_mk=" << format_double(report.t_bath_estimate * 1e3) << '\n'
       << "slope_s_pooled_power=" << format_double(report.pooled_power.exponent_s) << '\n'
       << "sigma_s_pooled_power=" << format_double(report.pooled_power.sigma_s) << '\n'
       << "slope_s_pooled_n_cav=" << format_double(report.pooled_n_cav.exponent_s) << '\n'
       << "sigma_s_pooled_n_cav=" << format_double(report.pooled_n_cav.sigma_s) << '\n';
    for (const DetuningSummary& d : report.per_detuning) {
        const std::string tag = format_double(d.detuning / two_pi);
        os << "slope_s[" << tag << "]=" << format_double(d.slope.exponent_s) << '\n'
           << "sigma_s[" << tag << "]=" << format_double(d.slope.sigma_s) << '\n'
           << "g0_hz[" << tag << "]=" << format_double(d.g0 / two_pi) << '\n'
           << "converged_points[" << tag << "]=" << d.converged_points << '\n';
    }
}

void write_frequency_shift_table(std::ostream& os, const ThermometryReport& report)
{
    os << "detuning_hz,power_w,frequency_shift_hz,center_err_hz\n";
    for (const SeriesPoint& p : report.points)
        if (p.ok)
            os << format_double(p.detuning / two_pi) << ',' << format_double(p.power) << ','
               << format_double(p.frequency_shift_hz) << ',' << format_double(p.fit.center_err) << '\n';
}

void write_background_table(std::ostream& os, const ThermometryReport& report)
{
    os << "detuning_hz,power_w,background,background_err\n";
    for (const SeriesPoint& p : report.points)
        if (p.ok)
            os << format_double(p.detuning / two_pi) << ',' << format_double(p.power) << ','
               << format_double(p.fit.background) << ',' << format_double(p.fit.background_err) << '\n';
}

void write_linewidth_table(std::ostream& os, const ThermometryReport& report)
{
    os << "detuning_hz,power_w,n_cav,fwhm_hz,fwhm_err_hz\n";
    for (const SeriesPoint& p : report.points)
        if (p.ok)
            os << format_double(p.detuning / two_pi) << ',' << format_double(p.power) << ','
               << format_double(p.n_cav) << ',' << format_double(p.fit.fwhm) << ','
               << format_double(p.fit.fwhm_err) << '\n';
}

void write_occupation_table(std::ostream& os, const ThermometryReport& report)
{
    os << "detuning_hz,power_w,n_cav,a_over_p2,a_over_p2_err\n";
    for (const SeriesPoint& p : report.points)
        if (p.ok)
            os << format_double(p.detuning / two_pi) << ',' << format_double(p.power) << ','
               << format_double(p.n_cav) << ',' << format_double(p.a_over_p2) << ','
               << format_double(p.a_over_p2_err) << '\n';
}

} // namespace mimtwin::analysis
