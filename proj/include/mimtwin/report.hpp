#pragma once

#include "mimtwin/analysis.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace mimtwin::analysis {

// One row per (power, detuning) point.
void write_report_table(std::ostream& os, const ThermometryReport& report);

// key=value lines: slope_s, sigma_s, alpha, g0_hz, t_bath_mk, then the pooled
// and per-detuning slopes.
void write_report_summary(std::ostream& os, const ThermometryReport& report);

// Plot-ready tables for the frequency shift, background, linewidth and
// occupation panels.
void write_frequency_shift_table(std::ostream& os, const ThermometryReport& report);
void write_background_table(std::ostream& os, const ThermometryReport& report);
void write_linewidth_table(std::ostream& os, const ThermometryReport& report);
void write_occupation_table(std::ostream& os, const ThermometryReport& report);

} // namespace mimtwin::analysis
