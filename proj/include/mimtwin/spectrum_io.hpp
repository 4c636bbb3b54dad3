#pragma once

#include "mimtwin/spectra.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace mimtwin::spectra {

// Plain-text spectrum file:
//
//   # kind=spectrum
//   # rbw_hz=<double>
//   # power_w=<double>
//   # detuning_hz=<double>
//   # seed=<uint64>
//   # coarse_grid=<0|1>
//   freq_hz,psd
//   <f>,<psd>
//   ...
//
// Doubles are written in shortest round-trip form, so write -> read is lossless.
void write_spectrum(std::ostream& os, const Spectrum& spectrum);
Spectrum read_spectrum(std::istream& is);

void save_spectrum(const std::filesystem::path& path, const Spectrum& spectrum);
Spectrum load_spectrum(const std::filesystem::path& path);

void write_error_sweep(std::ostream& os, const ErrorSignalSweep& sweep);
ErrorSignalSweep read_error_sweep(std::istream& is);

// Returns "spectrum" or "pdh" from the kind header; throws ParseError if absent.
std::string peek_kind(const std::filesystem::path& path);

std::string format_double(double value);

} // namespace mimtwin::spectra
