#include "mimtwin/spectrum_io.hpp"

#include "mimtwin/errors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <string_view>
#include <system_error>

namespace mimtwin::spectra {

std::string format_double(double value)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

namespace {

double parse_double(std::string_view text, std::size_t line)
{
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t'))
        text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r'))
        text.remove_suffix(1);
    double value = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size() || text.empty())
        throw ParseError(line, "malformed number '" + std::string(text) + "'");
    if (!std::isfinite(value))
        throw ParseError(line, "non-finite number '" + std::string(text) + "'");
    return value;
}

std::uint64_t parse_uint(std::string_view text, std::size_t line)
{
    std::uint64_t value = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size() || text.empty())
        throw ParseError(line, "malformed integer '" + std::string(text) + "'");
    return value;
}

struct RawTable {
    std::map<std::string, std::pair<std::string, std::size_t>> header; // key -> (value, line)
    std::vector<double> x;
    std::vector<double> y;
    std::vector<std::size_t> lines;
};

RawTable read_table(std::istream& is, std::string_view columns, const std::set<std::string>& allowed_keys)
{
    RawTable table;
    std::string line;
    std::size_t lineno = 0;
    bool seen_columns = false;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        if (line.front() == '#') {
            if (seen_columns)
                throw ParseError(lineno, "header line after data");
            std::string_view body(line);
            body.remove_prefix(1);
            while (!body.empty() && body.front() == ' ')
                body.remove_prefix(1);
            const auto eq = body.find('=');
            if (eq == std::string_view::npos || eq == 0)
                throw ParseError(lineno, "malformed header, expected key=value");
            std::string key(body.substr(0, eq));
            if (!allowed_keys.contains(key))
                throw ParseError(lineno, "unknown header key '" + key + "'");
            if (table.header.contains(key))
                throw ParseError(lineno, "duplicate header key '" + key + "'");
            table.header[key] = {std::string(body.substr(eq + 1)), lineno};
            continue;
        }
        if (!seen_columns) {
            if (line != columns)
                throw ParseError(lineno, "expected column header '" + std::string(columns) + "'");
            seen_columns = true;
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos)
            throw ParseError(lineno, "expected two comma-separated columns");
        const std::string_view sv(line);
        table.x.push_back(parse_double(sv.substr(0, comma), lineno));
        table.y.push_back(parse_double(sv.substr(comma + 1), lineno));
        table.lines.push_back(lineno);
    }
    if (!seen_columns)
        throw ParseError(lineno, "missing column header '" + std::string(columns) + "'");
    if (table.x.size() < 2)
        throw ParseError(lineno, "need at least two data rows");
    return table;
}

const std::pair<std::string, std::size_t>& require(const RawTable& table, const std::string& key)
{
    const auto it = table.header.find(key);
    if (it == table.header.end())
        throw ParseError(0, "missing header key '" + key + "'");
    return it->second;
}

void require_kind(const RawTable& table, std::string_view kind)
{
    const auto& [value, line] = require(table, "kind");
    if (value != kind)
        throw ParseError(line, "expected kind=" + std::string(kind) + ", found kind=" + value);
}

} // namespace

void write_spectrum(std::ostream& os, const Spectrum& spectrum)
{
    const auto& meta = spectrum.metadata();
    std::string out;
    out.reserve(spectrum.size() * 40 + 256);
    out += "# kind=spectrum\n";
    out += "# rbw_hz=" + format_double(meta.rbw_hz) + "\n";
    out += "# power_w=" + format_double(meta.power_w) + "\n";
    out += "# detuning_hz=" + format_double(meta.detuning_hz) + "\n";
    out += "# seed=" + std::to_string(meta.seed) + "\n";
    out += "# coarse_grid=" + std::string(meta.coarse_grid ? "1" : "0") + "\n";
    out += "freq_hz,psd\n";
    const auto f = spectrum.freq();
    const auto p = spectrum.psd();
    for (std::size_t i = 0; i < f.size(); ++i) {
        out += format_double(f[i]);
        out += ',';
        out += format_double(p[i]);
        out += '\n';
    }
    os << out;
}

Spectrum read_spectrum(std::istream& is)
{
    static const std::set<std::string> keys{"kind", "rbw_hz", "power_w", "detuning_hz", "seed", "coarse_grid"};
    RawTable table = read_table(is, "freq_hz,psd", keys);
    require_kind(table, "spectrum");

    SpectrumMetadata meta;
    {
        const auto& [v, l] = require(table, "rbw_hz");
        meta.rbw_hz = parse_double(v, l);
    }
    {
        const auto& [v, l] = require(table, "power_w");
        meta.power_w = parse_double(v, l);
    }
    {
        const auto& [v, l] = require(table, "detuning_hz");
        meta.detuning_hz = parse_double(v, l);
    }
    {
        const auto& [v, l] = require(table, "seed");
        meta.seed = parse_uint(v, l);
    }
    if (const auto it = table.header.find("coarse_grid"); it != table.header.end()) {
        const auto& [v, l] = it->second;
        if (v != "0" && v != "1")
            throw ParseError(l, "coarse_grid must be 0 or 1");
        meta.coarse_grid = v == "1";
    }

    for (std::size_t i = 0; i < table.y.size(); ++i)
        if (table.y[i] < 0.0)
            throw ParseError(table.lines[i], "negative PSD value");
    try {
        check_grid(table.x);
    } catch (const DomainError& e) {
        throw ParseError(table.lines.front(), e.what());
    }
    return Spectrum(std::move(table.x), std::move(table.y), meta);
}

void save_spectrum(const std::filesystem::path& path, const Spectrum& spectrum)
{
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    write_spectrum(os, spectrum);
}

Spectrum load_spectrum(const std::filesystem::path& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw std::runtime_error("cannot open " + path.string());
    return read_spectrum(is);
}

void write_error_sweep(std::ostream& os, const ErrorSignalSweep& sweep)
{
    std::string out;
    out += "# kind=pdh\n";
    out += "# mod_freq_hz=" + format_double(sweep.mod_freq_hz) + "\n";
    out += "# kappa_ext_ratio=" + format_double(sweep.kappa_ext_ratio) + "\n";
    out += "# seed=" + std::to_string(sweep.seed) + "\n";
    out += "detuning_hz,error\n";
    for (std::size_t i = 0; i < sweep.detuning_hz.size(); ++i) {
        out += format_double(sweep.detuning_hz[i]);
        out += ',';
        out += format_double(sweep.error[i]);
        out += '\n';
    }
    os << out;
}

ErrorSignalSweep read_error_sweep(std::istream& is)
{
    static const std::set<std::string> keys{"kind", "mod_freq_hz", "kappa_ext_ratio", "seed"};
    RawTable table = read_table(is, "detuning_hz,error", keys);
    require_kind(table, "pdh");
    ErrorSignalSweep sweep;
    {
        const auto& [v, l] = require(table, "mod_freq_hz");
        sweep.mod_freq_hz = parse_double(v, l);
        if (!(sweep.mod_freq_hz > 0.0))
            throw ParseError(l, "mod_freq_hz must be positive");
    }
    {
        const auto& [v, l] = require(table, "kappa_ext_ratio");
        sweep.kappa_ext_ratio = parse_double(v, l);
        if (!(sweep.kappa_ext_ratio > 0.0 && sweep.kappa_ext_ratio <= 1.0))
            throw ParseError(l, "kappa_ext_ratio must lie in (0, 1]");
    }
    if (const auto it = table.header.find("seed"); it != table.header.end())
        sweep.seed = parse_uint(it->second.first, it->second.second);
    for (std::size_t i = 1; i < table.x.size(); ++i)
        if (!(table.x[i] > table.x[i - 1]))
            throw ParseError(table.lines[i], "detuning axis must be strictly increasing");
    sweep.detuning_hz = std::move(table.x);
    sweep.error = std::move(table.y);
    return sweep;
}

std::string peek_kind(const std::filesystem::path& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw std::runtime_error("cannot open " + path.string());
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line.front() != '#')
            break;
        const auto pos = line.find("kind=");
        if (pos != std::string::npos) {
            std::string kind = line.substr(pos + 5);
            if (!kind.empty() && kind.back() == '\r')
                kind.pop_back();
            return kind;
        }
    }
    throw ParseError(lineno, "missing kind header");
}

} // namespace mimtwin::spectra
