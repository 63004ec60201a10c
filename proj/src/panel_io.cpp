#include "dscw/panel_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <stdexcept>

namespace dscw {

namespace {

std::string location(const std::string& path, std::size_t line_no) {
    return path + ":" + std::to_string(line_no);
}

// Splits one CSV line on commas; trims spaces and a trailing CR.
std::vector<std::string> split_csv(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(',', start);
        std::string f = line.substr(start, pos == std::string::npos ? pos : pos - start);
        const auto a = f.find_first_not_of(" \t");
        const auto b = f.find_last_not_of(" \t");
        fields.push_back(a == std::string::npos ? std::string() : f.substr(a, b - a + 1));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return fields;
}

bool parse_double(const std::string& s, double& out) {
    const char* first = s.data();
    const char* last = s.data() + s.size();
    const auto res = std::from_chars(first, last, out);
    return res.ec == std::errc() && res.ptr == last && std::isfinite(out);
}

std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

} // namespace

PanelDataset read_panel_csv(const std::string& path, const std::string& treated_unit,
                            const std::string& cutoff_period,
                            const std::vector<std::string>& period_order) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open panel file: " + path);

    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw std::invalid_argument(path + ": empty file");
    ++line_no;
    const auto header = split_csv(line);
    if (header.size() < 3 || header[0] != "unit" || header[1] != "period")
        throw std::invalid_argument(path + ": header must be unit,period,v1[,...]");
    const std::size_t dim = header.size() - 2;

    std::vector<std::string> units;   // first appearance, reordered below
    std::vector<std::string> periods; // first appearance unless overridden
    std::map<std::pair<std::string, std::string>, std::vector<double>> samples;

    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = split_csv(line);
        if (fields.size() != header.size())
            throw std::invalid_argument(location(path, line_no) + ": expected " +
                                        std::to_string(header.size()) + " fields, got " +
                                        std::to_string(fields.size()));
        const std::string& unit = fields[0];
        const std::string& period = fields[1];
        if (unit.empty() || period.empty())
            throw std::invalid_argument(location(path, line_no) + ": empty unit or period label");
        if (std::find(units.begin(), units.end(), unit) == units.end()) units.push_back(unit);
        if (std::find(periods.begin(), periods.end(), period) == periods.end())
            periods.push_back(period);
        auto& cell = samples[{unit, period}];
        for (std::size_t k = 0; k < dim; ++k) {
            double v = 0.0;
            if (!parse_double(fields[2 + k], v))
                throw std::invalid_argument(location(path, line_no) + ": bad numeric value '" +
                                            fields[2 + k] + "'");
            cell.push_back(v);
        }
    }
    if (units.empty()) throw std::invalid_argument(path + ": no data rows");

    if (!period_order.empty()) {
        for (const auto& p : periods)
            if (std::find(period_order.begin(), period_order.end(), p) == period_order.end())
                throw std::invalid_argument(path + ": period '" + p + "' missing from --period-order");
        for (const auto& p : period_order)
            if (std::find(periods.begin(), periods.end(), p) == periods.end())
                throw std::invalid_argument("--period-order names unknown period '" + p + "'");
        periods = period_order;
    }

    const auto treated_it = std::find(units.begin(), units.end(), treated_unit);
    if (treated_it == units.end())
        throw std::invalid_argument(path + ": treated unit '" + treated_unit + "' not found");
    units.erase(treated_it);
    units.insert(units.begin(), treated_unit);

    const auto cut_it = std::find(periods.begin(), periods.end(), cutoff_period);
    if (cut_it == periods.end())
        throw std::invalid_argument(path + ": cutoff period '" + cutoff_period + "' not found");
    const std::size_t cutoff = static_cast<std::size_t>(cut_it - periods.begin()) + 1;

    std::vector<EmpiricalMeasure> cells;
    cells.reserve(units.size() * periods.size());
    for (const auto& period : periods)
        for (const auto& unit : units) {
            const auto it = samples.find({unit, period});
            if (it == samples.end())
                throw std::invalid_argument(path + ": no rows for unit '" + unit + "' in period '" +
                                            period + "'");
            cells.push_back(EmpiricalMeasure::from_samples(std::move(it->second), dim));
        }
    return PanelDataset(std::move(units), std::move(periods), cutoff, std::move(cells));
}

void write_panel_csv(const std::string& path, const PanelDataset& panel) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write panel file: " + path);
    out << "unit,period";
    for (std::size_t k = 1; k <= panel.dim(); ++k) out << ",v" << k;
    out << "\n";
    for (std::size_t t = 0; t < panel.n_periods(); ++t)
        for (std::size_t u = 0; u < panel.n_units(); ++u) {
            const auto& m = panel.cell(u, t);
            const double uw = 1.0 / static_cast<double>(m.size());
            for (std::size_t i = 0; i < m.size(); ++i) {
                if (std::abs(m.weight(i) - uw) > 1e-12)
                    throw std::runtime_error("write_panel_csv: cell weights are not uniform");
                out << panel.units()[u] << ',' << panel.periods()[t];
                for (std::size_t k = 0; k < m.dim(); ++k)
                    out << ',' << format_double(m.point(i)[k]);
                out << "\n";
            }
        }
    if (!out) throw std::runtime_error("write failed: " + path);
}

EmpiricalMeasure read_measure_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open sample file: " + path);
    std::string line;
    std::size_t line_no = 0;
    std::size_t dim = 0;
    std::vector<double> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = split_csv(line);
        std::vector<double> vals(fields.size());
        bool numeric = true;
        for (std::size_t k = 0; k < fields.size(); ++k)
            if (!parse_double(fields[k], vals[k])) { numeric = false; break; }
        if (!numeric) {
            if (rows.empty() && dim == 0) continue; // header line
            throw std::invalid_argument(location(path, line_no) + ": bad numeric row");
        }
        if (dim == 0) dim = vals.size();
        if (vals.size() != dim)
            throw std::invalid_argument(location(path, line_no) + ": ragged row width");
        rows.insert(rows.end(), vals.begin(), vals.end());
    }
    if (rows.empty()) throw std::invalid_argument(path + ": no sample rows");
    return EmpiricalMeasure::from_samples(std::move(rows), dim);
}

void write_measure_csv(const std::string& path, const EmpiricalMeasure& measure) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write sample file: " + path);
    for (std::size_t k = 1; k <= measure.dim(); ++k) out << (k == 1 ? "v1" : ",v" + std::to_string(k));
    out << "\n";
    for (std::size_t i = 0; i < measure.size(); ++i) {
        for (std::size_t k = 0; k < measure.dim(); ++k)
            out << (k == 0 ? "" : ",") << format_double(measure.point(i)[k]);
        out << "\n";
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

} // namespace dscw
