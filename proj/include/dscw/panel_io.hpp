#pragma once
// CSV ingestion and emission for panels and plain sample files.
//
// Panel format (long, UTF-8, header required):
//   unit,period,v1[,v2,...,vd]
// with one row per micro observation.  Periods are ordered by first
// appearance unless an explicit order is supplied; the treated unit is moved
// to index 0; the cutoff names the LAST pre-treatment period (inclusive).
//
// Sample format (for the oracle subcommand): an optional header line, then
// one row of d comma-separated coordinates per atom; weights are uniform.

#include <string>
#include <vector>

#include "dscw/measures.hpp"

namespace dscw {

PanelDataset read_panel_csv(const std::string& path, const std::string& treated_unit,
                            const std::string& cutoff_period,
                            const std::vector<std::string>& period_order = {});

// One row per atom, values printed with full round-trip precision.  Cells
// must carry uniform weights (the sample format cannot express others).
void write_panel_csv(const std::string& path, const PanelDataset& panel);

EmpiricalMeasure read_measure_csv(const std::string& path);

void write_measure_csv(const std::string& path, const EmpiricalMeasure& measure);

} // namespace dscw
