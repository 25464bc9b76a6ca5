#pragma once

#include <string>
#include <vector>

#include "ergmfg/domain.hpp"

namespace ergmfg {

/// Shortest round-trip decimal representation, locale independent.
std::string format_double(double v);

/// Write a grid field as CSV with columns index,x[,y],value.
void write_field_csv(const std::string& path, const GridField& f);

/// Generic numeric table with a header row.
void write_table_csv(const std::string& path, const std::vector<std::string>& header,
                     const std::vector<std::vector<double>>& rows);

void write_text_file(const std::string& path, const std::string& content);

/// Companion script that renders the run artifacts (fields, traces, fits).
std::string plotting_script();

}  // namespace ergmfg
