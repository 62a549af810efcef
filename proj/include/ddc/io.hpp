#pragma once

// JSON serialization of datasets (one sample per line) and envelope sets.

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "ddc/inclusion.hpp"

namespace ddc::io {

nlohmann::json to_json(const Interval& a);
nlohmann::json to_json(const IntervalVector& a);
/// {"lo": [[...]], "hi": [[...]]}
nlohmann::json to_json(const IntervalMatrix& a);
nlohmann::json to_json(const EnvelopeSet& env);

/// Lines of {"t":..., "x":[...], "xdot":[...], "u":[...]}.
void write_dataset(std::ostream& os, const Dataset& data);
/// Throws IoError on malformed lines (with the line number).
Dataset read_dataset(std::istream& is);

void write_dataset_file(const std::string& path, const Dataset& data);
Dataset read_dataset_file(const std::string& path);

}  // namespace ddc::io
