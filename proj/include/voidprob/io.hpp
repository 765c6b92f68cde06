#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include <json.hpp>

#include "voidprob/field.hpp"

namespace voidprob {

// Field file:
//   { "domain": {"start_km", "end_km", "spacing_km"}, "time_ratio",
//     "mean": [...], "variance": [...],
//     "kernel": {"smoothness", "range_km", "marginal_std"} }   (kernel optional)
nlohmann::json field_to_json(const IntensityField& field);
IntensityField field_from_json(const nlohmann::json& j);

void write_field_file(const std::filesystem::path& path,
                      const IntensityField& field);
IntensityField read_field_file(const std::filesystem::path& path);

// Arrival file: CSV with a single `position_km` column and a required header.
std::vector<ArrivalRecord> parse_arrivals_csv(std::istream& in);
std::vector<ArrivalRecord> read_arrivals_csv(const std::filesystem::path& path);
void write_arrivals_csv(const std::filesystem::path& path,
                        const std::vector<ArrivalRecord>& records);

/// Parses a JSON document from a file; errors name the path.
nlohmann::json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

/// Shortest decimal form that round-trips to the same double.
std::string format_double(double v);

}  // namespace voidprob
