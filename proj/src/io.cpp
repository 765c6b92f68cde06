#include "voidprob/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace voidprob {

using nlohmann::json;

namespace {

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

double number_at(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number()) {
    throw std::invalid_argument(std::string("field file: missing numeric '") +
                                key + "'");
  }
  return j.at(key).get<double>();
}

std::vector<double> array_at(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_array()) {
    throw std::invalid_argument(std::string("field file: missing array '") +
                                key + "'");
  }
  std::vector<double> out;
  out.reserve(j.at(key).size());
  for (const auto& v : j.at(key)) {
    if (!v.is_number()) {
      throw std::invalid_argument(std::string("field file: non-numeric entry in '") +
                                  key + "'");
    }
    out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace

json field_to_json(const IntensityField& field) {
  const GridDomain& d = field.domain();
  json j;
  j["domain"] = {{"start_km", d.start_km()},
                 {"end_km", d.end_km()},
                 {"spacing_km", d.spacing_km()}};
  j["time_ratio"] = field.time_ratio();
  j["mean"] = std::vector<double>(field.mean().begin(), field.mean().end());
  j["variance"] =
      std::vector<double>(field.variance().begin(), field.variance().end());
  if (field.kernel()) {
    const MaternKernel& k = *field.kernel();
    j["kernel"] = {{"smoothness", k.smoothness()},
                   {"range_km", k.range_km()},
                   {"marginal_std", k.marginal_std()}};
  }
  return j;
}

IntensityField field_from_json(const json& j) {
  if (!j.is_object() || !j.contains("domain")) {
    throw std::invalid_argument("field file: missing 'domain' object");
  }
  const json& d = j.at("domain");
  GridDomain domain(number_at(d, "start_km"), number_at(d, "end_km"),
                    number_at(d, "spacing_km"));
  std::optional<MaternKernel> kernel;
  if (j.contains("kernel") && !j.at("kernel").is_null()) {
    const json& k = j.at("kernel");
    kernel.emplace(number_at(k, "smoothness"), number_at(k, "range_km"),
                   number_at(k, "marginal_std"));
  }
  const double time_ratio = j.contains("time_ratio") ? number_at(j, "time_ratio") : 1.0;
  return IntensityField(domain, array_at(j, "mean"), array_at(j, "variance"),
                        kernel, time_ratio);
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path,
                     const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

void write_field_file(const std::filesystem::path& path,
                      const IntensityField& field) {
  write_text_file(path, field_to_json(field).dump(2) + "\n");
}

IntensityField read_field_file(const std::filesystem::path& path) {
  return field_from_json(read_json_file(path));
}

std::vector<ArrivalRecord> parse_arrivals_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) {
    throw std::invalid_argument("arrivals CSV is empty (header required)");
  }
  if (trim(line) != "position_km") {
    throw std::invalid_argument("arrivals CSV header must be 'position_km', got '" +
                                trim(line) + "'");
  }
  std::vector<ArrivalRecord> records;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string cell = trim(line);
    if (cell.empty()) continue;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc() || ptr != cell.data() + cell.size()) {
      throw std::invalid_argument("arrivals CSV line " + std::to_string(line_no) +
                                  ": not a number: '" + cell + "'");
    }
    records.push_back({v});
  }
  return records;
}

std::vector<ArrivalRecord> read_arrivals_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return parse_arrivals_csv(in);
}

void write_arrivals_csv(const std::filesystem::path& path,
                        const std::vector<ArrivalRecord>& records) {
  std::ostringstream out;
  out << "position_km\n";
  for (const auto& r : records) out << format_double(r.position_km) << "\n";
  write_text_file(path, out.str());
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw std::runtime_error("number formatting failed");
  return std::string(buf, ptr);
}

}  // namespace voidprob
