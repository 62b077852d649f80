#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "focus/error.hpp"
#include "focus/labeling.hpp"

namespace focus::labeling {
namespace {

constexpr const char* kHeader = "id,easting,northing,year,compound,concentration,threshold,mdl";

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_number(const std::string& s, int line_no, const char* column) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ValidationError("samples CSV line " + std::to_string(line_no) + ": bad " + column + " '" + s + "'");
  }
}

}  // namespace

std::vector<SamplePoint> parse_samples_csv(const std::string& text, LabelMode mode) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("samples CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kHeader) throw ValidationError(std::string("samples CSV header must be: ") + kHeader);

  std::vector<SamplePoint> samples;
  std::map<std::string, std::size_t> by_id;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    if (f.size() != 8) throw ValidationError("samples CSV line " + std::to_string(line_no) + ": expected 8 columns");
    const Coord loc{parse_number(f[1], line_no, "easting"), parse_number(f[2], line_no, "northing")};
    const int year = static_cast<int>(parse_number(f[3], line_no, "year"));
    Compound c{f[4], parse_number(f[5], line_no, "concentration"), parse_number(f[6], line_no, "threshold"),
               parse_number(f[7], line_no, "mdl")};
    if (c.concentration < 0.0 || c.mdl < 0.0 || !(c.threshold > 0.0)) {
      throw ValidationError("samples CSV line " + std::to_string(line_no) +
                            ": concentrations and MDLs must be >= 0, thresholds > 0");
    }
    auto [it, fresh] = by_id.emplace(f[0], samples.size());
    if (fresh) {
      samples.push_back(SamplePoint{f[0], loc, year, {}, 0});
    } else if (!(samples[it->second].location == loc) || samples[it->second].year != year) {
      throw ValidationError("samples CSV line " + std::to_string(line_no) + ": sample '" + f[0] +
                            "' changes location or year");
    }
    samples[it->second].compounds.push_back(std::move(c));
  }
  assign_labels(samples, mode);
  return samples;
}

std::vector<SamplePoint> read_samples_csv(const std::filesystem::path& path, LabelMode mode) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open samples file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_samples_csv(buf.str(), mode);
}

std::string format_samples_csv(std::span<const SamplePoint> samples) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << kHeader << '\n';
  for (const auto& s : samples) {
    for (const auto& c : s.compounds) {
      out << s.id << ',' << s.location.easting << ',' << s.location.northing << ',' << s.year << ',' << c.name
          << ',' << c.concentration << ',' << c.threshold << ',' << c.mdl << '\n';
    }
  }
  return out.str();
}

void write_samples_csv(std::span<const SamplePoint> samples, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << format_samples_csv(samples);
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace focus::labeling
