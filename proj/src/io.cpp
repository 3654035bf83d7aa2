#include "uner/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "uner/error.hpp"

namespace uner {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  for (const char c : line) {
    if (c == ',') {
      out.push_back(field);
      field.clear();
    } else if (c != '\r') {
      field.push_back(c);
    }
  }
  out.push_back(field);
  for (auto& f : out) {
    const auto b = f.find_first_not_of(" \t");
    const auto e = f.find_last_not_of(" \t");
    f = b == std::string::npos ? std::string() : f.substr(b, e - b + 1);
  }
  return out;
}

double parse_real(const std::string& s, const std::string& name, std::size_t row, std::size_t col) {
  double x = 0.0;
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  if (!s.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, x);
  if (s.empty() || ec != std::errc() || ptr != last)
    throw ParseError(name, row, col, "expected a number, got '" + s + "'");
  if (!std::isfinite(x)) throw ParseError(name, row, col, "non-finite value '" + s + "'");
  return x;
}

long parse_count(const std::string& s, const std::string& name, std::size_t row, std::size_t col) {
  long x = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || x < 1)
    throw ParseError(name, row, col, "expected a positive integer, got '" + s + "'");
  return x;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return in;
}

}  // namespace

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

std::string fingerprint_hex(std::uint64_t fp) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fp));
  return buf;
}

UnitDataset parse_unit_csv(std::istream& in, const std::string& name, bool intercept) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(name, 1, 1, "missing header");
  const auto header = split_fields(line);
  if (header.size() < 3 || header[0] != "area_id" || header[1] != "y")
    throw ParseError(name, 1, 1, "header must be area_id,y,x1,...,xq");
  const std::size_t q_file = header.size() - 2;
  const std::size_t q = q_file + (intercept ? 1 : 0);

  std::vector<std::string> order;
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> groups;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split_fields(line);
    if (fields.size() != header.size())
      throw ParseError(name, row, std::min(fields.size(), header.size()) + 1,
                       "expected " + std::to_string(header.size()) + " fields, got " +
                           std::to_string(fields.size()));
    if (fields[0].empty()) throw ParseError(name, row, 1, "empty area_id");
    auto [it, inserted] = groups.try_emplace(fields[0]);
    if (inserted) order.push_back(fields[0]);
    auto& [ys, xs] = it->second;
    ys.push_back(parse_real(fields[1], name, row, 2));
    if (intercept) xs.push_back(1.0);
    for (std::size_t k = 0; k < q_file; ++k) xs.push_back(parse_real(fields[k + 2], name, row, k + 3));
  }
  if (order.empty()) throw ParseError(name, row + 1, 1, "no data rows");

  std::vector<AreaData> areas;
  areas.reserve(order.size());
  for (const auto& id : order) {
    const auto& [ys, xs] = groups.at(id);
    const auto n = static_cast<Eigen::Index>(ys.size());
    Vector y = Eigen::Map<const Vector>(ys.data(), n);
    Matrix x = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        xs.data(), n, static_cast<Eigen::Index>(q));
    areas.emplace_back(id, std::move(y), std::move(x));
  }
  return UnitDataset(std::move(areas));
}

UnitDataset read_unit_csv(const std::string& path, bool intercept) {
  auto in = open_in(path);
  return parse_unit_csv(in, path, intercept);
}

void write_unit_csv(std::ostream& out, const UnitDataset& data) {
  out << "area_id,y";
  for (Eigen::Index k = 0; k < data.q(); ++k) out << ",x" << (k + 1);
  out << '\n';
  for (const auto& a : data.areas()) {
    for (Eigen::Index j = 0; j < a.n(); ++j) {
      out << a.id() << ',' << format_double(a.y()(j));
      for (Eigen::Index k = 0; k < a.q(); ++k) out << ',' << format_double(a.x()(j, k));
      out << '\n';
    }
  }
}

void write_unit_csv(const std::string& path, const UnitDataset& data) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  write_unit_csv(out, data);
  if (!out) throw IoError("write to '" + path + "' failed");
}

FinitePopulationSpec parse_population_csv(std::istream& in, const std::string& name,
                                          const UnitDataset& data, bool intercept) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(name, 1, 1, "missing header");
  const auto header = split_fields(line);
  if (header.size() < 3 || header[0] != "area_id" || header[1] != "N")
    throw ParseError(name, 1, 1, "header must be area_id,N,xbar1,...,xbarq");
  const std::size_t q_file = header.size() - 2;
  if (static_cast<Eigen::Index>(q_file + (intercept ? 1 : 0)) != data.q())
    throw ConfigError("population spec has " + std::to_string(q_file) +
                      " covariate means; the unit data has " + std::to_string(data.q()) +
                      " covariates" + (intercept ? " including the intercept" : ""));

  std::map<std::string, PopulationArea> rows;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split_fields(line);
    if (fields.size() != header.size())
      throw ParseError(name, row, std::min(fields.size(), header.size()) + 1,
                       "expected " + std::to_string(header.size()) + " fields, got " +
                           std::to_string(fields.size()));
    PopulationArea pa;
    pa.id = fields[0];
    pa.size = parse_count(fields[1], name, row, 2);
    pa.xbar.resize(data.q());
    Eigen::Index k0 = 0;
    if (intercept) pa.xbar(k0++) = 1.0;
    for (std::size_t k = 0; k < q_file; ++k) pa.xbar(k0++) = parse_real(fields[k + 2], name, row, k + 3);
    if (!rows.emplace(pa.id, pa).second)
      throw ParseError(name, row, 1, "duplicate area_id '" + pa.id + "'");
  }

  FinitePopulationSpec spec;
  for (const auto& a : data.areas()) {
    const auto it = rows.find(a.id());
    if (it == rows.end()) throw ConfigError("population spec has no row for area '" + a.id() + "'");
    spec.areas.push_back(it->second);
    rows.erase(it);
  }
  if (!rows.empty())
    throw ConfigError("population spec lists area '" + rows.begin()->first + "' absent from the data");
  spec.validate(data);
  return spec;
}

FinitePopulationSpec read_population_csv(const std::string& path, const UnitDataset& data,
                                         bool intercept) {
  auto in = open_in(path);
  return parse_population_csv(in, path, data, intercept);
}

}  // namespace uner
