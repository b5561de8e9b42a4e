#include "rkbayes/dataset.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "rkbayes/errors.hpp"

namespace rkbayes {

namespace {

double parse_field(const std::string& field, const std::string& context, std::size_t line_no) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(field, &pos);
  } catch (const std::logic_error&) {
    throw InputError(context + ": malformed number '" + field + "' on line " + std::to_string(line_no));
  }
  while (pos < field.size() && (field[pos] == ' ' || field[pos] == '\t' || field[pos] == '\r')) ++pos;
  if (pos != field.size())
    throw InputError(context + ": trailing garbage in '" + field + "' on line " + std::to_string(line_no));
  return v;
}

std::string strip(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

Dataset read_dataset_csv(std::istream& in, const std::string& context) {
  std::string line;
  if (!std::getline(in, line)) throw InputError(context + ": empty input, expected header 'x,y'");
  if (strip(line) != "x,y")
    throw InputError(context + ": expected header 'x,y', got '" + strip(line) + "' on line 1");

  std::vector<double> xs;
  std::vector<double> ys;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (strip(line).empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw InputError(context + ": missing ',' on line " + std::to_string(line_no));
    if (line.find(',', comma + 1) != std::string::npos)
      throw InputError(context + ": too many fields on line " + std::to_string(line_no));
    const double x = parse_field(strip(line.substr(0, comma)), context, line_no);
    const double y = parse_field(strip(line.substr(comma + 1)), context, line_no);
    if (!std::isfinite(x) || !std::isfinite(y))
      throw InputError(context + ": non-finite value on line " + std::to_string(line_no));
    xs.push_back(x);
    ys.push_back(y);
  }
  if (xs.empty()) throw InputError(context + ": no data rows");

  Dataset data;
  data.x = std::move(xs);
  data.y = Eigen::Map<const Eigen::VectorXd>(ys.data(), static_cast<Eigen::Index>(ys.size()));
  return data;
}

Dataset read_dataset_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  return read_dataset_csv(in, path.string());
}

void write_dataset_csv(const Dataset& data, std::ostream& out) {
  out << "x,y\n";
  for (Eigen::Index i = 0; i < data.size(); ++i)
    out << format_double(data.x[static_cast<std::size_t>(i)]) << "," << format_double(data.y(i)) << "\n";
}

std::string format_double(double v) {
  char buf[64];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    double back = 0.0;
    std::sscanf(buf, "%lf", &back);
    if (back == v) return buf;
  }
  return buf;
}

}  // namespace rkbayes
