#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace rkbayes {

// Measurement pairs (x_i, y_i), i = 1..N.
struct Dataset {
  std::vector<double> x;
  Eigen::VectorXd y;

  Eigen::Index size() const { return y.size(); }
};

// Reads a CSV with header "x,y". Malformed rows raise InputError carrying the
// line number. No locale handling: '.' decimal point, ',' separator.
Dataset read_dataset_csv(std::istream& in, const std::string& context = "<stream>");
Dataset read_dataset_csv(const std::filesystem::path& path);

void write_dataset_csv(const Dataset& data, std::ostream& out);

// Shortest decimal digits that round-trip a double exactly.
std::string format_double(double v);

}  // namespace rkbayes
