#pragma once

#include <iosfwd>
#include <string>

#include "robustsize/numeric.hpp"

namespace robustsize {

/// Headerless CSV: one matrix row per line, comma-separated decimal floats.
/// Dimensions are inferred; ragged rows are an error.
Matrix read_csv_matrix(const std::string& path);
Matrix read_csv_matrix(std::istream& in, const std::string& name = "<stream>");

/// A single-column or single-row CSV read as a vector.
Vector read_csv_vector(const std::string& path);

/// 17 significant digits, enough for bit-exact round trips.
std::string format_double(double value);

void write_csv(std::ostream& out, const Matrix& m);
void write_csv(const std::string& path, const Matrix& m);

}  // namespace robustsize
