#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <utility>

#include "smc/observation.hpp"

namespace smc {

/// Malformed or unreadable matrix file.
class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct Observations {
  ObservationSet omega;
  Vector values;
};

// MatrixMarket coordinate format, 1-based indices, one line per observation
// (repeated cells appear on repeated lines, in observation order).
void write_observations_mm(std::ostream &os, const ObservationSet &omega,
                           const Vector &values);
Observations read_observations_mm(std::istream &is);

// MatrixMarket dense array format (column-major, as the format prescribes).
void write_matrix_mm(std::ostream &os, const Matrix &x);
Matrix read_matrix_mm(std::istream &is);

// Row-major CSV, no header.
void write_matrix_csv(std::ostream &os, const Matrix &x);
Matrix read_matrix_csv(std::istream &is);

void save_observations_mm(const std::filesystem::path &path,
                          const ObservationSet &omega, const Vector &values);
Observations load_observations_mm(const std::filesystem::path &path);
void save_matrix_mm(const std::filesystem::path &path, const Matrix &x);
Matrix load_matrix_mm(const std::filesystem::path &path);
void save_matrix_csv(const std::filesystem::path &path, const Matrix &x);
Matrix load_matrix_csv(const std::filesystem::path &path);

/// Shortest round-trip decimal representation used by every writer.
std::string format_double(double v);

} // namespace smc
