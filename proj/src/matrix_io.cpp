#include "smc/matrix_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace smc {

namespace {

constexpr const char *kCoordinateBanner = "%%MatrixMarket matrix coordinate real general";
constexpr const char *kArrayBanner = "%%MatrixMarket matrix array real general";

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

// Reads the banner, skips comment lines, and returns the size line.
std::string read_header(std::istream &is, const std::string &expected_format) {
  std::string line;
  if (!std::getline(is, line))
    throw IoError("empty MatrixMarket stream");
  std::istringstream banner(lower(line));
  std::string tag, object, format, field, symmetry;
  banner >> tag >> object >> format >> field >> symmetry;
  if (tag != "%%matrixmarket" || object != "matrix")
    throw IoError("missing MatrixMarket banner");
  if (format != expected_format)
    throw IoError("expected MatrixMarket " + expected_format + " format, got '" +
                  format + "'");
  if (field != "real" && field != "double" && field != "integer")
    throw IoError("unsupported MatrixMarket field '" + field + "'");
  if (symmetry != "general")
    throw IoError("only general symmetry is supported");
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '%')
      continue;
    return line;
  }
  throw IoError("missing MatrixMarket size line");
}

void check_stream(const std::ios &s, const std::filesystem::path &path) {
  if (!s)
    throw IoError("cannot open '" + path.string() + "'");
}

} // namespace

std::string format_double(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc())
    throw IoError("failed to format number");
  return std::string(buf, end);
}

void write_observations_mm(std::ostream &os, const ObservationSet &omega,
                           const Vector &values) {
  if (static_cast<std::size_t>(values.size()) != omega.size())
    throw std::invalid_argument("observation values do not match |Omega|");
  os << kCoordinateBanner << '\n'
     << omega.rows() << ' ' << omega.cols() << ' ' << omega.size() << '\n';
  for (std::size_t k = 0; k < omega.size(); ++k)
    os << omega[k].row + 1 << ' ' << omega[k].col + 1 << ' '
       << format_double(values(static_cast<Eigen::Index>(k))) << '\n';
}

Observations read_observations_mm(std::istream &is) {
  std::istringstream size_line(read_header(is, "coordinate"));
  long rows = 0, cols = 0, nnz = 0;
  if (!(size_line >> rows >> cols >> nnz) || rows < 1 || cols < 1 || nnz < 0)
    throw IoError("bad MatrixMarket coordinate size line");
  std::vector<Cell> cells;
  cells.reserve(static_cast<std::size_t>(nnz));
  Vector values(nnz);
  for (long k = 0; k < nnz; ++k) {
    long i = 0, j = 0;
    double v = 0.0;
    if (!(is >> i >> j >> v))
      throw IoError("truncated MatrixMarket coordinate data at entry " +
                    std::to_string(k + 1));
    if (i < 1 || i > rows || j < 1 || j > cols)
      throw IoError("entry " + std::to_string(k + 1) + " out of bounds");
    cells.push_back({static_cast<int>(i - 1), static_cast<int>(j - 1)});
    values(k) = v;
  }
  return {ObservationSet(static_cast<int>(rows), static_cast<int>(cols), std::move(cells)),
          std::move(values)};
}

void write_matrix_mm(std::ostream &os, const Matrix &x) {
  os << kArrayBanner << '\n' << x.rows() << ' ' << x.cols() << '\n';
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      os << format_double(x(i, j)) << '\n';
}

Matrix read_matrix_mm(std::istream &is) {
  std::istringstream size_line(read_header(is, "array"));
  long rows = 0, cols = 0;
  if (!(size_line >> rows >> cols) || rows < 1 || cols < 1)
    throw IoError("bad MatrixMarket array size line");
  Matrix x(rows, cols);
  for (long j = 0; j < cols; ++j)
    for (long i = 0; i < rows; ++i)
      if (!(is >> x(i, j)))
        throw IoError("truncated MatrixMarket array data");
  return x;
}

void write_matrix_csv(std::ostream &os, const Matrix &x) {
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      if (j)
        os << ',';
      os << format_double(x(i, j));
    }
    os << '\n';
  }
}

Matrix read_matrix_csv(std::istream &is) {
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (line.empty())
      continue;
    std::vector<double> row;
    std::istringstream fields(line);
    std::string field;
    while (std::getline(fields, field, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(field, &used));
      } catch (const std::exception &) {
        throw IoError("bad CSV number '" + field + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw IoError("ragged CSV matrix");
    rows.push_back(std::move(row));
  }
  if (rows.empty() || rows.front().empty())
    throw IoError("empty CSV matrix");
  Matrix x(static_cast<Eigen::Index>(rows.size()),
           static_cast<Eigen::Index>(rows.front().size()));
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j)
      x(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return x;
}

void save_observations_mm(const std::filesystem::path &path,
                          const ObservationSet &omega, const Vector &values) {
  std::ofstream os(path);
  check_stream(os, path);
  write_observations_mm(os, omega, values);
}

Observations load_observations_mm(const std::filesystem::path &path) {
  std::ifstream is(path);
  check_stream(is, path);
  return read_observations_mm(is);
}

void save_matrix_mm(const std::filesystem::path &path, const Matrix &x) {
  std::ofstream os(path);
  check_stream(os, path);
  write_matrix_mm(os, x);
}

Matrix load_matrix_mm(const std::filesystem::path &path) {
  std::ifstream is(path);
  check_stream(is, path);
  return read_matrix_mm(is);
}

void save_matrix_csv(const std::filesystem::path &path, const Matrix &x) {
  std::ofstream os(path);
  check_stream(os, path);
  write_matrix_csv(os, x);
}

Matrix load_matrix_csv(const std::filesystem::path &path) {
  std::ifstream is(path);
  check_stream(is, path);
  return read_matrix_csv(is);
}

} // namespace smc
