#include <doctest.h>

#include <filesystem>
#include <sstream>

#include "smc/matrix_io.hpp"
#include "smc/random.hpp"

using namespace smc;

TEST_CASE("coordinate MatrixMarket round trip keeps duplicates and order") {
  const ObservationSet omega(3, 2, {{2, 1}, {0, 0}, {2, 1}});
  Vector v(3);
  v << 1.5, -0.25, 1e-300;
  std::stringstream ss;
  write_observations_mm(ss, omega, v);
  const std::string text = ss.str();
  CHECK(text.rfind("%%MatrixMarket matrix coordinate real general\n", 0) == 0);
  CHECK(text.find("3 2 3\n") != std::string::npos);
  CHECK(text.find("3 2 1.5\n") != std::string::npos); // 1-based indices
  const Observations back = read_observations_mm(ss);
  CHECK(back.omega.cells() == omega.cells());
  CHECK(back.omega.rows() == 3);
  CHECK(back.values == v);
}

TEST_CASE("dense MatrixMarket and CSV round trips are exact") {
  Rng rng(3);
  const Matrix x = rng.gaussian_matrix(4, 3) * 1e5;
  std::stringstream mm, csv;
  write_matrix_mm(mm, x);
  write_matrix_csv(csv, x);
  CHECK(read_matrix_mm(mm) == x);
  CHECK(read_matrix_csv(csv) == x);

  std::stringstream small;
  Matrix y(2, 2);
  y << 1, 2, 3, 4;
  write_matrix_csv(small, y);
  CHECK(small.str() == "1,2\n3,4\n");
}

TEST_CASE("malformed input raises IoError") {
  std::stringstream no_banner("3 3 1\n1 1 2\n");
  CHECK_THROWS_AS(read_observations_mm(no_banner), IoError);
  std::stringstream out_of_range("%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n");
  CHECK_THROWS_AS(read_observations_mm(out_of_range), IoError);
  std::stringstream truncated("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n");
  CHECK_THROWS_AS(read_observations_mm(truncated), IoError);
  std::stringstream wrong_kind("%%MatrixMarket matrix coordinate real general\n2 2 0\n");
  CHECK_THROWS_AS(read_matrix_mm(wrong_kind), IoError);
  std::stringstream ragged("1,2\n3\n");
  CHECK_THROWS_AS(read_matrix_csv(ragged), IoError);
  std::stringstream bad_number("1,x\n");
  CHECK_THROWS_AS(read_matrix_csv(bad_number), IoError);
  CHECK_THROWS_AS(load_matrix_mm("/nonexistent/dir/m.mtx"), IoError);
}

TEST_CASE("file helpers") {
  const auto dir = std::filesystem::temp_directory_path() / "smc_io_test";
  std::filesystem::create_directories(dir);
  Rng rng(4);
  const Matrix x = rng.gaussian_matrix(3, 5);
  save_matrix_mm(dir / "x.mtx", x);
  save_matrix_csv(dir / "x.csv", x);
  CHECK(load_matrix_mm(dir / "x.mtx") == x);
  CHECK(load_matrix_csv(dir / "x.csv") == x);
  const ObservationSet omega = sample_omega(3, 5, 9, 1);
  const Vector v = rng.gaussian_vector(9);
  save_observations_mm(dir / "obs.mtx", omega, v);
  const Observations back = load_observations_mm(dir / "obs.mtx");
  CHECK(back.omega.cells() == omega.cells());
  CHECK(back.values == v);
  std::filesystem::remove_all(dir);
}

TEST_CASE("format_double is shortest round trip") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1.0) == "1");
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}
