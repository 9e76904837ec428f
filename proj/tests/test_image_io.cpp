#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "dcloss/image_io.hpp"

using namespace dcloss;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "dcloss_io_tests";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

}  // namespace

TEST(FormatDouble, RoundTrips) {
  for (double v : {0.0, -0.0, 1.0 / 3.0, 1e-300, 6.02214076e23, -2.5, 0.1}) {
    EXPECT_EQ(std::stod(io::format_double(v)), v);
  }
  EXPECT_EQ(io::format_double(std::nan("")), "nan");
  EXPECT_EQ(io::format_double(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_EQ(io::format_double(-std::numeric_limits<double>::infinity()), "-inf");
}

TEST(CsvVector, RoundTripIsExact) {
  const std::vector<double> v{0.1, -3.0, 1e-17, 12345.678901234567};
  const auto p = scratch("vec.csv");
  io::write_csv_vector(p, v);
  EXPECT_EQ(io::read_csv_vector(p), v);
}

TEST(CsvVector, ReadsFirstColumn) {
  const auto p = scratch("cols.csv");
  spit(p, "1.5,9\n\n-2,8\n");
  EXPECT_EQ(io::read_csv_vector(p), (std::vector<double>{1.5, -2.0}));
  EXPECT_THROW(io::read_csv_vector(scratch("missing_file.csv")), std::runtime_error);
}

TEST(CsvTable, HeaderAndRows) {
  const auto p = scratch("table.csv");
  io::write_csv_table(p, {"a", "b"}, {{1.0, 0.5}, {2.0, std::nan("")}});
  EXPECT_EQ(slurp(p), "a,b\n1,0.5\n2,nan\n");
  EXPECT_THROW(io::write_csv_table(p, {"a", "b"}, {{1.0}}), std::runtime_error);
}

TEST(Pgm, WriteFormat) {
  const auto p = scratch("small.pgm");
  io::write_pgm(p, Image2D(3, 2, std::vector<double>{0.0, 0.5, 1.0, 2.0, -1.0, 0.25}), 1.0);
  EXPECT_EQ(slurp(p), "P2\n3 2\n65535\n0 32768 65535\n65535 0 16384\n");
}

TEST(Pgm, RoundTripWithAutoScale) {
  Image2D img(4, 3);
  for (std::size_t i = 0; i < img.size(); ++i) img.values[i] = 0.3 * static_cast<double>(i);
  const auto p = scratch("auto.pgm");
  io::write_pgm(p, img);
  const auto back = io::read_pgm(p);
  ASSERT_EQ(back.width, 4u);
  ASSERT_EQ(back.height, 3u);
  const double top = 0.3 * 11.0;
  for (std::size_t i = 0; i < img.size(); ++i) EXPECT_NEAR(back.values[i] * top, img.values[i], top / 65535.0);
}

TEST(Pgm, AllZeroImage) {
  const auto p = scratch("zero.pgm");
  io::write_pgm(p, Image2D(2, 2));
  const auto back = io::read_pgm(p);
  for (double v : back.values) EXPECT_EQ(v, 0.0);
}

TEST(Pgm, ReadsCommentsAndOtherMaxval) {
  const auto p = scratch("comment.pgm");
  spit(p, "P2\n# made by hand\n2 1\n# another\n255\n0 255\n");
  const auto img = io::read_pgm(p);
  EXPECT_EQ(img.values, (std::vector<double>{0.0, 1.0}));
}

TEST(Pgm, MalformedInput) {
  const auto p = scratch("bad.pgm");
  spit(p, "P5\n2 1\n255\n");
  EXPECT_THROW(io::read_pgm(p), std::runtime_error);
  spit(p, "P2\n2 2\n255\n0 1 2\n");
  EXPECT_THROW(io::read_pgm(p), std::runtime_error);
  spit(p, "P2\n2 1\n255\n0 300\n");
  EXPECT_THROW(io::read_pgm(p), std::runtime_error);
  spit(p, "P2\n0 1\n255\n");
  EXPECT_THROW(io::read_pgm(p), std::runtime_error);
  EXPECT_THROW(io::read_pgm(scratch("nope.pgm")), std::runtime_error);
}
