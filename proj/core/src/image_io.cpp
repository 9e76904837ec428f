#include "dcloss/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dcloss::io {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return in;
}

// Next whitespace-separated PGM token, skipping '#' comments.
std::string next_token(std::istream& in) {
  std::string tok;
  while (in >> tok) {
    if (tok[0] == '#') {
      std::string rest;
      std::getline(in, rest);
      continue;
    }
    return tok;
  }
  throw std::runtime_error("PGM: unexpected end of file");
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_pgm(const std::filesystem::path& path, const Image2D& image, double scale_max) {
  double top = scale_max;
  if (!(top > 0.0)) {
    top = 0.0;
    for (double v : image.values) top = std::max(top, v);
  }
  auto out = open_out(path);
  out << "P2\n" << image.width << ' ' << image.height << "\n65535\n";
  for (std::size_t y = 0; y < image.height; ++y) {
    for (std::size_t x = 0; x < image.width; ++x) {
      const double v = top > 0.0 ? image.at(x, y) / top : 0.0;
      const auto level = static_cast<long>(std::lround(std::clamp(v, 0.0, 1.0) * 65535.0));
      out << level << (x + 1 < image.width ? ' ' : '\n');
    }
  }
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

Image2D read_pgm(const std::filesystem::path& path) {
  auto in = open_in(path);
  if (next_token(in) != "P2") throw std::runtime_error("PGM: only ASCII P2 files are supported");
  const auto width = std::stoul(next_token(in));
  const auto height = std::stoul(next_token(in));
  const double maxval = std::stod(next_token(in));
  if (width == 0 || height == 0 || !(maxval > 0.0)) throw std::runtime_error("PGM: invalid header");
  Image2D img(width, height);
  for (auto& v : img.values) {
    const double level = std::stod(next_token(in));
    if (level < 0.0 || level > maxval) throw std::runtime_error("PGM: pixel value outside [0, maxval]");
    v = level / maxval;
  }
  return img;
}

void write_csv_vector(const std::filesystem::path& path, std::span<const double> values) {
  auto out = open_out(path);
  for (double v : values) out << format_double(v) << '\n';
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::vector<double> read_csv_vector(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::vector<double> values;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    values.push_back(std::stod(line.substr(0, comma)));
  }
  return values;
}

void write_csv_table(const std::filesystem::path& path, const std::vector<std::string>& header,
                     const std::vector<std::vector<double>>& rows) {
  auto out = open_out(path);
  for (std::size_t c = 0; c < header.size(); ++c) out << header[c] << (c + 1 < header.size() ? ',' : '\n');
  for (const auto& row : rows) {
    if (row.size() != header.size()) throw std::runtime_error("CSV row width does not match header");
    for (std::size_t c = 0; c < row.size(); ++c) out << format_double(row[c]) << (c + 1 < row.size() ? ',' : '\n');
  }
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace dcloss::io
