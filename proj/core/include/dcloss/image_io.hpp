#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "dcloss/regularizers.hpp"

namespace dcloss::io {

/// ASCII PGM (P2), maxval 65535. Values are mapped linearly from
/// [0, scale_max] to [0, 65535] and clamped; scale_max <= 0 uses the image
/// maximum (an all-zero image writes zeros).
void write_pgm(const std::filesystem::path& path, const Image2D& image, double scale_max = 0.0);

/// Reads a P2 file. Pixel values are returned divided by maxval, i.e. in [0, 1].
/// Throws std::runtime_error on malformed input.
Image2D read_pgm(const std::filesystem::path& path);

/// One value per line, "%.17g", no header.
void write_csv_vector(const std::filesystem::path& path, std::span<const double> values);
std::vector<double> read_csv_vector(const std::filesystem::path& path);

/// Shortest round-trip decimal form ("%.17g"); "nan", "inf", "-inf" for
/// non-finite values.
std::string format_double(double v);

/// CSV with a header row; each row must match the header width.
void write_csv_table(const std::filesystem::path& path, const std::vector<std::string>& header,
                     const std::vector<std::vector<double>>& rows);

}  // namespace dcloss::io
