#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace afford {

// Minimal binary netpbm codec (P6 RGB / P5 grayscale, maxval 255). Chosen for
// the dataset on disk because the encoding is byte-exact and deterministic:
// identical pixels always produce identical files.

struct PixelBuffer {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;  // 3 for PPM, 1 for PGM
  std::vector<std::uint8_t> bytes;
};

void write_ppm(const std::string& path, const PixelBuffer& rgb);
void write_pgm(const std::string& path, const PixelBuffer& gray);
PixelBuffer read_ppm(const std::string& path);
PixelBuffer read_pgm(const std::string& path);

// round(255 * v) with round-half-up, clamped to [0, 255].
std::uint8_t quantize_unit(double v);

}  // namespace afford
