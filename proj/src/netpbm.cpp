#include "afford/netpbm.hpp"

#include <cctype>
#include <cmath>
#include <fstream>

#include "afford/check.hpp"

namespace afford {

namespace {

void write_netpbm(const std::string& path, const char* magic, const PixelBuffer& buf,
                  std::size_t channels) {
  check(buf.channels == channels, std::string("[netpbm] wrong channel count for ") + magic);
  check(buf.bytes.size() == buf.height * buf.width * channels,
        "[netpbm] byte count does not match dimensions");
  check(buf.height > 0 && buf.width > 0, "[netpbm] empty image");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  check(out.good(), "[netpbm] cannot open for writing: " + path);
  out << magic << "\n" << buf.width << " " << buf.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(buf.bytes.data()),
            static_cast<std::streamsize>(buf.bytes.size()));
  check(out.good(), "[netpbm] write failed: " + path);
}

int next_header_token(std::istream& in) {
  // Skips whitespace and '#' comments, then parses one decimal token.
  for (;;) {
    int c = in.peek();
    check(c != EOF, "[netpbm] truncated header");
    if (c == '#') {
      std::string line;
      std::getline(in, line);
      continue;
    }
    if (std::isspace(c)) {
      in.get();
      continue;
    }
    break;
  }
  int v = 0;
  in >> v;
  check(in.good(), "[netpbm] malformed header token");
  return v;
}

PixelBuffer read_netpbm(const std::string& path, const char* magic, std::size_t channels) {
  std::ifstream in(path, std::ios::binary);
  check(in.good(), "[netpbm] cannot open: " + path);
  char m0 = 0, m1 = 0;
  in.get(m0);
  in.get(m1);
  check(m0 == magic[0] && m1 == magic[1],
        "[netpbm] unexpected magic in " + path + " (wanted " + magic + ")");
  const int w = next_header_token(in);
  const int h = next_header_token(in);
  const int maxval = next_header_token(in);
  check(w > 0 && h > 0, "[netpbm] bad dimensions in " + path);
  check(maxval == 255, "[netpbm] only maxval 255 is supported: " + path);
  in.get();  // single whitespace byte before the raster

  PixelBuffer buf;
  buf.height = static_cast<std::size_t>(h);
  buf.width = static_cast<std::size_t>(w);
  buf.channels = channels;
  buf.bytes.resize(buf.height * buf.width * channels);
  in.read(reinterpret_cast<char*>(buf.bytes.data()),
          static_cast<std::streamsize>(buf.bytes.size()));
  check(in.gcount() == static_cast<std::streamsize>(buf.bytes.size()),
        "[netpbm] truncated raster in " + path);
  return buf;
}

}  // namespace

void write_ppm(const std::string& path, const PixelBuffer& rgb) {
  write_netpbm(path, "P6", rgb, 3);
}

void write_pgm(const std::string& path, const PixelBuffer& gray) {
  write_netpbm(path, "P5", gray, 1);
}

PixelBuffer read_ppm(const std::string& path) { return read_netpbm(path, "P6", 3); }

PixelBuffer read_pgm(const std::string& path) { return read_netpbm(path, "P5", 1); }

std::uint8_t quantize_unit(double v) {
  const double scaled = std::floor(255.0 * v + 0.5);
  if (scaled <= 0.0) return 0;
  if (scaled >= 255.0) return 255;
  return static_cast<std::uint8_t>(scaled);
}

}  // namespace afford
