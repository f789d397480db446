#include <filesystem>
#include <fstream>

#include "doctest.h"

#include "afford/extern_encoders.hpp"

using namespace afford;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("afford-extern-" + tag);
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::uint32_t read_u32(const std::string& s, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i)
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(s[at + i])) << (8 * i);
  return v;
}

// Echo helper: parses the text request and returns rows whose entries encode
// (name length, row, column), so the adapter round trip is fully observable.
const char* kFakeTextEncoder = R"PY(
import sys, struct
data = sys.stdin.buffer.read()
assert data[:4] == b'ATXQ'
off = 4
ver, p, de = struct.unpack_from('<III', data, off); off += 12
assert ver == 1
off += 4 * p * de
(n,) = struct.unpack_from('<I', data, off); off += 4
names = []
for _ in range(n):
    (l,) = struct.unpack_from('<I', data, off); off += 4
    names.append(data[off:off+l].decode()); off += l
assert off == len(data)
dt = 3
out = b'ATXR' + struct.pack('<II', n, dt)
for i, name in enumerate(names):
    for j in range(dt):
        out += struct.pack('<f', float(len(name) + 10 * i + j))
sys.stdout.buffer.write(out)
)PY";

const char* kFakeImageEncoder = R"PY(
import sys, struct
data = sys.stdin.buffer.read()
assert data[:4] == b'AIMQ'
off = 4
ver, h, w, nl = struct.unpack_from('<IIII', data, off); off += 16
layers = struct.unpack_from('<%dI' % nl, data, off); off += 4 * nl
assert off + 4 * h * w * 3 == len(data)
L, gh, gw, dv = max(1, nl), 2, 2, 3
out = b'AIMR' + struct.pack('<IIII', L, gh, gw, dv)
for l in range(L):
    base = layers[l] if nl else 0
    for i in range(gh * gw * dv):
        out += struct.pack('<f', float(base * 100 + i))
for i in range(dv):
    out += struct.pack('<f', float(7 + i))
sys.stdout.buffer.write(out)
)PY";

std::string write_script(const TempDir& tmp, const char* body, const char* name) {
  const fs::path p = tmp.path / name;
  std::ofstream(p) << body;
  return "python3 " + p.string();
}

}  // namespace

TEST_SUITE("extern_encoders") {
  TEST_CASE("text request bytes follow the documented layout") {
    Tensor ctx = Tensor::matrix(2, 2, {1.0, 2.0, 3.0, 4.0});
    const std::string req = encode_text_request({"cup", "knife"}, ctx);
    CHECK(req.substr(0, 4) == "ATXQ");
    CHECK(read_u32(req, 4) == 1);   // version
    CHECK(read_u32(req, 8) == 2);   // p
    CHECK(read_u32(req, 12) == 2);  // d_e
    const std::size_t names_at = 16 + 4 * 4;
    CHECK(read_u32(req, names_at) == 2);
    CHECK(read_u32(req, names_at + 4) == 3);
    CHECK(req.substr(names_at + 8, 3) == "cup");
    // Empty context: p and d_e are zero.
    const std::string bare = encode_text_request({"cup"}, Tensor());
    CHECK(read_u32(bare, 8) == 0);
    CHECK(read_u32(bare, 12) == 0);
  }

  TEST_CASE("image request bytes follow the documented layout") {
    ImageTensor img;
    img.height = 2;
    img.width = 1;
    img.pixels = Tensor({2, 1, 3});
    const std::string req = encode_image_request(img, {3, 7});
    CHECK(req.substr(0, 4) == "AIMQ");
    CHECK(read_u32(req, 8) == 2);   // height
    CHECK(read_u32(req, 12) == 1);  // width
    CHECK(read_u32(req, 16) == 2);  // layer index count
    CHECK(read_u32(req, 20) == 3);
    CHECK(read_u32(req, 24) == 7);
    CHECK(req.size() == 28 + 4 * 6);
  }

  TEST_CASE("response parsers reject malformed blocks") {
    CHECK_THROWS_AS(parse_text_response("BOGUS"), Error);
    CHECK_THROWS_AS(parse_text_response(std::string("ATXR\x01\x00\x00\x00", 8)), Error);
    CHECK_THROWS_AS(parse_image_response("AIMR"), Error);
  }

  TEST_CASE("subprocess round trip through a fake text encoder") {
    TempDir tmp("text");
    const std::string cmd = write_script(tmp, kFakeTextEncoder, "enc.py");
    Tensor ctx = Tensor::matrix(2, 4, {0, 1, 2, 3, 4, 5, 6, 7});
    const Tensor rows = external_text_features(cmd, {"cup", "tennis racket"}, ctx);
    REQUIRE(rows.rows() == 2);
    REQUIRE(rows.cols() == 3);
    CHECK(rows.at(0, 0) == 3.0);   // len("cup")
    CHECK(rows.at(0, 2) == 5.0);
    CHECK(rows.at(1, 0) == 23.0);  // len("tennis racket") + 10
  }

  TEST_CASE("subprocess round trip through a fake image encoder") {
    TempDir tmp("image");
    const std::string cmd = write_script(tmp, kFakeImageEncoder, "enc.py");
    ImageTensor img;
    img.height = img.width = 4;
    img.pixels = Tensor({4, 4, 3});
    const PatchFeatureMap f = external_encode_image(cmd, img, {2, 5});
    REQUIRE(f.layer_stack.size() == 2);
    CHECK(f.grid_h == 2);
    CHECK(f.grid_w == 2);
    CHECK(f.layer_stack[0][0] == 200.0);  // layer index 2 -> base 200
    CHECK(f.layer_stack[1][0] == 500.0);
    CHECK(f.cls[0] == 7.0);
    CHECK(f.cls[2] == 9.0);
  }

  TEST_CASE("helper failures surface as errors") {
    CHECK_THROWS_AS(run_subprocess("exit 3", "ignored"), Error);
    CHECK(run_subprocess("cat", "roundtrip") == "roundtrip");
  }
}
