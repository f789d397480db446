#include <filesystem>
#include <fstream>
#include <map>
#include <string>

#include "doctest.h"

#include "afford/cli.hpp"
#include "afford/config.hpp"
#include "afford/dataset.hpp"
#include "afford/heatmap.hpp"
#include "afford/netpbm.hpp"

using namespace afford;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("afford-data-" + tag);
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
};

// Collects (relative path -> bytes) for a whole tree.
std::map<std::string, std::string> tree_bytes(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    out[fs::relative(e.path(), root).string()] =
        std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  }
  return out;
}

int cli(std::initializer_list<const char*> args) {
  std::vector<const char*> argv = {"afford"};
  argv.insert(argv.end(), args.begin(), args.end());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

TEST_SUITE("data_cli") {
  TEST_CASE("netpbm round trip is byte-exact") {
    TempDir tmp("netpbm");
    PixelBuffer img;
    img.height = 3;
    img.width = 2;
    img.channels = 3;
    for (int i = 0; i < 18; ++i) img.bytes.push_back(static_cast<std::uint8_t>(i * 13));
    const std::string p = (tmp.path / "x.ppm").string();
    write_ppm(p, img);
    const PixelBuffer back = read_ppm(p);
    CHECK(back.height == 3);
    CHECK(back.width == 2);
    CHECK(back.bytes == img.bytes);

    PixelBuffer gray;
    gray.height = 2;
    gray.width = 2;
    gray.channels = 1;
    gray.bytes = {0, 128, 200, 255};
    const std::string q = (tmp.path / "y.pgm").string();
    write_pgm(q, gray);
    CHECK(read_pgm(q).bytes == gray.bytes);
    CHECK_THROWS_AS(read_pgm(p), Error);  // magic mismatch
  }

  TEST_CASE("synthetic generation is deterministic and correctly sized") {
    TempDir a("gen-a"), b("gen-b");
    SyntheticSpec spec;
    spec.n_objects = 2;
    spec.n_affordances = 2;
    spec.image_size = 32;
    spec.seed = 7;
    generate_synthetic(spec, a.str());
    generate_synthetic(spec, b.str());
    CHECK(tree_bytes(a.path) == tree_bytes(b.path));

    SyntheticSpec big;
    big.n_objects = 6;
    big.n_affordances = 4;
    big.seed = 1;
    TempDir c("gen-c");
    generate_synthetic(big, c.str());
    const DatasetManifest train = load_manifest(c.str(), "Seen", /*one_shot=*/true);
    const DatasetManifest test = load_manifest(c.str(), "Seen", /*one_shot=*/false);
    CHECK(train.entries.size() == 6);
    CHECK(test.entries.size() >= 12);
    CHECK(train.labels.num_affordances() == 4);
    CHECK(train.labels.num_objects() == 6);
  }

  TEST_CASE("synthetic masks are nonzero exactly inside their image regions") {
    TempDir tmp("gen-mask");
    SyntheticSpec spec;
    spec.n_objects = 2;
    spec.n_affordances = 2;
    spec.seed = 3;
    generate_synthetic(spec, tmp.str());
    const DatasetManifest manifest = load_manifest(tmp.str(), "Seen", true);
    for (const Sample& s : load_samples(manifest)) {
      for (const AffordanceMask& m : s.masks) {
        // Inside the mask the image must show one constant non-background
        // color; the mask itself is exactly {0, 255}.
        bool any = false;
        for (std::size_t y = 0; y < m.height; ++y)
          for (std::size_t x = 0; x < m.width; ++x) {
            const double v = m.values.at(y, x);
            CHECK((v == 0.0 || v == 255.0));
            any |= v > 0.0;
          }
        CHECK(any);
      }
    }
  }

  TEST_CASE("manifest enumeration is stable and validates the one-shot invariant") {
    TempDir tmp("manifest");
    SyntheticSpec spec;
    spec.n_objects = 3;
    spec.n_affordances = 2;
    spec.seed = 11;
    generate_synthetic(spec, tmp.str());

    const DatasetManifest m1 = load_manifest(tmp.str(), "Seen", true);
    const DatasetManifest m2 = load_manifest(tmp.str(), "Seen", true);
    REQUIRE(m1.entries.size() == m2.entries.size());
    for (std::size_t i = 0; i < m1.entries.size(); ++i) {
      CHECK(m1.entries[i].id == m2.entries[i].id);
      CHECK(m1.entries[i].image_path == m2.entries[i].image_path);
      CHECK(m1.entries[i].masks == m2.entries[i].masks);
    }
    CHECK(manifest_to_text(m1) == manifest_to_text(m2));

    // Duplicate image for one object breaks one-shot loading.
    const DatasetManifest test = load_manifest(tmp.str(), "Seen", false);
    const auto& entry = m1.entries[0];
    const fs::path img(entry.image_path);
    fs::copy_file(img, img.parent_path() / "zz_dup.ppm");
    const fs::path mask =
        fs::path(entry.masks[0].second).parent_path() / "zz_dup.pgm";
    fs::copy_file(entry.masks[0].second, mask);
    CHECK_THROWS_AS(load_manifest(tmp.str(), "Seen", true), Error);
    CHECK_NOTHROW(load_manifest(tmp.str(), "Seen", false));
    (void)test;
  }

  TEST_CASE("missing trees, missing masks and unknown classes are reported") {
    TempDir tmp("errors");
    CHECK_THROWS_AS(load_manifest(tmp.str(), "Seen", true), Error);

    SyntheticSpec spec;
    spec.n_objects = 2;
    spec.n_affordances = 2;
    spec.seed = 5;
    generate_synthetic(spec, tmp.str());
    const DatasetManifest good = load_manifest(tmp.str(), "Seen", true);

    // Remove one mask file.
    fs::remove(good.entries[0].masks[0].second);
    CHECK_THROWS_AS(load_manifest(tmp.str(), "Seen", true), Error);

    // A class directory outside the expected label space.
    TempDir tmp2("errors2");
    generate_synthetic(spec, tmp2.str());
    LabelSpace expected = good.labels;
    expected.affordance_names = {"something_else", "other"};
    CHECK_THROWS_AS(load_manifest(tmp2.str(), "Seen", true, &expected), Error);
  }

  TEST_CASE("heatmap export writes quantized grayscale plus an overlay") {
    TempDir tmp("heatmap");
    ImageTensor img;
    img.height = img.width = 4;
    img.pixels = Tensor({4, 4, 3});
    for (double& v : img.pixels.data()) v = 0.25;

    const std::string stem = (tmp.path / "pred").string();
    export_heatmap(Tensor::full({4, 4}, 0.5), img, stem);
    const PixelBuffer gray = read_pgm(stem + ".pgm");
    for (std::uint8_t b : gray.bytes) CHECK(b == 128);  // round-half-up of 127.5
    const PixelBuffer overlay = read_ppm(stem + "_overlay.ppm");
    CHECK(overlay.bytes.size() == 48);

    export_heatmap(Tensor(4, 4), img, stem);
    for (std::uint8_t b : read_pgm(stem + ".pgm").bytes) CHECK(b == 0);
    export_heatmap(Tensor::full({4, 4}, 1.0), img, stem);
    for (std::uint8_t b : read_pgm(stem + ".pgm").bytes) CHECK(b == 255);
  }

  TEST_CASE("heatmap quantization round-trips within 1/510") {
    TempDir tmp("roundtrip");
    ImageTensor img;
    img.height = 1;
    img.width = 64;
    img.pixels = Tensor({1, 64, 3});
    Tensor pred(1, 64);
    for (std::size_t i = 0; i < 64; ++i) pred[i] = static_cast<double>(i) / 63.0;
    const std::string stem = (tmp.path / "q").string();
    export_heatmap(pred, img, stem);
    const PixelBuffer gray = read_pgm(stem + ".pgm");
    for (std::size_t i = 0; i < 64; ++i)
      CHECK(std::abs(static_cast<double>(gray.bytes[i]) / 255.0 - pred[i]) <= 1.0 / 510.0);
  }

  TEST_CASE("config parser handles comments, trimming and errors") {
    const auto kv = parse_config_text("# comment\n lr = 0.02 \n\nseed=9 # tail\nroot = /d\n");
    CHECK(kv.at("lr") == "0.02");
    CHECK(kv.at("seed") == "9");
    CHECK(kv.at("root") == "/d");
    CHECK_THROWS_AS(parse_config_text("novalue\n"), Error);
    CHECK_THROWS_AS(parse_config_text("a=1\na=2\n"), Error);

    TrainConfig c;
    apply_config(c, kv);
    CHECK(c.hp.lr == 0.02);
    CHECK(c.hp.seed == 9);
    CHECK(c.root == "/d");
    CHECK_THROWS_AS(apply_config(c, {{"not_a_key", "1"}}), Error);
    CHECK_THROWS_AS(apply_config(c, {{"lr", "fast"}}), Error);

    SyntheticSpec spec;
    apply_config(spec, {{"synth_objects", "3"}, {"seed", "4"}});
    CHECK(spec.n_objects == 3);
    CHECK(spec.seed == 4);
  }

  TEST_CASE("cli: usage errors exit 1, missing data exits 2, help exits 0") {
    CHECK(cli({"eval"}) == 1);                       // --config required
    CHECK(cli({"--help"}) == 0);
    CHECK(cli({"no-such-command"}) == 1);
    CHECK(cli({"train", "--config", "/nonexistent/cfg", "--bogus-flag"}) == 1);
    TempDir tmp("cli");
    const std::string cfg = (tmp.path / "c.cfg").string();
    std::ofstream(cfg) << "root = " << (tmp.path / "missing-root").string() << "\n";
    CHECK(cli({"eval", "--config", cfg.c_str()}) == 2);  // runtime failure
  }

  TEST_CASE("cli: gen-synthetic twice produces identical trees") {
    TempDir a("cli-gen-a"), b("cli-gen-b");
    const std::string ra = a.str() + "/ds", rb = b.str() + "/ds";
    CHECK(cli({"gen-synthetic", "--seed", "7", "--objects", "2", "--affordances", "2",
               "--out", ra.c_str()}) == 0);
    CHECK(cli({"gen-synthetic", "--seed", "7", "--objects", "2", "--affordances", "2",
               "--out", rb.c_str()}) == 0);
    CHECK(tree_bytes(ra) == tree_bytes(rb));
  }

  TEST_CASE("cli: train then eval and ablate on a small synthetic set") {
    TempDir tmp("cli-flow");
    const std::string root = (tmp.path / "ds").string();
    CHECK(cli({"gen-synthetic", "--seed", "3", "--objects", "2", "--affordances", "2",
               "--out", root.c_str()}) == 0);

    const std::string out = (tmp.path / "out").string();
    const std::string cfg = (tmp.path / "c.cfg").string();
    std::ofstream(cfg) << "root = " << root << "\nout_dir = " << out
                       << "\niterations = 20\neval_interval = 10\nd_e = 8\nd_v = 8\nd_t = 8\n"
                          "encoder_layers = 2\nprompt_length = 4\ndecoder_layers = 1\n";
    CHECK(cli({"train", "--config", cfg.c_str(), "--seed", "2"}) == 0);
    CHECK(fs::exists(fs::path(out) / "model.ckpt"));

    CHECK(cli({"eval", "--config", cfg.c_str()}) == 0);
    CHECK(fs::exists(fs::path(out) / "report.txt"));
    CHECK(fs::exists(fs::path(out) / "report.json"));

    CHECK(cli({"ablate", "--config", cfg.c_str()}) == 0);
    std::ifstream table(fs::path(out) / "ablation.txt");
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(table, line)) lines.push_back(line);
    REQUIRE(lines.size() == 5);  // header + four rows
    CHECK(lines[1].substr(0, 3) == "bce");
    CHECK(lines[4].substr(0, 11) == "bce+ami+omi");

    // predict: heatmaps for the first training image.
    const DatasetManifest manifest = load_manifest(root, "Seen", true);
    const std::string ckpt = out + "/model.ckpt";
    const std::string pred_dir = (tmp.path / "pred").string();
    CHECK(cli({"predict", "--checkpoint", ckpt.c_str(), "--image",
               manifest.entries[0].image_path.c_str(), "--out", pred_dir.c_str()}) == 0);
    for (const auto& aff : manifest.labels.affordance_names) {
      CHECK(fs::exists(fs::path(pred_dir) / (aff + ".pgm")));
      CHECK(fs::exists(fs::path(pred_dir) / (aff + "_overlay.ppm")));
    }
  }

  TEST_CASE("cli: sweep writes the matrix files") {
    TempDir tmp("cli-sweep");
    const std::string root = (tmp.path / "ds").string();
    CHECK(cli({"gen-synthetic", "--seed", "3", "--objects", "2", "--affordances", "2",
               "--out", root.c_str()}) == 0);
    const std::string out = (tmp.path / "out").string();
    const std::string cfg = (tmp.path / "c.cfg").string();
    std::ofstream(cfg) << "root = " << root << "\nout_dir = " << out
                       << "\niterations = 10\neval_interval = 10\nd_e = 8\nd_v = 8\nd_t = 8\n"
                          "encoder_layers = 2\nprompt_length = 4\ndecoder_layers = 1\n";
    CHECK(cli({"sweep", "--config", cfg.c_str(), "--axis", "lambda", "--grid", "0.01,1.0"}) ==
          0);
    CHECK(fs::exists(fs::path(out) / "sweep.json"));
    CHECK(fs::exists(fs::path(out) / "sweep.txt"));
    CHECK(cli({"sweep", "--config", cfg.c_str(), "--axis", "bogus"}) == 1);
  }
}
