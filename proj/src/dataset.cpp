#include "afford/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <set>
#include <sstream>

#include "afford/netpbm.hpp"
#include "afford/rng.hpp"

namespace fs = std::filesystem;

namespace afford {

namespace {

constexpr const char* kImagesDir = "egocentric";
constexpr const char* kMasksDir = "GT";

std::vector<std::string> sorted_subdirs(const fs::path& dir) {
  std::vector<std::string> names;
  if (!fs::is_directory(dir)) return names;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_directory()) names.push_back(e.path().filename().string());
  std::sort(names.begin(), names.end());
  return names;
}

std::vector<std::string> sorted_files(const fs::path& dir, const std::string& ext) {
  std::vector<std::string> names;
  if (!fs::is_directory(dir)) return names;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ext)
      names.push_back(e.path().filename().string());
  std::sort(names.begin(), names.end());
  return names;
}

std::string phase_dir(bool one_shot) { return one_shot ? "trainset" : "testset"; }

std::size_t index_of(const std::vector<std::string>& names, const std::string& name,
                     const char* what) {
  auto it = std::lower_bound(names.begin(), names.end(), name);
  check(it != names.end() && *it == name,
        std::string("[load_manifest] unknown ") + what + " directory: " + name);
  return static_cast<std::size_t>(it - names.begin());
}

AffordanceMask decode_mask(const std::string& path, std::size_t class_id) {
  const PixelBuffer buf = read_pgm(path);
  AffordanceMask m;
  m.height = buf.height;
  m.width = buf.width;
  m.values = Tensor(buf.height, buf.width);
  for (std::size_t i = 0; i < buf.bytes.size(); ++i)
    m.values[i] = static_cast<double>(buf.bytes[i]);
  m.mode = MaskMode::kGroundtruthGray;
  m.class_id = class_id;
  return m;
}

}  // namespace

LabelSpace scan_label_space(const std::string& root, const std::string& split) {
  std::set<std::string> affordances, objects;
  bool any_phase = false;
  for (const char* phase : {"trainset", "testset"}) {
    const fs::path images = fs::path(root) / split / phase / kImagesDir;
    if (!fs::is_directory(images)) continue;
    any_phase = true;
    for (const std::string& aff : sorted_subdirs(images)) {
      affordances.insert(aff);
      for (const std::string& obj : sorted_subdirs(images / aff)) objects.insert(obj);
    }
  }
  check(any_phase, "[scan_label_space] no trainset/testset under " + root + "/" + split);
  LabelSpace labels;
  labels.affordance_names.assign(affordances.begin(), affordances.end());
  labels.object_names.assign(objects.begin(), objects.end());
  check(!labels.affordance_names.empty() && !labels.object_names.empty(),
        "[scan_label_space] empty label space under " + root + "/" + split);
  return labels;
}

DatasetManifest load_manifest(const std::string& root, const std::string& split, bool one_shot,
                              const LabelSpace* expected) {
  DatasetManifest manifest;
  manifest.root = root;
  manifest.split = split;
  manifest.one_shot = one_shot;
  manifest.labels = expected ? *expected : scan_label_space(root, split);

  const fs::path images_root = fs::path(root) / split / phase_dir(one_shot) / kImagesDir;
  const fs::path masks_root = fs::path(root) / split / phase_dir(one_shot) / kMasksDir;
  check(fs::is_directory(images_root),
        "[load_manifest] missing image tree: " + images_root.string());

  // (object, name) -> entry under construction; paths enumerate in sorted
  // order so the result never depends on filesystem listing order.
  std::map<std::string, ManifestEntry> grouped;
  for (const std::string& aff : sorted_subdirs(images_root)) {
    const std::size_t aff_idx = index_of(manifest.labels.affordance_names, aff, "affordance");
    for (const std::string& obj : sorted_subdirs(images_root / aff)) {
      const std::size_t obj_idx = index_of(manifest.labels.object_names, obj, "object");
      for (const std::string& file : sorted_files(images_root / aff / obj, ".ppm")) {
        const std::string stem = fs::path(file).stem().string();
        const std::string id = obj + "/" + stem;
        const fs::path mask_path = masks_root / aff / obj / (stem + ".pgm");
        check(fs::is_regular_file(mask_path),
              "[load_manifest] missing mask: " + mask_path.string());
        auto [it, inserted] = grouped.try_emplace(id);
        ManifestEntry& entry = it->second;
        if (inserted) {
          entry.id = id;
          entry.image_path = (images_root / aff / obj / file).string();
          entry.object_class = obj_idx;
        }
        entry.masks.emplace_back(aff_idx, mask_path.string());
      }
    }
  }
  check(!grouped.empty(), "[load_manifest] no samples under " + images_root.string());

  for (auto& [id, entry] : grouped) {
    std::sort(entry.masks.begin(), entry.masks.end());
    manifest.entries.push_back(std::move(entry));
  }

  if (one_shot) {
    std::map<std::size_t, std::size_t> per_object;
    for (const auto& e : manifest.entries) ++per_object[e.object_class];
    for (const auto& [obj, count] : per_object)
      check(count == 1, "[load_manifest] one-shot manifest has " + std::to_string(count) +
                            " images for object '" +
                            manifest.labels.object_names[obj] + "'");
  }

  for (const auto& e : manifest.entries)
    manifest.labels.object_of_image[e.id] = e.object_class;
  return manifest;
}

ImageTensor load_image(const std::string& path) {
  const PixelBuffer buf = read_ppm(path);
  ImageTensor img;
  img.height = buf.height;
  img.width = buf.width;
  img.pixels = Tensor({buf.height, buf.width, 3});
  for (std::size_t i = 0; i < buf.bytes.size(); ++i)
    img.pixels[i] = static_cast<double>(buf.bytes[i]) / 255.0;
  return img;
}

Sample load_sample(const DatasetManifest& manifest, const ManifestEntry& entry) {
  (void)manifest;
  Sample s;
  s.id = entry.id;
  s.image = load_image(entry.image_path);
  s.object_class = entry.object_class;
  for (const auto& [aff_idx, mask_path] : entry.masks) {
    AffordanceMask m = decode_mask(mask_path, aff_idx);
    check(m.height == s.image.height && m.width == s.image.width,
          "[load_sample] mask shape does not match image: " + mask_path);
    s.masks.push_back(std::move(m));
  }
  return s;
}

std::vector<Sample> load_samples(const DatasetManifest& manifest) {
  std::vector<Sample> out;
  out.reserve(manifest.entries.size());
  for (const auto& e : manifest.entries) out.push_back(load_sample(manifest, e));
  return out;
}

std::string manifest_to_text(const DatasetManifest& manifest) {
  // Paths are written relative to the root so the cache is position
  // independent and regeneration stays byte-identical.
  const auto relative = [&manifest](const std::string& p) {
    return fs::relative(p, manifest.root).string();
  };
  std::ostringstream out;
  out << "split " << manifest.split << "\n";
  out << "one_shot " << (manifest.one_shot ? "true" : "false") << "\n";
  for (const auto& e : manifest.entries) {
    out << "entry " << e.id << " object=" << manifest.labels.object_names[e.object_class]
        << " image=" << relative(e.image_path);
    for (const auto& [aff, path] : e.masks)
      out << " mask:" << manifest.labels.affordance_names[aff] << "=" << relative(path);
    out << "\n";
  }
  return out.str();
}

void SyntheticSpec::validate() const {
  check(n_objects >= 1 && n_affordances >= 1, "[SyntheticSpec] need objects and affordances");
  check(test_variants >= 2, "[SyntheticSpec] need at least two test variants per object");
  check(n_affordances <= 10,
        "[SyntheticSpec] at most 10 affordance hues are available at desk scale");
  const std::size_t slots = static_cast<std::size_t>(
      std::ceil(std::sqrt(static_cast<double>(n_affordances))));
  check(image_size / slots >= 8,
        "[SyntheticSpec] image too small for the affordance slot grid");
}

namespace {

struct Rect {
  std::size_t y0, x0, side;
};

// Slot geometry: affordance a gets a pitch x pitch slot in a square grid; the
// colored region is a (pitch/2)-sided square offset by pitch/4, so a jitter of
// up to pitch/8 keeps it inside the slot.
struct SlotLayout {
  std::size_t slots, pitch, region, offset, jitter_max;

  explicit SlotLayout(const SyntheticSpec& spec) {
    slots = static_cast<std::size_t>(
        std::ceil(std::sqrt(static_cast<double>(spec.n_affordances))));
    pitch = spec.image_size / slots;
    region = pitch / 2;
    offset = pitch / 4;
    jitter_max = pitch / 8;
  }

  Rect region_rect(std::size_t affordance, long dy, long dx) const {
    const std::size_t row = affordance / slots, col = affordance % slots;
    Rect r;
    r.y0 = row * pitch + static_cast<std::size_t>(static_cast<long>(offset) + dy);
    r.x0 = col * pitch + static_cast<std::size_t>(static_cast<long>(offset) + dx);
    r.side = region;
    return r;
  }
};

struct Color {
  std::uint8_t r, g, b;
};

Color quantize_color(double r, double g, double b) {
  return {quantize_unit(r), quantize_unit(g), quantize_unit(b)};
}

// Saturated anchor colors, one hue per affordance class. Regions of one class
// share a hue across objects (so class identity is a simple function of
// color) while per-object shading keeps every (object, affordance) signature
// distinct. Backgrounds are mid-tones well away from the anchors.
constexpr double kAnchors[][3] = {
    {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 1, 0},       {1, 0, 1},
    {0, 1, 1}, {1, 1, 1}, {0, 0, 0}, {1, 0.5, 0.25},  {0.25, 0.5, 1},
};

Color region_color(std::size_t object, std::size_t n_objects, std::size_t affordance) {
  const auto& a = kAnchors[affordance % std::size(kAnchors)];
  const double shade =
      0.08 + 0.27 * (n_objects == 1
                         ? 0.0
                         : static_cast<double>(object) / static_cast<double>(n_objects - 1));
  return quantize_color(a[0] * (1.0 - shade) + 0.5 * shade,
                        a[1] * (1.0 - shade) + 0.5 * shade,
                        a[2] * (1.0 - shade) + 0.5 * shade);
}

Color background_color(std::uint64_t seed, std::size_t object) {
  Rng rng(derive_seed(seed, "background/" + std::to_string(object)));
  return quantize_color(rng.uniform(0.35, 0.65), rng.uniform(0.35, 0.65),
                        rng.uniform(0.35, 0.65));
}

const char* kAffordanceWords[] = {"hold",  "press", "ride", "cut",  "pour",
                                  "swing", "open",  "lift", "sit",  "push"};
const char* kObjectWords[] = {"knife",  "cup",    "bicycle", "hammer", "bottle",
                              "racket", "chair",  "phone",   "pan",    "door"};

std::string nth_name(const char* const* words, std::size_t n_words, const char* prefix,
                     std::size_t i) {
  if (i < n_words) return words[i];
  return prefix + std::to_string(i);
}

void fill_rect(PixelBuffer& img, const Rect& r, Color c) {
  for (std::size_t y = r.y0; y < r.y0 + r.side; ++y)
    for (std::size_t x = r.x0; x < r.x0 + r.side; ++x) {
      const std::size_t at = (y * img.width + x) * 3;
      img.bytes[at] = c.r;
      img.bytes[at + 1] = c.g;
      img.bytes[at + 2] = c.b;
    }
}

}  // namespace

void generate_synthetic(const SyntheticSpec& spec, const std::string& root) {
  spec.validate();
  const SlotLayout layout(spec);

  std::vector<std::string> aff_names, obj_names;
  for (std::size_t a = 0; a < spec.n_affordances; ++a)
    aff_names.push_back(nth_name(kAffordanceWords, std::size(kAffordanceWords), "aff", a));
  for (std::size_t o = 0; o < spec.n_objects; ++o)
    obj_names.push_back(nth_name(kObjectWords, std::size(kObjectWords), "obj", o));

  const auto emit_sample = [&](const std::string& phase, std::size_t o,
                               const std::string& stem, bool jitter,
                               std::size_t variant) {
    PixelBuffer img;
    img.height = img.width = spec.image_size;
    img.channels = 3;
    img.bytes.assign(spec.image_size * spec.image_size * 3, 0);
    fill_rect(img, {0, 0, spec.image_size}, background_color(spec.seed, o));

    std::vector<PixelBuffer> masks(spec.n_affordances);
    for (std::size_t a = 0; a < spec.n_affordances; ++a) {
      long dy = 0, dx = 0;
      if (jitter && layout.jitter_max > 0) {
        Rng rng(derive_seed(spec.seed, "jitter/" + obj_names[o] + "/" + aff_names[a] + "/" +
                                           std::to_string(variant)));
        const long span = 2 * static_cast<long>(layout.jitter_max) + 1;
        dy = static_cast<long>(rng.below(static_cast<std::uint64_t>(span))) -
             static_cast<long>(layout.jitter_max);
        dx = static_cast<long>(rng.below(static_cast<std::uint64_t>(span))) -
             static_cast<long>(layout.jitter_max);
      }
      const Rect r = layout.region_rect(a, dy, dx);
      fill_rect(img, r, region_color(o, spec.n_objects, a));
      PixelBuffer& m = masks[a];
      m.height = m.width = spec.image_size;
      m.channels = 1;
      m.bytes.assign(spec.image_size * spec.image_size, 0);
      for (std::size_t y = r.y0; y < r.y0 + r.side; ++y)
        for (std::size_t x = r.x0; x < r.x0 + r.side; ++x)
          m.bytes[y * m.width + x] = 255;
    }

    for (std::size_t a = 0; a < spec.n_affordances; ++a) {
      const fs::path img_dir =
          fs::path(root) / "Seen" / phase / kImagesDir / aff_names[a] / obj_names[o];
      const fs::path mask_dir =
          fs::path(root) / "Seen" / phase / kMasksDir / aff_names[a] / obj_names[o];
      fs::create_directories(img_dir);
      fs::create_directories(mask_dir);
      write_ppm((img_dir / (stem + ".ppm")).string(), img);
      write_pgm((mask_dir / (stem + ".pgm")).string(), masks[a]);
    }
  };

  for (std::size_t o = 0; o < spec.n_objects; ++o) {
    emit_sample("trainset", o, obj_names[o] + "_00", /*jitter=*/false, 0);
    for (std::size_t v = 1; v <= spec.test_variants; ++v) {
      char stem[32];
      std::snprintf(stem, sizeof(stem), "_v%02zu", v);
      emit_sample("testset", o, obj_names[o] + stem, /*jitter=*/true, v);
    }
  }

  for (const bool one_shot : {true, false}) {
    const DatasetManifest manifest = load_manifest(root, "Seen", one_shot);
    const fs::path cache = fs::path(root) / "Seen" / (phase_dir(one_shot) + "/manifest.txt");
    std::ofstream out(cache);
    check(out.good(), "[generate_synthetic] cannot write manifest cache");
    out << manifest_to_text(manifest);
  }
}

}  // namespace afford
