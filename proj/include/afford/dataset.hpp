#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "afford/core_types.hpp"

namespace afford {

// On-disk layout (AGD20K convention):
//   <root>/<split>/trainset/egocentric/<affordance>/<object>/<name>.ppm
//   <root>/<split>/trainset/GT/<affordance>/<object>/<name>.pgm
//   <root>/<split>/testset/...
// The same image may appear under several affordance directories (byte
// identical); entries group those occurrences by (object, name), one mask per
// affordance. Splits are "Seen" / "Unseen"; the synthetic generator writes a
// "Seen" tree.

struct ManifestEntry {
  std::string id;  // "<object>/<name>"
  std::string image_path;
  std::size_t object_class = 0;
  std::vector<std::pair<std::size_t, std::string>> masks;  // (affordance index, path)
};

struct DatasetManifest {
  std::string root;
  std::string split;
  bool one_shot = false;
  LabelSpace labels;
  std::vector<ManifestEntry> entries;
};

// Affordance / object class names of a split, from both phases, sorted.
LabelSpace scan_label_space(const std::string& root, const std::string& split);

// one_shot selects the trainset tree and enforces the one-image-per-object
// invariant; otherwise the testset tree is read. When `expected` is given,
// class directories outside it are an error.
DatasetManifest load_manifest(const std::string& root, const std::string& split, bool one_shot,
                              const LabelSpace* expected = nullptr);

Sample load_sample(const DatasetManifest& manifest, const ManifestEntry& entry);
std::vector<Sample> load_samples(const DatasetManifest& manifest);

// PPM image -> [0,1] pixel tensor.
ImageTensor load_image(const std::string& path);

// Structured text cache of a manifest (one entry per line).
std::string manifest_to_text(const DatasetManifest& manifest);

struct SyntheticSpec {
  std::size_t n_objects = 6;
  std::size_t n_affordances = 4;
  std::size_t image_size = 32;
  std::size_t test_variants = 2;  // per object
  std::uint64_t seed = 0;

  void validate() const;
};

// Writes a complete one-shot dataset under <root>/Seen: one training image
// per object, `test_variants` jittered test images per object. Each
// (object, affordance) pair owns a distinct color signature and its mask is
// 255 exactly inside the colored region. Deterministic: the same spec always
// produces byte-identical trees.
void generate_synthetic(const SyntheticSpec& spec, const std::string& root);

}  // namespace afford
