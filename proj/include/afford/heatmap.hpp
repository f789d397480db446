#pragma once

#include <string>

#include "afford/core_types.hpp"

namespace afford {

// Writes two files for a prediction map:
//   <out_stem>.pgm          round(255 * p), round-half-up grayscale
//   <out_stem>_overlay.ppm  0.5 * image + 0.5 * heat, heat = (p, 0, 1 - p)
// Reading the grayscale back and dividing by 255 recovers the prediction
// within 1/510.
void export_heatmap(const Tensor& prediction, const ImageTensor& image,
                    const std::string& out_stem);

}  // namespace afford
