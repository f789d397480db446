#include "afford/heatmap.hpp"

#include "afford/netpbm.hpp"

namespace afford {

void export_heatmap(const Tensor& prediction, const ImageTensor& image,
                    const std::string& out_stem) {
  check(prediction.ndim() == 2, "[export_heatmap] prediction must be H x W");
  check(prediction.rows() == image.height && prediction.cols() == image.width,
        "[export_heatmap] prediction and image shapes disagree");

  PixelBuffer gray;
  gray.height = image.height;
  gray.width = image.width;
  gray.channels = 1;
  gray.bytes.reserve(prediction.numel());
  for (double p : prediction.data()) gray.bytes.push_back(quantize_unit(p));
  write_pgm(out_stem + ".pgm", gray);

  PixelBuffer overlay;
  overlay.height = image.height;
  overlay.width = image.width;
  overlay.channels = 3;
  overlay.bytes.resize(prediction.numel() * 3);
  for (std::size_t i = 0; i < prediction.numel(); ++i) {
    const double p = prediction[i];
    const double heat[3] = {p, 0.0, 1.0 - p};
    for (std::size_t c = 0; c < 3; ++c)
      overlay.bytes[i * 3 + c] = quantize_unit(0.5 * image.pixels[i * 3 + c] + 0.5 * heat[c]);
  }
  write_ppm(out_stem + "_overlay.ppm", overlay);
}

}  // namespace afford
