#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "afford/core_types.hpp"

namespace afford {

// Wire protocol for out-of-process full-scale encoders. A request is written
// to the helper process's stdin, the response read from its stdout; both are
// little-endian binary. These adapters return plain feature values (no
// gradient crosses the process boundary), so they serve evaluation and
// prediction; prompt tuning requires an in-process encoder.
//
// Text request:  "ATXQ" u32 version=1, u32 p, u32 d_e, f32 ctx[p*d_e],
//                u32 n_names, { u32 len, bytes } per UTF-8 class name.
// Text response: "ATXR" u32 n_rows, u32 d_t, f32 rows[n_rows*d_t].
//
// Image request:  "AIMQ" u32 version=1, u32 height, u32 width,
//                 u32 n_layer_indices, u32 indices[...], f32 pixels[H*W*3].
// Image response: "AIMR" u32 L, u32 grid_h, u32 grid_w, u32 d_v,
//                 f32 layers[L*grid_h*grid_w*d_v], f32 cls[d_v].

std::string encode_text_request(const std::vector<std::string>& class_names,
                                const Tensor& context);
Tensor parse_text_response(const std::string& bytes);

std::string encode_image_request(const ImageTensor& image,
                                 const std::vector<std::uint32_t>& layer_indices);
PatchFeatureMap parse_image_response(const std::string& bytes);

// Runs `command` through /bin/sh, feeding `input` on stdin and returning the
// full stdout. Throws on spawn failure or nonzero exit.
std::string run_subprocess(const std::string& command, const std::string& input);

// High-level adapters.
Tensor external_text_features(const std::string& command,
                              const std::vector<std::string>& class_names,
                              const Tensor& context);
PatchFeatureMap external_encode_image(const std::string& command, const ImageTensor& image,
                                      const std::vector<std::uint32_t>& layer_indices);

}  // namespace afford
