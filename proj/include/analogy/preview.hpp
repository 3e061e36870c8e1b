#pragma once

#include <cstdint>
#include <string>

#include "analogy/inference.hpp"

namespace analogy {

/// Training preview of scale n. One row per domain: the reconstruction, a
/// random sample and that sample mapped into the other domain. Refinement
/// models get a single row without the mapping.
Image preview_grid(const ModelBundle& m, int n, std::uint64_t seed);

/// `count` random samples of `req.from` above their translations.
Image sample_grid(const ModelBundle& m, int count, const InferenceRequest& req);

/// `img` below a white strip carrying `text` in a 5x7 bitmap font at
/// `scale` pixels per dot. Letters are drawn upper case; characters outside
/// [A-Z0-9 -_.:/=] render as '?'. The canvas widens to fit long labels.
Image with_label(const Image& img, const std::string& text, int scale = 1);

}  // namespace analogy
