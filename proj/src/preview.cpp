#include "analogy/preview.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "analogy/io.hpp"

namespace analogy {

namespace {

using Glyph = std::array<std::uint8_t, 7>;  // rows, bit 4 is the leftmost dot

Glyph glyph(char ch) {
  const char c = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  if (c >= 'A' && c <= 'Z') {
    static constexpr Glyph letters[26] = {
        {14, 17, 17, 31, 17, 17, 17}, {30, 17, 17, 30, 17, 17, 30}, {14, 17, 16, 16, 16, 17, 14},
        {28, 18, 17, 17, 17, 18, 28}, {31, 16, 16, 30, 16, 16, 31}, {31, 16, 16, 30, 16, 16, 16},
        {14, 17, 16, 23, 17, 17, 15}, {17, 17, 17, 31, 17, 17, 17}, {14, 4, 4, 4, 4, 4, 14},
        {7, 2, 2, 2, 2, 18, 12},      {17, 18, 20, 24, 20, 18, 17}, {16, 16, 16, 16, 16, 16, 31},
        {17, 27, 21, 21, 17, 17, 17}, {17, 17, 25, 21, 19, 17, 17}, {14, 17, 17, 17, 17, 17, 14},
        {30, 17, 17, 30, 16, 16, 16}, {14, 17, 17, 17, 21, 18, 13}, {30, 17, 17, 30, 20, 18, 17},
        {15, 16, 16, 14, 1, 1, 30},   {31, 4, 4, 4, 4, 4, 4},       {17, 17, 17, 17, 17, 17, 14},
        {17, 17, 17, 17, 17, 10, 4},  {17, 17, 17, 21, 21, 21, 10}, {17, 17, 10, 4, 10, 17, 17},
        {17, 17, 10, 4, 4, 4, 4},     {31, 1, 2, 4, 8, 16, 31},
    };
    return letters[c - 'A'];
  }
  if (c >= '0' && c <= '9') {
    static constexpr Glyph digits[10] = {
        {14, 17, 19, 21, 25, 17, 14}, {4, 12, 4, 4, 4, 4, 14},   {14, 17, 1, 2, 4, 8, 31},
        {31, 2, 4, 2, 1, 17, 14},     {2, 6, 10, 18, 31, 2, 2},  {31, 16, 30, 1, 1, 17, 14},
        {6, 8, 16, 30, 17, 17, 14},   {31, 1, 2, 4, 8, 8, 8},    {14, 17, 17, 14, 17, 17, 14},
        {14, 17, 17, 15, 1, 2, 12},
    };
    return digits[c - '0'];
  }
  switch (c) {
    case ' ': return {0, 0, 0, 0, 0, 0, 0};
    case '-': return {0, 0, 0, 31, 0, 0, 0};
    case '_': return {0, 0, 0, 0, 0, 0, 31};
    case '.': return {0, 0, 0, 0, 0, 12, 12};
    case ':': return {0, 12, 12, 0, 12, 12, 0};
    case '/': return {0, 1, 2, 4, 8, 16, 0};
    case '=': return {0, 0, 31, 0, 31, 0, 0};
    default: return {14, 17, 1, 2, 4, 0, 4};
  }
}

}  // namespace

Image preview_grid(const ModelBundle& m, int n, std::uint64_t seed) {
  std::vector<std::vector<Image>> rows;
  const std::vector<Domain> domains =
      m.refinement ? std::vector<Domain>{Domain::A} : std::vector<Domain>{Domain::A, Domain::B};
  for (Domain d : domains) {
    Rng rng = Rng::derive(seed, Stream::inference, static_cast<std::uint64_t>(n),
                          d == Domain::A ? 0u : 1u);
    const Image rec = uncond_chain(m, d, n, ChainMode::reconstruction, nullptr).back();
    const Image sample = uncond_chain(m, d, n, ChainMode::random, &rng).back();
    std::vector<Image> row{rec.clamped(), sample.clamped()};
    if (!m.refinement) row.push_back(translate_at(m, d, sample, n).clamped());
    rows.push_back(std::move(row));
  }
  return make_grid(rows);
}

Image sample_grid(const ModelBundle& m, int count, const InferenceRequest& req) {
  std::vector<std::vector<Image>> rows(2);
  for (int i = 0; i < count; ++i) {
    InferenceRequest r = req;
    r.seed = req.seed + static_cast<std::uint64_t>(i);
    AnalogyPair p = random_analogy(m, r);
    rows[0].push_back(std::move(p.sample));
    rows[1].push_back(std::move(p.mapped));
  }
  return make_grid(rows);
}

Image with_label(const Image& img, const std::string& text, int scale) {
  scale = std::max(scale, 1);
  const int margin = 2 * scale;
  const int text_w = static_cast<int>(text.size()) * 6 * scale;
  const int strip = 7 * scale + 2 * margin;
  const int width = std::max(img.width(), text_w + 2 * margin);
  Image out({img.height() + strip, width}, 1.0);
  for (int c = 0; c < Image::kChannels; ++c)
    for (int y = 0; y < img.height(); ++y)
      for (int x = 0; x < img.width(); ++x) out.at(c, strip + y, x) = img.at(c, y, x);
  for (std::size_t i = 0; i < text.size(); ++i) {
    const Glyph g = glyph(text[i]);
    const int x0 = margin + static_cast<int>(i) * 6 * scale;
    for (int row = 0; row < 7; ++row)
      for (int col = 0; col < 5; ++col) {
        if (!((g[static_cast<std::size_t>(row)] >> (4 - col)) & 1)) continue;
        for (int dy = 0; dy < scale; ++dy)
          for (int dx = 0; dx < scale; ++dx)
            for (int c = 0; c < Image::kChannels; ++c)
              out.at(c, margin + row * scale + dy, x0 + col * scale + dx) = -1.0;
      }
  }
  return out;
}

}  // namespace analogy
