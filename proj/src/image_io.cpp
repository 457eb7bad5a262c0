#include "litemono/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <vector>

namespace litemono {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

File open_file(const std::filesystem::path& path, const char* mode) {
  File f(std::fopen(path.c_str(), mode));
  if (!f) throw std::runtime_error("cannot open " + path.string() + ": " + std::strerror(errno));
  return f;
}

[[noreturn]] void png_fail(const std::filesystem::path& path, const char* what) {
  throw std::runtime_error(std::string(what) + ": " + path.string());
}

std::uint32_t to_le(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) return __builtin_bswap32(v);
  return v;
}

}  // namespace

Tensord read_png(const std::filesystem::path& path) {
  File f = open_file(path, "rb");
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, f.get()) != 8 || png_sig_cmp(sig, 0, 8)) png_fail(path, "not a PNG file");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    png_fail(path, "libpng initialisation failed");
  }
  std::vector<unsigned char> buf;
  std::vector<png_bytep> rows;
  png_uint_32 w = 0, h = 0;
  int depth = 0;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    png_fail(path, "corrupt PNG");
  }
  png_init_io(png, f.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  w = png_get_image_width(png, info);
  h = png_get_image_height(png, info);
  depth = png_get_bit_depth(png, info);
  const int color = png_get_color_type(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) {
    png_set_tRNS_to_alpha(png);
    png_set_strip_alpha(png);
  }
  if (depth == 16 && std::endian::native == std::endian::little) png_set_swap(png);
  png_read_update_info(png, info);
  depth = png_get_bit_depth(png, info);
  const std::size_t stride = png_get_rowbytes(png, info);
  buf.resize(stride * h);
  rows.resize(h);
  for (png_uint_32 i = 0; i < h; ++i) rows[i] = buf.data() + i * stride;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  Tensord out({1, 3, static_cast<Index>(h), static_cast<Index>(w)});
  const Index plane = static_cast<Index>(w) * h;
  for (Index i = 0; i < static_cast<Index>(h); ++i)
    for (Index j = 0; j < static_cast<Index>(w); ++j)
      for (Index c = 0; c < 3; ++c) {
        double v;
        if (depth == 16) {
          std::uint16_t s;
          std::memcpy(&s, rows[i] + (j * 3 + c) * 2, 2);
          v = s / 65535.0;
        } else {
          v = rows[i][j * 3 + c] / 255.0;
        }
        out.data()[c * plane + i * w + j] = v;
      }
  return out;
}

void write_png(const std::filesystem::path& path, const Tensord& image, int bit_depth) {
  if (image.rank() != 4 || image.dim(0) != 1 || (image.dim(1) != 1 && image.dim(1) != 3))
    throw ShapeError("write_png: expected 1 x {1,3} x H x W, got " + shape_string(image.shape()));
  if (bit_depth != 8 && bit_depth != 16) throw std::invalid_argument("write_png: bit depth must be 8 or 16");
  const Index ch = image.dim(1), h = image.dim(2), w = image.dim(3), plane = h * w;
  const int bytes = bit_depth / 8;
  const double full = bit_depth == 8 ? 255.0 : 65535.0;
  std::vector<unsigned char> buf(static_cast<std::size_t>(plane * ch * bytes));
  for (Index i = 0; i < h; ++i)
    for (Index j = 0; j < w; ++j)
      for (Index c = 0; c < ch; ++c) {
        const double v = std::clamp(image.ptr()[c * plane + i * w + j], 0.0, 1.0);
        const auto q = static_cast<std::uint32_t>(std::lround(v * full));
        unsigned char* dst = buf.data() + ((i * w + j) * ch + c) * bytes;
        if (bytes == 1) {
          dst[0] = static_cast<unsigned char>(q);
        } else {
          dst[0] = static_cast<unsigned char>(q >> 8);  // PNG is big-endian
          dst[1] = static_cast<unsigned char>(q & 0xff);
        }
      }
  File f = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    png_fail(path, "libpng initialisation failed");
  }
  std::vector<png_bytep> rows(static_cast<std::size_t>(h));
  for (Index i = 0; i < h; ++i) rows[i] = buf.data() + i * w * ch * bytes;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    png_fail(path, "failed writing PNG");
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), bit_depth,
               ch == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

void write_depth_f32(const std::filesystem::path& path, const Tensord& depth) {
  if (depth.rank() != 4 || depth.dim(0) != 1 || depth.dim(1) != 1)
    throw ShapeError("write_depth_f32: expected 1 x 1 x H x W, got " + shape_string(depth.shape()));
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  const std::uint32_t w = to_le(static_cast<std::uint32_t>(depth.dim(3)));
  const std::uint32_t h = to_le(static_cast<std::uint32_t>(depth.dim(2)));
  out.write("LMD1", 4);
  out.write(reinterpret_cast<const char*>(&w), 4);
  out.write(reinterpret_cast<const char*>(&h), 4);
  for (double v : depth.data()) {
    const std::uint32_t bits = to_le(std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    out.write(reinterpret_cast<const char*>(&bits), 4);
  }
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

Tensord read_depth_f32(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  char magic[4];
  std::uint32_t w = 0, h = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&w), 4);
  in.read(reinterpret_cast<char*>(&h), 4);
  if (!in || std::memcmp(magic, "LMD1", 4) != 0) throw std::runtime_error("not a depth file: " + path.string());
  w = to_le(w);
  h = to_le(h);
  Tensord out({1, 1, static_cast<Index>(h), static_cast<Index>(w)});
  for (double& v : out.data()) {
    std::uint32_t bits;
    in.read(reinterpret_cast<char*>(&bits), 4);
    v = std::bit_cast<float>(to_le(bits));
  }
  if (!in) throw std::runtime_error("truncated depth file: " + path.string());
  return out;
}

Tensord colorize(const Tensord& map, double lo, double hi) {
  if (map.rank() != 4 || map.dim(1) != 1 || map.dim(0) != 1)
    throw ShapeError("colorize: expected 1 x 1 x H x W, got " + shape_string(map.shape()));
  const Index plane = map.dim(2) * map.dim(3);
  const auto& table = turbo_table();
  Tensord out({1, 3, map.dim(2), map.dim(3)});
  const double span = hi > lo ? hi - lo : 1.0;
  for (Index q = 0; q < plane; ++q) {
    const double t = std::clamp((map.ptr()[q] - lo) / span, 0.0, 1.0);
    const auto& rgb = table[static_cast<std::size_t>(std::lround(t * 255))];
    for (int c = 0; c < 3; ++c) out.data()[c * plane + q] = rgb[c] / 255.0;
  }
  return out;
}

Tensord colorize(const Tensord& map) {
  std::vector<double> v(map.data().begin(), map.data().end());
  if (v.empty()) throw ShapeError("colorize: empty map");
  const double lo = *std::min_element(v.begin(), v.end());
  const std::size_t k = static_cast<std::size_t>(0.95 * static_cast<double>(v.size() - 1));
  std::nth_element(v.begin(), v.begin() + k, v.end());
  return colorize(map, lo, v[k]);
}

Tensord side_by_side(const Tensord& left, const Tensord& right) {
  auto rgb = [](const Tensord& x) {
    if (x.rank() != 4 || x.dim(0) != 1) throw ShapeError("side_by_side: expected 1 x C x H x W");
    return x.dim(1) == 3 ? x : concat(std::vector<Tensord>{x, x, x}, 1);
  };
  return concat(std::vector<Tensord>{rgb(left), rgb(right)}, 3);
}

}  // namespace litemono
