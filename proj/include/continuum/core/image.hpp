#pragma once

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

namespace continuum {

// RGBA image with float channels in [0, 1]. The alpha channel doubles as the
// valid-region mask after warping: alpha 0 marks pixels with no source data.
class Image {
 public:
  Image() = default;
  Image(int width, int height) : w_(width), h_(height), px_(static_cast<size_t>(width) * height * 4, 0.0f) {}

  int width() const { return w_; }
  int height() const { return h_; }

  float* pixel(int x, int y) { return px_.data() + (static_cast<size_t>(y) * w_ + x) * 4; }
  const float* pixel(int x, int y) const { return px_.data() + (static_cast<size_t>(y) * w_ + x) * 4; }

  std::vector<float>& data() { return px_; }
  const std::vector<float>& data() const { return px_; }

  void fill(float r, float g, float b, float a) {
    for (size_t i = 0; i < px_.size(); i += 4) {
      px_[i] = r;
      px_[i + 1] = g;
      px_[i + 2] = b;
      px_[i + 3] = a;
    }
  }

  // Bilinear sample at continuous pixel coordinates (px units, pixel centers
  // at integer+0.5). Out-of-bounds contributions are transparent black.
  void sample_bilinear(float px, float py, float out[4]) const {
    float fx = px - 0.5f;
    float fy = py - 0.5f;
    int x0 = static_cast<int>(std::floor(fx));
    int y0 = static_cast<int>(std::floor(fy));
    float ax = fx - x0;
    float ay = fy - y0;
    out[0] = out[1] = out[2] = out[3] = 0.0f;
    for (int dy = 0; dy < 2; ++dy) {
      int y = y0 + dy;
      if (y < 0 || y >= h_) continue;
      float wy = dy ? ay : 1.0f - ay;
      for (int dx = 0; dx < 2; ++dx) {
        int x = x0 + dx;
        if (x < 0 || x >= w_) continue;
        float wx = dx ? ax : 1.0f - ax;
        const float* p = pixel(x, y);
        float w = wx * wy;
        // premultiply by alpha so transparent neighbours do not bleed color
        out[0] += w * p[0] * p[3];
        out[1] += w * p[1] * p[3];
        out[2] += w * p[2] * p[3];
        out[3] += w * p[3];
      }
    }
    if (out[3] > 1e-6f) {
      out[0] /= out[3];
      out[1] /= out[3];
      out[2] /= out[3];
    }
  }

  // Box-filter downsample by an integer factor; alpha averaged like color.
  Image downsample(int factor) const {
    Image out(w_ / factor, h_ / factor);
    float inv = 1.0f / (factor * factor);
    for (int y = 0; y < out.h_; ++y) {
      for (int x = 0; x < out.w_; ++x) {
        float acc[4] = {0, 0, 0, 0};
        for (int dy = 0; dy < factor; ++dy)
          for (int dx = 0; dx < factor; ++dx) {
            const float* p = pixel(x * factor + dx, y * factor + dy);
            for (int c = 0; c < 4; ++c) acc[c] += p[c];
          }
        float* q = out.pixel(x, y);
        for (int c = 0; c < 4; ++c) q[c] = acc[c] * inv;
      }
    }
    return out;
  }

  Image crop(int x0, int y0, int cw, int ch) const {
    Image out(cw, ch);
    for (int y = 0; y < ch; ++y)
      for (int x = 0; x < cw; ++x) {
        int sx = x0 + x, sy = y0 + y;
        if (sx < 0 || sy < 0 || sx >= w_ || sy >= h_) continue;
        const float* p = pixel(sx, sy);
        float* q = out.pixel(x, y);
        for (int c = 0; c < 4; ++c) q[c] = p[c];
      }
    return out;
  }

  // Mean absolute difference over RGB, both images same size.
  static double mean_abs_diff(const Image& a, const Image& b) {
    double acc = 0.0;
    size_t n = 0;
    for (size_t i = 0; i < a.px_.size(); i += 4) {
      for (int c = 0; c < 3; ++c) acc += std::abs(double(a.px_[i + c]) - double(b.px_[i + c]));
      n += 3;
    }
    return n ? acc / n : 0.0;
  }

  void save_png(const std::string& path) const;
  static Image load_png(const std::string& path);

 private:
  int w_ = 0, h_ = 0;
  std::vector<float> px_;
};

inline uint8_t to_u8(float v) {
  float c = std::clamp(v, 0.0f, 1.0f);
  return static_cast<uint8_t>(std::lround(c * 255.0f));
}

inline void Image::save_png(const std::string& path) const {
  FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw std::runtime_error("cannot open for write: " + path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw std::runtime_error("png write failed: " + path);
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, w_, h_, 8, PNG_COLOR_TYPE_RGBA, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<uint8_t> row(static_cast<size_t>(w_) * 4);
  for (int y = 0; y < h_; ++y) {
    for (int x = 0; x < w_; ++x) {
      const float* p = pixel(x, y);
      for (int c = 0; c < 4; ++c) row[x * 4 + c] = to_u8(p[c]);
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

inline Image Image::load_png(const std::string& path) {
  FILE* fp = std::fopen(path.c_str(), "rb");
  if (!fp) throw std::runtime_error("cannot open: " + path);
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw std::runtime_error("png read failed: " + path);
  }
  png_init_io(png, fp);
  png_read_info(png, info);
  png_set_expand(png);
  png_set_strip_16(png);
  png_set_gray_to_rgb(png);
  if (!(png_get_color_type(png, info) & PNG_COLOR_MASK_ALPHA)) png_set_add_alpha(png, 0xFF, PNG_FILLER_AFTER);
  png_read_update_info(png, info);
  int w = static_cast<int>(png_get_image_width(png, info));
  int h = static_cast<int>(png_get_image_height(png, info));
  Image out(w, h);
  std::vector<uint8_t> row(static_cast<size_t>(w) * 4);
  for (int y = 0; y < h; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (int x = 0; x < w; ++x) {
      float* p = out.pixel(x, y);
      for (int c = 0; c < 4; ++c) p[c] = row[x * 4 + c] / 255.0f;
    }
  }
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);
  return out;
}

}  // namespace continuum
