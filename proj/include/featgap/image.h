#ifndef FEATGAP_IMAGE_H_
#define FEATGAP_IMAGE_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace featgap {

// Row-major 8-bit luminance image.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> samples;

  GrayImage() = default;
  GrayImage(int w, int h, std::uint8_t fill = 0);

  std::uint8_t at(int x, int y) const {
    return samples[static_cast<std::size_t>(y) * width + x];
  }
  std::uint8_t& at(int x, int y) {
    return samples[static_cast<std::size_t>(y) * width + x];
  }
  bool operator==(const GrayImage&) const = default;
};

// Binary portable graymap, magic "P5", maxval 255. Comments ('#') allowed in
// the header.
GrayImage ParsePgm(std::string_view bytes);
GrayImage ReadPgm(const std::filesystem::path& path);
std::string EncodePgm(const GrayImage& image);
void WritePgm(const GrayImage& image, const std::filesystem::path& path);

}  // namespace featgap

#endif  // FEATGAP_IMAGE_H_
