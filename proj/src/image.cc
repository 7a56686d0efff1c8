#include "featgap/image.h"

#include <cctype>
#include <fstream>

#include "featgap/data_paths.h"
#include "featgap/error.h"

namespace featgap {

GrayImage::GrayImage(int w, int h, std::uint8_t fill)
    : width(w),
      height(h),
      samples(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {}

namespace {

class HeaderReader {
 public:
  explicit HeaderReader(std::string_view bytes) : bytes_(bytes) {}

  void SkipSpaceAndComments() {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  long Number(const char* what) {
    SkipSpaceAndComments();
    const std::size_t start = pos_;
    long value = 0;
    while (pos_ < bytes_.size() &&
           std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > 1'000'000) throw ParseError(std::string("pgm: ") + what + " too large");
      ++pos_;
    }
    if (pos_ == start) throw ParseError(std::string("pgm: missing ") + what);
    return value;
  }

  std::size_t pos() const { return pos_; }
  void Advance(std::size_t n) { pos_ += n; }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

GrayImage ParsePgm(std::string_view bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
    throw ParseError("pgm: bad magic (expected P5)");
  }
  HeaderReader r(bytes);
  r.Advance(2);
  const long width = r.Number("width");
  const long height = r.Number("height");
  const long maxval = r.Number("maxval");
  if (width < 1 || height < 1) throw ParseError("pgm: zero dimension");
  if (maxval != 255) {
    throw ParseError("pgm: unsupported maxval " + std::to_string(maxval) +
                     " (only 255)");
  }
  // Exactly one whitespace byte separates the header from the raster.
  if (r.pos() >= bytes.size() ||
      !std::isspace(static_cast<unsigned char>(bytes[r.pos()]))) {
    throw ParseError("pgm: malformed header");
  }
  r.Advance(1);
  const std::size_t n = static_cast<std::size_t>(width) * height;
  if (bytes.size() - r.pos() < n) {
    throw ParseError("pgm: raster truncated (" +
                     std::to_string(bytes.size() - r.pos()) + " of " +
                     std::to_string(n) + " bytes)");
  }
  GrayImage image(static_cast<int>(width), static_cast<int>(height));
  const auto* raster = bytes.data() + r.pos();
  std::copy(raster, raster + n, image.samples.begin());
  return image;
}

GrayImage ReadPgm(const std::filesystem::path& path) {
  return ParsePgm(ReadTextFile(path));
}

std::string EncodePgm(const GrayImage& image) {
  std::string out = "P5\n" + std::to_string(image.width) + " " +
                    std::to_string(image.height) + "\n255\n";
  out.append(reinterpret_cast<const char*>(image.samples.data()),
             image.samples.size());
  return out;
}

void WritePgm(const GrayImage& image, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path.string());
  const std::string bytes = EncodePgm(image);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace featgap
