#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace invrend {

class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// 8-bit image, row-major, `channels` interleaved values per pixel.
struct Image8 {
    std::size_t width = 0, height = 0, channels = 0;
    std::vector<unsigned char> data;
};

Image8 read_png(const std::string& path, std::size_t channels);
void write_png(const std::string& path, const Image8& image);

/// Linear [0,1] -> 8-bit with the gamma-2.2 curve; inverse of decode_gamma.
unsigned char encode_gamma(double linear);
double decode_gamma(unsigned char v);
unsigned char encode_linear(double v);  // clamp(v, 0, 1) · 255, rounded

Image8 to_image(const std::vector<double>& values, std::size_t width, std::size_t height, std::size_t channels,
                bool gamma);
/// Unit vectors mapped from [-1,1] to [0,255]; background pixels stay black.
Image8 normals_to_image(const std::vector<double>& normals, const std::vector<unsigned char>& foreground,
                        std::size_t width, std::size_t height);

}  // namespace invrend
