#include "invrend/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include <png.h>

namespace invrend {

Image8 read_png(const std::string& path, std::size_t channels) {
    png_image img;
    std::memset(&img, 0, sizeof img);
    img.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&img, path.c_str()))
        throw DataError("cannot read PNG '" + path + "': " + img.message);
    if (channels == 1) img.format = PNG_FORMAT_GRAY;
    else if (channels == 3) img.format = PNG_FORMAT_RGB;
    else throw std::invalid_argument("read_png: channels must be 1 or 3");
    Image8 out;
    out.width = img.width;
    out.height = img.height;
    out.channels = channels;
    out.data.resize(PNG_IMAGE_SIZE(img));
    if (!png_image_finish_read(&img, nullptr, out.data.data(), 0, nullptr)) {
        png_image_free(&img);
        throw DataError("cannot decode PNG '" + path + "': " + img.message);
    }
    return out;
}

void write_png(const std::string& path, const Image8& image) {
    png_image img;
    std::memset(&img, 0, sizeof img);
    img.version = PNG_IMAGE_VERSION;
    img.width = static_cast<png_uint_32>(image.width);
    img.height = static_cast<png_uint_32>(image.height);
    img.format = image.channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
    if (image.data.size() != image.width * image.height * image.channels)
        throw std::invalid_argument("write_png: buffer size does not match the image shape");
    if (!png_image_write_to_file(&img, path.c_str(), 0, image.data.data(), 0, nullptr))
        throw DataError("cannot write PNG '" + path + "': " + img.message);
}

unsigned char encode_gamma(double linear) {
    const double v = std::pow(std::clamp(linear, 0.0, 1.0), 1.0 / 2.2);
    return static_cast<unsigned char>(std::lround(v * 255.0));
}

double decode_gamma(unsigned char v) { return std::pow(static_cast<double>(v) / 255.0, 2.2); }

unsigned char encode_linear(double v) { return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); }

Image8 to_image(const std::vector<double>& values, std::size_t width, std::size_t height, std::size_t channels,
                bool gamma) {
    Image8 img{width, height, channels, std::vector<unsigned char>(width * height * channels)};
    if (values.size() != img.data.size()) throw std::invalid_argument("to_image: value count mismatch");
    for (std::size_t i = 0; i < values.size(); ++i) img.data[i] = gamma ? encode_gamma(values[i]) : encode_linear(values[i]);
    return img;
}

Image8 normals_to_image(const std::vector<double>& normals, const std::vector<unsigned char>& foreground,
                        std::size_t width, std::size_t height) {
    Image8 img{width, height, 3, std::vector<unsigned char>(width * height * 3, 0)};
    for (std::size_t p = 0; p < width * height; ++p)
        if (foreground[p])
            for (int k = 0; k < 3; ++k) img.data[3 * p + k] = encode_linear(0.5 * (normals[3 * p + k] + 1.0));
    return img;
}

}  // namespace invrend
