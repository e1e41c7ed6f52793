#include "texflow/png_io.hpp"

#include <cmath>
#include <cstdio>
#include <memory>

#include <png.h>

namespace texflow {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const { if (f) std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

} // namespace

ImageGrid load_png(const std::string& path, std::vector<std::string>* warnings) {
    FilePtr file(std::fopen(path.c_str(), "rb"));
    if (!file) throw PngError("cannot open " + path);

    unsigned char sig[8];
    if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
        throw PngError(path + " is not a PNG file");

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw PngError("libpng initialization failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw PngError("libpng initialization failed");
    }
    std::vector<png_bytep> row_ptrs;
    std::vector<unsigned char> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw PngError("failed to decode " + path);
    }

    png_init_io(png, file.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    png_uint_32 w = png_get_image_width(png, info);
    png_uint_32 h = png_get_image_height(png, info);
    int bit_depth = png_get_bit_depth(png, info);
    int color_type = png_get_color_type(png, info);

    bool had_alpha = (color_type & PNG_COLOR_MASK_ALPHA) != 0 ||
                     png_get_valid(png, info, PNG_INFO_tRNS);

    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8)
        png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    png_set_strip_alpha(png);

    png_read_update_info(png, info);
    bit_depth = png_get_bit_depth(png, info);
    int channels = png_get_channels(png, info);
    if (channels != 1 && channels != 3)
        throw PngError(path + ": unsupported channel layout");
    if (bit_depth != 8 && bit_depth != 16)
        throw PngError(path + ": unsupported bit depth");

    size_t stride = png_get_rowbytes(png, info);
    rows.resize(stride * h);
    row_ptrs.resize(h);
    for (png_uint_32 y = 0; y < h; ++y) row_ptrs[y] = &rows[y * stride];
    png_read_image(png, row_ptrs.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    if (had_alpha && warnings)
        warnings->push_back(path + ": alpha channel dropped");

    ImageGrid out(static_cast<int>(w), static_cast<int>(h), channels);
    for (png_uint_32 y = 0; y < h; ++y) {
        const unsigned char* row = &rows[y * stride];
        double* dst = out.pixel(0, static_cast<int>(y));
        size_t n = static_cast<size_t>(w) * channels;
        if (bit_depth == 8) {
            for (size_t i = 0; i < n; ++i) dst[i] = row[i] / 255.0;
        } else {
            // PNG stores 16-bit samples big-endian
            for (size_t i = 0; i < n; ++i) {
                unsigned v = (static_cast<unsigned>(row[i * 2]) << 8) | row[i * 2 + 1];
                dst[i] = v / 65535.0;
            }
        }
    }
    return out;
}

void save_png(const ImageGrid& image, const std::string& path) {
    if (image.channels() != 1 && image.channels() != 3)
        throw PngError("save_png supports 1- or 3-channel images");
    if (image.empty()) throw PngError("save_png: empty image");

    FilePtr file(std::fopen(path.c_str(), "wb"));
    if (!file) throw PngError("cannot write " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw PngError("libpng initialization failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw PngError("libpng initialization failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw PngError("failed to encode " + path);
    }

    int w = image.width(), h = image.height(), ch = image.channels();
    png_init_io(png, file.get());
    png_set_IHDR(png, info, w, h, 8,
                 ch == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    std::vector<unsigned char> row(static_cast<size_t>(w) * ch);
    for (int y = 0; y < h; ++y) {
        const double* src = image.pixel(0, y);
        for (size_t i = 0; i < row.size(); ++i) {
            double v = std::min(1.0, std::max(0.0, src[i])) * 255.0;
            row[i] = static_cast<unsigned char>(std::nearbyint(v));
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

} // namespace texflow
