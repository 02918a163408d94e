#include "stedge/io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <memory>
#include <stdexcept>

#include <jpeglib.h>

namespace stedge::io {

namespace fs = std::filesystem;

namespace {

std::string lower_extension(const fs::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext;
}

Image read_png(const fs::path& path) {
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.c_str())) {
        throw std::runtime_error("read_image: cannot decode PNG " + path.string() + ": " + image.message);
    }
    const bool gray = (image.format & PNG_FORMAT_FLAG_COLOR) == 0;
    image.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
    const int channels = gray ? 1 : 3;
    std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
        const std::string msg = image.message;
        png_image_free(&image);
        throw std::runtime_error("read_image: cannot decode PNG " + path.string() + ": " + msg);
    }
    std::vector<double> data(buffer.size());
    std::transform(buffer.begin(), buffer.end(), data.begin(), [](png_byte b) { return b / 255.0; });
    return Image(static_cast<int>(image.height), static_cast<int>(image.width), channels, std::move(data));
}

struct JpegErrorManager {
    jpeg_error_mgr base;
    std::jmp_buf jump;
    char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
    auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
    (*cinfo->err->format_message)(cinfo, err->message);
    std::longjmp(err->jump, 1);
}

Image read_jpeg(const fs::path& path) {
    std::unique_ptr<FILE, int (*)(FILE*)> file(std::fopen(path.c_str(), "rb"), &std::fclose);
    if (!file) {
        throw std::runtime_error("read_image: cannot open " + path.string());
    }
    jpeg_decompress_struct cinfo;
    JpegErrorManager jerr;
    cinfo.err = jpeg_std_error(&jerr.base);
    jerr.base.error_exit = jpeg_error_exit;
    // Only POD state lives between setjmp and longjmp.
    std::vector<unsigned char>* pixels = new std::vector<unsigned char>();
    if (setjmp(jerr.jump)) {
        jpeg_destroy_decompress(&cinfo);
        delete pixels;
        throw std::runtime_error("read_image: cannot decode JPEG " + path.string() + ": " + jerr.message);
    }
    jpeg_create_decompress(&cinfo);
    jpeg_stdio_src(&cinfo, file.get());
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = cinfo.num_components == 1 ? JCS_GRAYSCALE : JCS_RGB;
    jpeg_start_decompress(&cinfo);
    const int w = static_cast<int>(cinfo.output_width);
    const int h = static_cast<int>(cinfo.output_height);
    const int c = cinfo.output_components;
    pixels->resize(static_cast<std::size_t>(w) * h * c);
    while (cinfo.output_scanline < cinfo.output_height) {
        JSAMPROW row = pixels->data() + static_cast<std::size_t>(cinfo.output_scanline) * w * c;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    std::vector<double> data(pixels->size());
    std::transform(pixels->begin(), pixels->end(), data.begin(), [](unsigned char b) { return b / 255.0; });
    delete pixels;
    return Image(h, w, c, std::move(data));
}

void write_bytes(const fs::path& path, int height, int width, int channels, const std::vector<png_byte>& bytes) {
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(width);
    image.height = static_cast<png_uint_32>(height);
    image.format = channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&image, path.c_str(), 0, bytes.data(), 0, nullptr)) {
        throw std::runtime_error("write_png: cannot write " + path.string() + ": " + image.message);
    }
}

png_byte to_byte(double v) {
    return static_cast<png_byte>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

}  // namespace

Image read_image(const fs::path& path) {
    const std::string ext = lower_extension(path);
    if (ext == ".png") return read_png(path);
    if (ext == ".jpg" || ext == ".jpeg") return read_jpeg(path);
    throw std::runtime_error("read_image: unsupported file type " + path.string());
}

BinaryEdgeMap read_binary_map(const fs::path& path) {
    const Image img = read_image(path);
    BinaryEdgeMap out(img.height(), img.width(), 0);
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            out(y, x) = img.at(y, x, 0) > 127.0 / 255.0 ? 1 : 0;
        }
    }
    return out;
}

EdgeProbMap read_prob_map(const fs::path& path) {
    return read_image(path).channel(0);
}

void write_png(const fs::path& path, const BinaryEdgeMap& map) {
    std::vector<png_byte> bytes(map.size());
    std::transform(map.raw().begin(), map.raw().end(), bytes.begin(),
                   [](std::uint8_t v) { return static_cast<png_byte>(v ? 255 : 0); });
    write_bytes(path, map.height(), map.width(), 1, bytes);
}

void write_png(const fs::path& path, const EdgeProbMap& prob) {
    std::vector<png_byte> bytes(prob.size());
    std::transform(prob.raw().begin(), prob.raw().end(), bytes.begin(), to_byte);
    write_bytes(path, prob.height(), prob.width(), 1, bytes);
}

void write_png(const fs::path& path, const Image& img) {
    if (img.channels() != 1 && img.channels() != 3) {
        throw std::invalid_argument("write_png: expected 1 or 3 channels");
    }
    std::vector<png_byte> bytes(img.values().size());
    std::transform(img.values().begin(), img.values().end(), bytes.begin(), to_byte);
    write_bytes(path, img.height(), img.width(), img.channels(), bytes);
}

std::vector<fs::path> list_images(const fs::path& dir) {
    if (!fs::is_directory(dir)) {
        throw std::runtime_error("list_images: not a directory: " + dir.string());
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string ext = lower_extension(entry.path());
        if (ext == ".png" || ext == ".jpg" || ext == ".jpeg") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end(),
              [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });
    return files;
}

}  // namespace stedge::io
