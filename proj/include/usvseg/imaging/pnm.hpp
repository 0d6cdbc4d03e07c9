#pragma once

#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>

#include "usvseg/error.hpp"
#include "usvseg/imaging/image.hpp"

namespace usvseg {

namespace detail {

class PnmHeaderReader {
public:
    explicit PnmHeaderReader(std::string_view bytes) : bytes_(bytes) {}

    int next_int()
    {
        skip_space_and_comments();
        if (pos_ >= bytes_.size() || !std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
            throw IoError("malformed PNM header");
        }
        long value = 0;
        while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
            value = value * 10 + (bytes_[pos_] - '0');
            if (value > 1'000'000) {
                throw IoError("malformed PNM header: value out of range");
            }
            ++pos_;
        }
        return static_cast<int>(value);
    }

    /// Consumes the single whitespace byte that separates header and raster.
    std::size_t raster_offset()
    {
        if (pos_ >= bytes_.size() || !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
            throw IoError("malformed PNM header");
        }
        return pos_ + 1;
    }

private:
    void skip_space_and_comments()
    {
        while (pos_ < bytes_.size()) {
            const char c = bytes_[pos_];
            if (c == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') {
                    ++pos_;
                }
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                ++pos_;
            } else {
                break;
            }
        }
    }

    std::string_view bytes_;
    std::size_t pos_ = 2;
};

} // namespace detail

/// Decodes binary P5 (gray) or P6 (RGB) with maxval up to 255.
inline ImageU8 decode_pnm(std::string_view bytes)
{
    if (bytes.size() < 2 || bytes[0] != 'P') {
        throw IoError("malformed image: missing PNM magic");
    }
    int channels = 0;
    if (bytes[1] == '5') {
        channels = 1;
    } else if (bytes[1] == '6') {
        channels = 3;
    } else {
        throw IoError(std::string("unsupported PNM variant P") + bytes[1]);
    }
    detail::PnmHeaderReader reader(bytes);
    const int width = reader.next_int();
    const int height = reader.next_int();
    const int maxval = reader.next_int();
    if (width <= 0 || height <= 0) {
        throw IoError("malformed PNM header: zero dimension");
    }
    if (maxval <= 0 || maxval > 255) {
        throw IoError("unsupported PNM maxval " + std::to_string(maxval));
    }
    const std::size_t offset = reader.raster_offset();
    ImageU8 img(width, height, channels);
    if (bytes.size() - offset < img.data.size()) {
        throw IoError("malformed PNM: truncated raster");
    }
    for (std::size_t i = 0; i < img.data.size(); ++i) {
        const auto v = static_cast<unsigned char>(bytes[offset + i]);
        img.data[i] = maxval == 255 ? v : static_cast<std::uint8_t>((v * 255 + maxval / 2) / maxval);
    }
    return img;
}

inline std::string encode_pnm(const ImageU8& img)
{
    if (img.channels != 1 && img.channels != 3) {
        throw InvalidArgument("PNM supports 1 or 3 channels, got " + std::to_string(img.channels));
    }
    std::string out = (img.channels == 1 ? "P5\n" : "P6\n") + std::to_string(img.width) + " " +
                      std::to_string(img.height) + "\n255\n";
    out.append(reinterpret_cast<const char*>(img.data.data()), img.data.size());
    return out;
}

inline std::string read_file_bytes(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file_bytes(const std::filesystem::path& path, std::string_view bytes)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw IoError("short write to " + path.string());
    }
}

/// Loads a raster frame. Binary PPM/PGM are the supported formats.
inline ImageU8 load_image(const std::filesystem::path& path)
{
    try {
        return decode_pnm(read_file_bytes(path));
    } catch (const IoError& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

inline void save_image(const std::filesystem::path& path, const ImageU8& img)
{
    write_file_bytes(path, encode_pnm(img));
}

} // namespace usvseg
