#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <zlib.h>

#include "nsa/errors.hpp"
#include "nsa/image.hpp"

// Minimal PNG codec for the formats the pipeline emits and consumes:
// 8-bit grayscale/RGB and 16-bit grayscale, no interlacing. Decoding uses
// zlib's inflate and handles all five scanline filters. Encoding uses its own
// fixed-Huffman deflate so that emitted files are byte-identical across
// platforms and zlib versions.

namespace nsa::pngio {

struct PngImage {
    int width = 0;
    int height = 0;
    int channels = 1;       // 1 or 3
    int bit_depth = 8;      // 8 or 16
    std::vector<std::uint16_t> samples;  // row-major, raw sample values
};

namespace detail {

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

inline std::uint32_t get_u32(const std::uint8_t* p) {
    return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
           (static_cast<std::uint32_t>(p[2]) << 8) | static_cast<std::uint32_t>(p[3]);
}

// ---- fixed-Huffman deflate ----

class BitWriter {
public:
    explicit BitWriter(std::vector<std::uint8_t>& out) : out_(out) {}

    void write_bits(std::uint32_t value, int count) {  // LSB first
        for (int i = 0; i < count; ++i) {
            acc_ |= ((value >> i) & 1u) << nbits_;
            if (++nbits_ == 8) flush_byte();
        }
    }

    void write_huff(std::uint32_t code, int count) {  // MSB of the code first
        for (int i = count - 1; i >= 0; --i) {
            acc_ |= ((code >> i) & 1u) << nbits_;
            if (++nbits_ == 8) flush_byte();
        }
    }

    void finish() {
        if (nbits_ > 0) flush_byte();
    }

private:
    void flush_byte() {
        out_.push_back(static_cast<std::uint8_t>(acc_));
        acc_ = 0;
        nbits_ = 0;
    }

    std::vector<std::uint8_t>& out_;
    std::uint32_t acc_ = 0;
    int nbits_ = 0;
};

inline void emit_literal(BitWriter& bw, int v) {
    if (v < 144)
        bw.write_huff(0x30 + v, 8);
    else
        bw.write_huff(0x190 + (v - 144), 9);
}

inline void emit_length(BitWriter& bw, int len) {  // 3..258
    static constexpr int base[] = {3,  4,  5,  6,  7,  8,  9,  10, 11,  13,  15,  17,  19, 23,
                                   27, 31, 35, 43, 51, 59, 67, 83, 99, 115, 131, 163, 195, 227, 258};
    static constexpr int extra[] = {0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2,
                                    2, 3, 3, 3, 3, 4, 4, 4, 4, 5, 5, 5, 5, 0};
    int idx = 28;
    while (len < base[idx]) --idx;
    const int symbol = 257 + idx;
    if (symbol < 280)
        bw.write_huff(symbol - 256, 7);
    else
        bw.write_huff(0xC0 + (symbol - 280), 8);
    bw.write_bits(static_cast<std::uint32_t>(len - base[idx]), extra[idx]);
}

inline void emit_distance(BitWriter& bw, int dist) {  // 1..32768
    static constexpr int base[] = {1,    2,    3,    4,    5,    7,     9,     13,   17,   25,
                                   33,   49,   65,   97,   129,  193,   257,   385,  513,  769,
                                   1025, 1537, 2049, 3073, 4097, 6145,  8193,  12289, 16385, 24577};
    int idx = 29;
    while (dist < base[idx]) --idx;
    const int ebits = idx < 2 ? 0 : idx / 2 - 1;
    bw.write_huff(static_cast<std::uint32_t>(idx), 5);
    bw.write_bits(static_cast<std::uint32_t>(dist - base[idx]), ebits);
}

// Greedy LZ77 over a 32 KiB window with a hash-chain matcher; one fixed
// Huffman block. Deterministic for a given input.
inline std::vector<std::uint8_t> deflate_fixed(const std::vector<std::uint8_t>& data) {
    std::vector<std::uint8_t> out;
    out.push_back(0x78);  // zlib header: 32 KiB window, fastest-flag
    out.push_back(0x01);

    BitWriter bw(out);
    bw.write_bits(1, 1);  // final block
    bw.write_bits(1, 2);  // fixed Huffman

    constexpr int kWindow = 32768;
    constexpr int kMaxMatch = 258;
    constexpr int kMinMatch = 3;
    constexpr int kHashBits = 15;
    constexpr int kMaxChain = 64;

    std::vector<int> head(1 << kHashBits, -1);
    std::vector<int> prev(data.size(), -1);
    auto hash3 = [&](std::size_t i) {
        const std::uint32_t v = data[i] | (data[i + 1] << 8) | (data[i + 2] << 16);
        return static_cast<int>((v * 2654435761u) >> (32 - kHashBits));
    };

    std::size_t i = 0;
    const std::size_t n = data.size();
    while (i < n) {
        int best_len = 0, best_dist = 0;
        if (i + kMinMatch <= n) {
            const int h = hash3(i);
            int cand = head[h];
            int chain = kMaxChain;
            while (cand >= 0 && chain-- > 0 &&
                   i - static_cast<std::size_t>(cand) <= kWindow) {
                const std::size_t limit = std::min<std::size_t>(n - i, kMaxMatch);
                std::size_t len = 0;
                while (len < limit &&
                       data[static_cast<std::size_t>(cand) + len] == data[i + len])
                    ++len;
                if (static_cast<int>(len) > best_len) {
                    best_len = static_cast<int>(len);
                    best_dist = static_cast<int>(i - static_cast<std::size_t>(cand));
                    if (best_len >= kMaxMatch) break;
                }
                cand = prev[static_cast<std::size_t>(cand)];
            }
        }
        if (best_len >= kMinMatch) {
            emit_length(bw, best_len);
            emit_distance(bw, best_dist);
            const std::size_t end = std::min(i + static_cast<std::size_t>(best_len), n);
            while (i < end) {
                if (i + kMinMatch <= n) {
                    const int h = hash3(i);
                    prev[i] = head[h];
                    head[h] = static_cast<int>(i);
                }
                ++i;
            }
        } else {
            if (i + kMinMatch <= n) {
                const int h = hash3(i);
                prev[i] = head[h];
                head[h] = static_cast<int>(i);
            }
            emit_literal(bw, data[i]);
            ++i;
        }
    }
    bw.write_huff(0, 7);  // end of block
    bw.finish();

    const auto adler =
        static_cast<std::uint32_t>(adler32(adler32(0L, nullptr, 0), data.data(),
                                           static_cast<uInt>(data.size())));
    put_u32(out, adler);
    return out;
}

inline std::vector<std::uint8_t> zlib_inflate(const std::uint8_t* data, std::size_t size,
                                              std::size_t expected) {
    std::vector<std::uint8_t> out(expected);
    z_stream zs;
    std::memset(&zs, 0, sizeof(zs));
    if (inflateInit(&zs) != Z_OK) throw DataError("png: inflateInit failed");
    zs.next_in = const_cast<Bytef*>(data);
    zs.avail_in = static_cast<uInt>(size);
    zs.next_out = out.data();
    zs.avail_out = static_cast<uInt>(out.size());
    const int rc = inflate(&zs, Z_FINISH);
    inflateEnd(&zs);
    if (rc != Z_STREAM_END || zs.total_out != expected)
        throw DataError("png: corrupt or truncated image data");
    return out;
}

inline void write_chunk(std::vector<std::uint8_t>& out, const char type[5],
                        const std::vector<std::uint8_t>& payload) {
    put_u32(out, static_cast<std::uint32_t>(payload.size()));
    const std::size_t crc_start = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), payload.begin(), payload.end());
    const auto crc = static_cast<std::uint32_t>(
        crc32(crc32(0L, nullptr, 0), out.data() + crc_start, static_cast<uInt>(4 + payload.size())));
    put_u32(out, crc);
}

inline int paeth(int a, int b, int c) {
    const int p = a + b - c;
    const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return a;
    if (pb <= pc) return b;
    return c;
}

inline void defilter(std::vector<std::uint8_t>& raw, int height, int stride, int bpp) {
    // raw rows are (filter byte + stride bytes) each; rewritten in place
    for (int y = 0; y < height; ++y) {
        std::uint8_t* row = raw.data() + static_cast<std::size_t>(y) * (stride + 1);
        const std::uint8_t* up =
            y > 0 ? raw.data() + static_cast<std::size_t>(y - 1) * (stride + 1) + 1 : nullptr;
        const int filter = row[0];
        std::uint8_t* cur = row + 1;
        switch (filter) {
            case 0: break;
            case 1:
                for (int x = bpp; x < stride; ++x) cur[x] = static_cast<std::uint8_t>(cur[x] + cur[x - bpp]);
                break;
            case 2:
                if (up)
                    for (int x = 0; x < stride; ++x) cur[x] = static_cast<std::uint8_t>(cur[x] + up[x]);
                break;
            case 3:
                for (int x = 0; x < stride; ++x) {
                    const int a = x >= bpp ? cur[x - bpp] : 0;
                    const int b = up ? up[x] : 0;
                    cur[x] = static_cast<std::uint8_t>(cur[x] + (a + b) / 2);
                }
                break;
            case 4:
                for (int x = 0; x < stride; ++x) {
                    const int a = x >= bpp ? cur[x - bpp] : 0;
                    const int b = up ? up[x] : 0;
                    const int c = (up && x >= bpp) ? up[x - bpp] : 0;
                    cur[x] = static_cast<std::uint8_t>(cur[x] + paeth(a, b, c));
                }
                break;
            default:
                throw DataError("png: unknown scanline filter " + std::to_string(filter));
        }
    }
}

inline std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                     std::istreambuf_iterator<char>());
}

inline void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("short write to " + path);
}

inline std::vector<std::uint8_t> encode_png(const std::vector<std::uint8_t>& scanline_data,
                                            int width, int height, int bit_depth, int color_type) {
    static constexpr std::uint8_t kSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
    std::vector<std::uint8_t> out(kSig, kSig + 8);
    std::vector<std::uint8_t> ihdr;
    put_u32(ihdr, static_cast<std::uint32_t>(width));
    put_u32(ihdr, static_cast<std::uint32_t>(height));
    ihdr.push_back(static_cast<std::uint8_t>(bit_depth));
    ihdr.push_back(static_cast<std::uint8_t>(color_type));
    ihdr.push_back(0);  // deflate
    ihdr.push_back(0);  // adaptive filtering
    ihdr.push_back(0);  // no interlace
    write_chunk(out, "IHDR", ihdr);
    write_chunk(out, "IDAT", deflate_fixed(scanline_data));
    write_chunk(out, "IEND", {});
    return out;
}

}  // namespace detail

inline PngImage read_png(const std::string& path) {
    const auto bytes = detail::read_file(path);
    static constexpr std::uint8_t kSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
    if (bytes.size() < 8 || std::memcmp(bytes.data(), kSig, 8) != 0)
        throw DataError(path + ": not a PNG file");

    PngImage img;
    int color_type = -1;
    std::vector<std::uint8_t> idat;
    std::size_t pos = 8;
    while (pos + 8 <= bytes.size()) {
        const std::uint32_t len = detail::get_u32(bytes.data() + pos);
        if (pos + 12 + len > bytes.size()) throw DataError(path + ": truncated chunk");
        const char* type = reinterpret_cast<const char*>(bytes.data() + pos + 4);
        const std::uint8_t* payload = bytes.data() + pos + 8;
        if (std::memcmp(type, "IHDR", 4) == 0) {
            if (len != 13) throw DataError(path + ": bad IHDR");
            img.width = static_cast<int>(detail::get_u32(payload));
            img.height = static_cast<int>(detail::get_u32(payload + 4));
            img.bit_depth = payload[8];
            color_type = payload[9];
            if (payload[12] != 0) throw DataError(path + ": interlaced PNGs are not supported");
            if (color_type == 0)
                img.channels = 1;
            else if (color_type == 2)
                img.channels = 3;
            else
                throw DataError(path + ": only grayscale and RGB PNGs are supported");
            if (img.bit_depth != 8 && img.bit_depth != 16)
                throw DataError(path + ": only 8- and 16-bit PNGs are supported");
            if (img.width < 1 || img.height < 1) throw DataError(path + ": bad dimensions");
        } else if (std::memcmp(type, "IDAT", 4) == 0) {
            idat.insert(idat.end(), payload, payload + len);
        } else if (std::memcmp(type, "IEND", 4) == 0) {
            break;
        }
        pos += 12 + len;
    }
    if (img.width == 0 || idat.empty()) throw DataError(path + ": missing IHDR or IDAT");

    const int bytes_per_sample = img.bit_depth / 8;
    const int stride = img.width * img.channels * bytes_per_sample;
    const std::size_t expected = static_cast<std::size_t>(img.height) * (stride + 1);
    auto raw = detail::zlib_inflate(idat.data(), idat.size(), expected);
    detail::defilter(raw, img.height, stride, img.channels * bytes_per_sample);

    img.samples.resize(static_cast<std::size_t>(img.width) * img.height * img.channels);
    std::size_t s = 0;
    for (int y = 0; y < img.height; ++y) {
        const std::uint8_t* row = raw.data() + static_cast<std::size_t>(y) * (stride + 1) + 1;
        if (img.bit_depth == 8) {
            for (int x = 0; x < stride; ++x) img.samples[s++] = row[x];
        } else {
            for (int x = 0; x < stride; x += 2)
                img.samples[s++] = static_cast<std::uint16_t>((row[x] << 8) | row[x + 1]);
        }
    }
    return img;
}

// Any supported PNG as a [0,1] image plane.
inline ImagePlane to_image_plane(const PngImage& png) {
    ImagePlane img(png.width, png.height, png.channels);
    const float scale = png.bit_depth == 8 ? 1.0f / 255.0f : 1.0f / 65535.0f;
    for (std::size_t i = 0; i < png.samples.size(); ++i)
        img.data()[i] = clamp01(png.samples[i] * scale);
    return img;
}

inline ImagePlane read_image(const std::string& path) { return to_image_plane(read_png(path)); }

inline void write_png8(const ImagePlane& image, const std::string& path) {
    const int stride = image.width() * image.channels();
    std::vector<std::uint8_t> scan(static_cast<std::size_t>(image.height()) * (stride + 1));
    std::size_t s = 0;
    std::size_t i = 0;
    for (int y = 0; y < image.height(); ++y) {
        scan[s++] = 0;  // filter: none
        for (int x = 0; x < stride; ++x)
            scan[s++] = static_cast<std::uint8_t>(
                std::lround(clamp01(image.data()[i++]) * 255.0f));
    }
    detail::write_file(path, detail::encode_png(scan, image.width(), image.height(), 8,
                                                image.channels() == 1 ? 0 : 2));
}

inline void write_png16(const std::vector<std::uint16_t>& values, int width, int height,
                        const std::string& path) {
    if (values.size() != static_cast<std::size_t>(width) * height)
        throw std::invalid_argument("write_png16: size mismatch");
    std::vector<std::uint8_t> scan(static_cast<std::size_t>(height) * (width * 2 + 1));
    std::size_t s = 0;
    std::size_t i = 0;
    for (int y = 0; y < height; ++y) {
        scan[s++] = 0;
        for (int x = 0; x < width; ++x) {
            scan[s++] = static_cast<std::uint8_t>(values[i] >> 8);
            scan[s++] = static_cast<std::uint8_t>(values[i] & 0xFF);
            ++i;
        }
    }
    detail::write_file(path, detail::encode_png(scan, width, height, 16, 0));
}

}  // namespace nsa::pngio
