#include "intenreg/image_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

namespace intenreg {

namespace {

std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("read failed: " + path);
    return bytes;
}

void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open file for writing: " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              std::streamsize(bytes.size()));
    if (!out) throw IoError("write failed: " + path);
}

bool has_suffix(const std::string& s, const std::string& suf) {
    return s.size() >= suf.size() &&
           std::equal(suf.rbegin(), suf.rend(), s.rbegin(),
                      [](char a, char b) { return std::tolower(a) == std::tolower(b); });
}

// ---------------------------------------------------------------- PGM (P5)

struct PgmHeader {
    int width, height, maxval;
    std::size_t data_offset;
};

PgmHeader parse_pgm_header(const std::vector<std::uint8_t>& bytes, const std::string& path) {
    if (bytes.empty()) throw ParseError("empty file: " + path);
    std::size_t pos = 0;
    auto peek = [&]() -> int { return pos < bytes.size() ? bytes[pos] : -1; };
    auto skip_ws_comments = [&]() {
        for (;;) {
            while (pos < bytes.size() && std::isspace(peek())) ++pos;
            if (peek() == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else {
                break;
            }
        }
    };
    auto read_int = [&](const char* what) -> int {
        skip_ws_comments();
        if (pos >= bytes.size() || !std::isdigit(peek()))
            throw ParseError(std::string("PGM: missing ") + what + ": " + path);
        long v = 0;
        while (pos < bytes.size() && std::isdigit(peek())) {
            v = v * 10 + (bytes[pos] - '0');
            if (v > 1 << 30) throw ParseError(std::string("PGM: absurd ") + what + ": " + path);
            ++pos;
        }
        return int(v);
    };

    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
        throw ParseError("unsupported format: expected binary PGM magic P5: " + path);
    }
    pos = 2;
    PgmHeader h;
    h.width = read_int("width");
    h.height = read_int("height");
    h.maxval = read_int("maxval");
    if (h.width <= 0 || h.height <= 0)
        throw ParseError("PGM: non-positive dimensions: " + path);
    if (h.maxval <= 0 || h.maxval > 65535)
        throw ParseError("PGM: maxval out of range [1,65535]: " + path);
    // Exactly one whitespace byte separates the header from the raster.
    if (pos >= bytes.size() || !std::isspace(bytes[pos]))
        throw ParseError("PGM: missing separator after maxval: " + path);
    ++pos;
    h.data_offset = pos;
    return h;
}

std::vector<std::uint32_t> read_pgm_raw(const std::string& path, PgmHeader& hdr) {
    const auto bytes = read_file(path);
    hdr = parse_pgm_header(bytes, path);
    const std::size_t n = std::size_t(hdr.width) * hdr.height;
    const int bpp = hdr.maxval < 256 ? 1 : 2;
    if (bytes.size() < hdr.data_offset + n * bpp)
        throw ParseError("PGM: truncated raster data: " + path);
    std::vector<std::uint32_t> px(n);
    const std::uint8_t* p = bytes.data() + hdr.data_offset;
    if (bpp == 1) {
        for (std::size_t i = 0; i < n; ++i) px[i] = p[i];
    } else {
        // Big-endian, most significant byte first.
        for (std::size_t i = 0; i < n; ++i)
            px[i] = (std::uint32_t(p[2 * i]) << 8) | p[2 * i + 1];
    }
    return px;
}

void write_pgm_raw(const std::string& path, int width, int height, int maxval,
                   const std::vector<std::uint32_t>& px) {
    std::vector<std::uint8_t> bytes;
    const std::string header = "P5\n" + std::to_string(width) + " " +
                               std::to_string(height) + "\n" +
                               std::to_string(maxval) + "\n";
    bytes.insert(bytes.end(), header.begin(), header.end());
    if (maxval < 256) {
        for (std::uint32_t v : px) bytes.push_back(std::uint8_t(v));
    } else {
        for (std::uint32_t v : px) {
            bytes.push_back(std::uint8_t(v >> 8));
            bytes.push_back(std::uint8_t(v & 0xff));
        }
    }
    write_file(path, bytes);
}

// ----------------------------------------------------------------- PNG

constexpr std::uint8_t kPngSignature[8] = {137, 80, 78, 71, 13, 10, 26, 10};

std::uint32_t be32(const std::uint8_t* p) {
    return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
           (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]);
}

void push_be32(std::vector<std::uint8_t>& v, std::uint32_t x) {
    v.push_back(std::uint8_t(x >> 24));
    v.push_back(std::uint8_t(x >> 16));
    v.push_back(std::uint8_t(x >> 8));
    v.push_back(std::uint8_t(x));
}

void push_chunk(std::vector<std::uint8_t>& out, const char type[4],
                const std::vector<std::uint8_t>& data) {
    push_be32(out, std::uint32_t(data.size()));
    const std::size_t crc_start = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), data.begin(), data.end());
    const uLong crc = crc32(crc32(0L, Z_NULL, 0), out.data() + crc_start,
                            uInt(out.size() - crc_start));
    push_be32(out, std::uint32_t(crc));
}

std::vector<std::uint8_t> zlib_deflate(const std::vector<std::uint8_t>& raw) {
    uLongf bound = compressBound(uLong(raw.size()));
    std::vector<std::uint8_t> out(bound);
    const int rc = compress2(out.data(), &bound, raw.data(), uLong(raw.size()), 6);
    if (rc != Z_OK) throw IoError("zlib compression failed");
    out.resize(bound);
    return out;
}

std::vector<std::uint8_t> zlib_inflate(const std::vector<std::uint8_t>& comp,
                                       std::size_t expected, const std::string& path) {
    std::vector<std::uint8_t> out(expected);
    uLongf dest_len = uLongf(expected);
    const int rc = uncompress(out.data(), &dest_len, comp.data(), uLong(comp.size()));
    if (rc != Z_OK || dest_len != expected)
        throw ParseError("PNG: corrupt or truncated compressed stream: " + path);
    return out;
}

int paeth(int a, int b, int c) {
    const int p = a + b - c;
    const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return a;
    if (pb <= pc) return b;
    return c;
}

// Undoes PNG scanline filtering in place over a run of `height` scanlines of
// `row_bytes` filtered payload bytes each (filter byte included in the input).
std::vector<std::uint8_t> unfilter(const std::uint8_t* src, int height,
                                   std::size_t row_bytes, int bpp,
                                   const std::string& path) {
    std::vector<std::uint8_t> out(std::size_t(height) * row_bytes, 0);
    std::vector<std::uint8_t> prev(row_bytes, 0);
    for (int y = 0; y < height; ++y) {
        const std::uint8_t filter = src[std::size_t(y) * (row_bytes + 1)];
        const std::uint8_t* in = src + std::size_t(y) * (row_bytes + 1) + 1;
        std::uint8_t* cur = out.data() + std::size_t(y) * row_bytes;
        switch (filter) {
            case 0:
                std::memcpy(cur, in, row_bytes);
                break;
            case 1:
                for (std::size_t i = 0; i < row_bytes; ++i) {
                    const int left = i >= std::size_t(bpp) ? cur[i - bpp] : 0;
                    cur[i] = std::uint8_t(in[i] + left);
                }
                break;
            case 2:
                for (std::size_t i = 0; i < row_bytes; ++i)
                    cur[i] = std::uint8_t(in[i] + prev[i]);
                break;
            case 3:
                for (std::size_t i = 0; i < row_bytes; ++i) {
                    const int left = i >= std::size_t(bpp) ? cur[i - bpp] : 0;
                    cur[i] = std::uint8_t(in[i] + ((left + prev[i]) >> 1));
                }
                break;
            case 4:
                for (std::size_t i = 0; i < row_bytes; ++i) {
                    const int left = i >= std::size_t(bpp) ? cur[i - bpp] : 0;
                    const int ul = i >= std::size_t(bpp) ? prev[i - bpp] : 0;
                    cur[i] = std::uint8_t(in[i] + paeth(left, prev[i], ul));
                }
                break;
            default:
                throw ParseError("PNG: unknown scanline filter " +
                                 std::to_string(filter) + ": " + path);
        }
        std::memcpy(prev.data(), cur, row_bytes);
    }
    return out;
}

struct PngImage {
    int width, height, bit_depth;
    std::vector<std::uint32_t> px;  // grayscale samples
};

// Adam7 pass geometry.
constexpr int kPassX0[7] = {0, 4, 0, 2, 0, 1, 0};
constexpr int kPassY0[7] = {0, 0, 4, 0, 2, 0, 1};
constexpr int kPassDx[7] = {8, 8, 4, 4, 2, 2, 1};
constexpr int kPassDy[7] = {8, 8, 8, 4, 4, 2, 2};

PngImage decode_png_gray(const std::vector<std::uint8_t>& bytes, const std::string& path) {
    if (bytes.size() < 8 || std::memcmp(bytes.data(), kPngSignature, 8) != 0)
        throw ParseError("unsupported format: not a PNG or PGM file: " + path);

    std::size_t pos = 8;
    bool have_ihdr = false;
    PngImage img{};
    int color_type = -1, interlace = 0;
    std::vector<std::uint8_t> idat;

    while (pos + 8 <= bytes.size()) {
        const std::uint32_t len = be32(&bytes[pos]);
        if (pos + 12 + len > bytes.size())
            throw ParseError("PNG: truncated chunk: " + path);
        const char* type = reinterpret_cast<const char*>(&bytes[pos + 4]);
        const std::uint8_t* data = &bytes[pos + 8];
        const std::uint32_t stored_crc = be32(&bytes[pos + 8 + len]);
        const uLong crc = crc32(crc32(0L, Z_NULL, 0), &bytes[pos + 4], uInt(len + 4));
        if (std::uint32_t(crc) != stored_crc)
            throw ParseError("PNG: chunk CRC mismatch: " + path);

        if (std::memcmp(type, "IHDR", 4) == 0) {
            if (len != 13) throw ParseError("PNG: bad IHDR length: " + path);
            img.width = int(be32(data));
            img.height = int(be32(data + 4));
            img.bit_depth = data[8];
            color_type = data[9];
            interlace = data[12];
            if (img.width <= 0 || img.height <= 0)
                throw ParseError("PNG: non-positive dimensions: " + path);
            if (color_type != 0)
                throw ParseError("non-grayscale PNG (color type " +
                                 std::to_string(color_type) + "): " + path);
            if (img.bit_depth != 8 && img.bit_depth != 16)
                throw ParseError("PNG: unsupported grayscale bit depth " +
                                 std::to_string(img.bit_depth) + ": " + path);
            if (data[10] != 0 || data[11] != 0)
                throw ParseError("PNG: unknown compression/filter method: " + path);
            if (interlace != 0 && interlace != 1)
                throw ParseError("PNG: unknown interlace method: " + path);
            have_ihdr = true;
        } else if (std::memcmp(type, "IDAT", 4) == 0) {
            idat.insert(idat.end(), data, data + len);
        } else if (std::memcmp(type, "IEND", 4) == 0) {
            break;
        }
        pos += 12 + len;
    }
    if (!have_ihdr) throw ParseError("PNG: missing IHDR: " + path);
    if (idat.empty()) throw ParseError("PNG: missing IDAT: " + path);

    const int bpp = img.bit_depth / 8;
    img.px.assign(std::size_t(img.width) * img.height, 0);

    auto sample_at = [&](const std::uint8_t* p) -> std::uint32_t {
        return bpp == 1 ? *p : (std::uint32_t(p[0]) << 8) | p[1];
    };

    if (interlace == 0) {
        const std::size_t row_bytes = std::size_t(img.width) * bpp;
        const std::size_t expected = std::size_t(img.height) * (row_bytes + 1);
        const auto raw = zlib_inflate(idat, expected, path);
        const auto flat = unfilter(raw.data(), img.height, row_bytes, bpp, path);
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x)
                img.px[std::size_t(y) * img.width + x] =
                    sample_at(&flat[std::size_t(y) * row_bytes + std::size_t(x) * bpp]);
    } else {
        // Adam7: seven independently filtered sub-images.
        std::size_t expected = 0;
        for (int p = 0; p < 7; ++p) {
            const int pw = (img.width - kPassX0[p] + kPassDx[p] - 1) / kPassDx[p];
            const int ph = (img.height - kPassY0[p] + kPassDy[p] - 1) / kPassDy[p];
            if (pw > 0 && ph > 0)
                expected += std::size_t(ph) * (std::size_t(pw) * bpp + 1);
        }
        const auto raw = zlib_inflate(idat, expected, path);
        std::size_t off = 0;
        for (int p = 0; p < 7; ++p) {
            const int pw = (img.width - kPassX0[p] + kPassDx[p] - 1) / kPassDx[p];
            const int ph = (img.height - kPassY0[p] + kPassDy[p] - 1) / kPassDy[p];
            if (pw <= 0 || ph <= 0) continue;
            const std::size_t row_bytes = std::size_t(pw) * bpp;
            const auto flat = unfilter(raw.data() + off, ph, row_bytes, bpp, path);
            off += std::size_t(ph) * (row_bytes + 1);
            for (int y = 0; y < ph; ++y)
                for (int x = 0; x < pw; ++x) {
                    const int ty = kPassY0[p] + y * kPassDy[p];
                    const int tx = kPassX0[p] + x * kPassDx[p];
                    img.px[std::size_t(ty) * img.width + tx] =
                        sample_at(&flat[std::size_t(y) * row_bytes + std::size_t(x) * bpp]);
                }
        }
    }
    return img;
}

void encode_png(const std::string& path, int width, int height, int bit_depth,
                int color_type, const std::vector<std::uint8_t>& samples) {
    const int channels = color_type == 2 ? 3 : 1;
    const std::size_t row_bytes = std::size_t(width) * channels * (bit_depth / 8);
    std::vector<std::uint8_t> raw;
    raw.reserve(std::size_t(height) * (row_bytes + 1));
    for (int y = 0; y < height; ++y) {
        raw.push_back(0);  // filter: None
        raw.insert(raw.end(), samples.begin() + std::size_t(y) * row_bytes,
                   samples.begin() + std::size_t(y + 1) * row_bytes);
    }

    std::vector<std::uint8_t> out(kPngSignature, kPngSignature + 8);
    std::vector<std::uint8_t> ihdr;
    push_be32(ihdr, std::uint32_t(width));
    push_be32(ihdr, std::uint32_t(height));
    ihdr.push_back(std::uint8_t(bit_depth));
    ihdr.push_back(std::uint8_t(color_type));
    ihdr.push_back(0);  // compression
    ihdr.push_back(0);  // filter
    ihdr.push_back(0);  // no interlace
    push_chunk(out, "IHDR", ihdr);
    push_chunk(out, "IDAT", zlib_deflate(raw));
    push_chunk(out, "IEND", {});
    write_file(path, out);
}

}  // namespace

Image2D read_image(const std::string& path) {
    const auto bytes = read_file(path);
    if (bytes.empty()) throw ParseError("empty file: " + path);

    if (bytes.size() >= 8 && std::memcmp(bytes.data(), kPngSignature, 8) == 0) {
        const PngImage png = decode_png_gray(bytes, path);
        const double maxval = png.bit_depth == 8 ? 255.0 : 65535.0;
        Image2D img(png.height, png.width);
        for (std::size_t i = 0; i < png.px.size(); ++i) img.data[i] = png.px[i] / maxval;
        return img;
    }

    PgmHeader hdr;
    const auto px = read_pgm_raw(path, hdr);
    Image2D img(hdr.height, hdr.width);
    for (std::size_t i = 0; i < px.size(); ++i) img.data[i] = px[i] / double(hdr.maxval);
    return img;
}

void write_image(const Image2D& image, const std::string& path) {
    image.validate("write_image");
    const std::size_t n = image.size();
    std::vector<std::uint32_t> px(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double v = std::clamp(image.data[i], 0.0, 1.0);
        px[i] = std::uint32_t(std::lround(v * 65535.0));
    }
    if (has_suffix(path, ".png")) {
        std::vector<std::uint8_t> samples(n * 2);
        for (std::size_t i = 0; i < n; ++i) {
            samples[2 * i] = std::uint8_t(px[i] >> 8);
            samples[2 * i + 1] = std::uint8_t(px[i] & 0xff);
        }
        encode_png(path, image.width, image.height, 16, 0, samples);
    } else {
        write_pgm_raw(path, image.width, image.height, 65535, px);
    }
}

SegmentationMap read_labels(const std::string& path) {
    PgmHeader hdr;
    const auto px = read_pgm_raw(path, hdr);
    SegmentationMap seg(hdr.height, hdr.width);
    for (std::size_t i = 0; i < px.size(); ++i) seg.labels[i] = std::int32_t(px[i]);
    return seg;
}

void write_labels(const SegmentationMap& seg, const std::string& path) {
    seg.validate("write_labels");
    std::int32_t maxlab = 1;
    for (std::int32_t v : seg.labels) maxlab = std::max(maxlab, v);
    if (maxlab > 65535)
        throw ValidationError("write_labels: label id " + std::to_string(maxlab) +
                              " exceeds PGM maxval 65535");
    std::vector<std::uint32_t> px(seg.labels.begin(), seg.labels.end());
    write_pgm_raw(path, seg.width, seg.height, maxlab, px);
}

void write_png_rgb8(const std::string& path, int width, int height,
                    const std::vector<std::uint8_t>& rgb) {
    if (width <= 0 || height <= 0)
        throw ValidationError("write_png_rgb8: non-positive dimensions");
    if (rgb.size() != std::size_t(width) * height * 3)
        throw DimensionError("write_png_rgb8: buffer size does not match dimensions");
    encode_png(path, width, height, 8, 2, rgb);
}

namespace {

constexpr std::uint8_t kFieldMagic[8] = {'I', 'N', 'R', 'G', 'F', 'L', 'D', '1'};

void append_u64_le(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(std::uint8_t((v >> (8 * i)) & 0xff));
}

std::uint64_t take_u64_le(const std::vector<std::uint8_t>& buf, std::size_t& off,
                          const std::string& path) {
    if (off + 8 > buf.size()) throw ParseError("field file truncated: " + path);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(buf[off + std::size_t(i)]) << (8 * i);
    off += 8;
    return v;
}

}  // namespace

void write_field(const DisplacementField& field, const std::string& path) {
    field.validate("write_field");
    std::vector<std::uint8_t> buf(kFieldMagic, kFieldMagic + sizeof kFieldMagic);
    append_u64_le(buf, std::uint64_t(field.height));
    append_u64_le(buf, std::uint64_t(field.width));
    for (double v : field.u_row) append_u64_le(buf, std::bit_cast<std::uint64_t>(v));
    for (double v : field.u_col) append_u64_le(buf, std::bit_cast<std::uint64_t>(v));
    write_file(path, buf);
}

DisplacementField read_field(const std::string& path) {
    const std::vector<std::uint8_t> buf = read_file(path);
    if (buf.size() < sizeof kFieldMagic ||
        std::memcmp(buf.data(), kFieldMagic, sizeof kFieldMagic) != 0)
        throw ParseError("not a displacement-field file: " + path);
    std::size_t off = sizeof kFieldMagic;
    const auto h = take_u64_le(buf, off, path);
    const auto w = take_u64_le(buf, off, path);
    if (h == 0 || w == 0 || h > 1u << 20 || w > 1u << 20)
        throw ParseError("implausible field shape in " + path);
    DisplacementField f{int(h), int(w)};
    for (double& v : f.u_row) v = std::bit_cast<double>(take_u64_le(buf, off, path));
    for (double& v : f.u_col) v = std::bit_cast<double>(take_u64_le(buf, off, path));
    if (off != buf.size()) throw ParseError("trailing bytes in field file: " + path);
    return f;
}

}  // namespace intenreg
