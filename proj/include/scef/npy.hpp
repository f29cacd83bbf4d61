#pragma once

#include <zlib.h>

#include <cstddef>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "scef/errors.hpp"

namespace scef {

/// A dense little-endian array read from or written to NPY v1.0.
struct NpyArray {
    std::vector<std::size_t> shape;
    std::vector<double> data; // converted to double regardless of on-disk width

    std::size_t element_count() const {
        std::size_t n = 1;
        for (std::size_t d : shape) n *= d;
        return n;
    }
};

namespace detail {

inline void append_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
}

inline void append_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline std::uint16_t read_u16(const std::string& s, std::size_t off) {
    return static_cast<std::uint16_t>(static_cast<unsigned char>(s[off])) |
           (static_cast<std::uint16_t>(static_cast<unsigned char>(s[off + 1])) << 8);
}

inline std::uint32_t read_u32(const std::string& s, std::size_t off) {
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i)
        v = (v << 8) | static_cast<unsigned char>(s[off + static_cast<std::size_t>(i)]);
    return v;
}

} // namespace detail

/// Serializes a '<f8' C-order NPY v1.0 byte stream.
inline std::string npy_encode(const std::vector<std::size_t>& shape,
                              const std::vector<double>& data) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    if (n != data.size()) throw dimension_error("npy_encode: shape does not match data length");

    std::string dict = "{'descr': '<f8', 'fortran_order': False, 'shape': (";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        dict += std::to_string(shape[i]);
        if (shape.size() == 1 || i + 1 < shape.size()) dict += ",";
        if (i + 1 < shape.size()) dict += " ";
    }
    dict += "), }";
    // Pad with spaces so that 10 + len(header) is a multiple of 64; the
    // header ends with a newline.
    std::size_t total = 10 + dict.size() + 1;
    const std::size_t pad = (64 - total % 64) % 64;
    dict.append(pad, ' ');
    dict.push_back('\n');

    std::string out;
    out.reserve(10 + dict.size() + 8 * data.size());
    out += "\x93NUMPY";
    out.push_back('\x01');
    out.push_back('\x00');
    detail::append_u16(out, static_cast<std::uint16_t>(dict.size()));
    out += dict;
    const char* raw = reinterpret_cast<const char*>(data.data());
    out.append(raw, raw + 8 * data.size()); // little-endian host assumed
    return out;
}

/// Parses NPY v1.x with '<f8' or '<f4' C-order payloads.
inline NpyArray npy_decode(const std::string& bytes, const std::string& name = "npy") {
    if (bytes.size() < 10 || std::memcmp(bytes.data(), "\x93NUMPY", 6) != 0)
        throw format_error(name + ": not an NPY stream");
    const unsigned major = static_cast<unsigned char>(bytes[6]);
    if (major != 1) throw format_error(name + ": unsupported NPY version");
    const std::size_t header_len = detail::read_u16(bytes, 8);
    if (bytes.size() < 10 + header_len) throw format_error(name + ": truncated NPY header");
    const std::string header = bytes.substr(10, header_len);

    const auto find_value = [&](const std::string& key) -> std::string {
        const std::size_t kpos = header.find("'" + key + "'");
        if (kpos == std::string::npos) throw format_error(name + ": NPY header lacks " + key);
        std::size_t pos = header.find(':', kpos);
        if (pos == std::string::npos) throw format_error(name + ": malformed NPY header");
        ++pos;
        while (pos < header.size() && header[pos] == ' ') ++pos;
        return header.substr(pos);
    };

    const std::string descr = find_value("descr");
    bool is_f8 = descr.rfind("'<f8'", 0) == 0;
    bool is_f4 = descr.rfind("'<f4'", 0) == 0;
    if (!is_f8 && !is_f4)
        throw format_error(name + ": unsupported dtype (need '<f8' or '<f4')");
    if (find_value("fortran_order").rfind("False", 0) != 0)
        throw format_error(name + ": Fortran-order arrays are not supported");

    NpyArray arr;
    const std::string shape_str = find_value("shape");
    std::size_t pos = shape_str.find('(');
    if (pos == std::string::npos) throw format_error(name + ": malformed shape tuple");
    ++pos;
    while (pos < shape_str.size() && shape_str[pos] != ')') {
        while (pos < shape_str.size() && (shape_str[pos] == ' ' || shape_str[pos] == ',')) ++pos;
        if (pos >= shape_str.size() || shape_str[pos] == ')') break;
        std::size_t end = pos;
        while (end < shape_str.size() && shape_str[end] >= '0' && shape_str[end] <= '9') ++end;
        if (end == pos) throw format_error(name + ": malformed shape tuple");
        arr.shape.push_back(static_cast<std::size_t>(std::stoull(shape_str.substr(pos, end - pos))));
        pos = end;
    }

    const std::size_t n = arr.element_count();
    const std::size_t width = is_f8 ? 8 : 4;
    const std::size_t data_off = 10 + header_len;
    if (bytes.size() - data_off < n * width)
        throw format_error(name + ": NPY payload shorter than its shape");
    arr.data.resize(n);
    if (is_f8) {
        std::memcpy(arr.data.data(), bytes.data() + data_off, n * 8);
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            float f;
            std::memcpy(&f, bytes.data() + data_off + 4 * i, 4);
            arr.data[i] = static_cast<double>(f);
        }
    }
    return arr;
}

struct ZipEntry {
    std::string name;
    std::string bytes;
};

/// Writes a zip archive with stored (uncompressed) entries; deterministic:
/// fixed timestamps and the given entry order.
inline void zip_write(const std::string& path, const std::vector<ZipEntry>& entries) {
    std::string out;
    struct CdRecord {
        std::string name;
        std::uint32_t crc, size, offset;
    };
    std::vector<CdRecord> cd;
    for (const ZipEntry& e : entries) {
        const std::uint32_t crc = static_cast<std::uint32_t>(
            ::crc32(0L, reinterpret_cast<const Bytef*>(e.bytes.data()),
                    static_cast<uInt>(e.bytes.size())));
        const std::uint32_t offset = static_cast<std::uint32_t>(out.size());
        detail::append_u32(out, 0x04034b50);
        detail::append_u16(out, 20);   // version needed
        detail::append_u16(out, 0);    // flags
        detail::append_u16(out, 0);    // method: stored
        detail::append_u16(out, 0);    // mod time
        detail::append_u16(out, 0x21); // mod date (1980-01-01)
        detail::append_u32(out, crc);
        detail::append_u32(out, static_cast<std::uint32_t>(e.bytes.size()));
        detail::append_u32(out, static_cast<std::uint32_t>(e.bytes.size()));
        detail::append_u16(out, static_cast<std::uint16_t>(e.name.size()));
        detail::append_u16(out, 0); // extra length
        out += e.name;
        out += e.bytes;
        cd.push_back(CdRecord{e.name, crc, static_cast<std::uint32_t>(e.bytes.size()), offset});
    }
    const std::uint32_t cd_offset = static_cast<std::uint32_t>(out.size());
    for (const CdRecord& r : cd) {
        detail::append_u32(out, 0x02014b50);
        detail::append_u16(out, 20); // version made by
        detail::append_u16(out, 20); // version needed
        detail::append_u16(out, 0);
        detail::append_u16(out, 0);
        detail::append_u16(out, 0);
        detail::append_u16(out, 0x21);
        detail::append_u32(out, r.crc);
        detail::append_u32(out, r.size);
        detail::append_u32(out, r.size);
        detail::append_u16(out, static_cast<std::uint16_t>(r.name.size()));
        detail::append_u16(out, 0); // extra
        detail::append_u16(out, 0); // comment
        detail::append_u16(out, 0); // disk
        detail::append_u16(out, 0); // internal attrs
        detail::append_u32(out, 0); // external attrs
        detail::append_u32(out, r.offset);
        out += r.name;
    }
    const std::uint32_t cd_size = static_cast<std::uint32_t>(out.size()) - cd_offset;
    detail::append_u32(out, 0x06054b50);
    detail::append_u16(out, 0);
    detail::append_u16(out, 0);
    detail::append_u16(out, static_cast<std::uint16_t>(cd.size()));
    detail::append_u16(out, static_cast<std::uint16_t>(cd.size()));
    detail::append_u32(out, cd_size);
    detail::append_u32(out, cd_offset);
    detail::append_u16(out, 0); // comment length

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw format_error("zip_write: cannot open " + path);
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw format_error("zip_write: short write to " + path);
}

/// Reads a zip archive of stored entries in central-directory order.
inline std::vector<ZipEntry> zip_read(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw format_error("zip_read: cannot open " + path);
    std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (bytes.size() < 22) throw format_error("zip_read: " + path + " is too small to be a zip");

    // EOCD: scan backwards over a possible archive comment.
    std::size_t eocd = std::string::npos;
    const std::size_t scan_limit = bytes.size() >= 22 + 65535 ? bytes.size() - 22 - 65535 : 0;
    for (std::size_t pos = bytes.size() - 22; ; --pos) {
        if (detail::read_u32(bytes, pos) == 0x06054b50) {
            eocd = pos;
            break;
        }
        if (pos == scan_limit) break;
    }
    if (eocd == std::string::npos)
        throw format_error("zip_read: " + path + " has no end-of-central-directory record");
    const std::uint16_t count = detail::read_u16(bytes, eocd + 10);
    const std::uint32_t cd_offset = detail::read_u32(bytes, eocd + 16);

    std::vector<ZipEntry> entries;
    std::size_t pos = cd_offset;
    for (std::uint16_t e = 0; e < count; ++e) {
        if (pos + 46 > bytes.size() || detail::read_u32(bytes, pos) != 0x02014b50)
            throw format_error("zip_read: " + path + " has a corrupt central directory");
        const std::uint16_t method = detail::read_u16(bytes, pos + 10);
        const std::uint32_t crc = detail::read_u32(bytes, pos + 16);
        const std::uint32_t csize = detail::read_u32(bytes, pos + 20);
        const std::uint16_t name_len = detail::read_u16(bytes, pos + 28);
        const std::uint16_t extra_len = detail::read_u16(bytes, pos + 30);
        const std::uint16_t comment_len = detail::read_u16(bytes, pos + 32);
        const std::uint32_t local_off = detail::read_u32(bytes, pos + 42);
        const std::string name = bytes.substr(pos + 46, name_len);
        if (method != 0)
            throw format_error("zip_read: entry " + name + " uses compression; only stored "
                               "entries are supported");
        if (local_off + 30 > bytes.size() || detail::read_u32(bytes, local_off) != 0x04034b50)
            throw format_error("zip_read: entry " + name + " has a corrupt local header");
        const std::uint16_t lname = detail::read_u16(bytes, local_off + 26);
        const std::uint16_t lextra = detail::read_u16(bytes, local_off + 28);
        const std::size_t data_off = local_off + 30 + lname + lextra;
        if (data_off + csize > bytes.size())
            throw format_error("zip_read: entry " + name + " is truncated");
        ZipEntry entry{name, bytes.substr(data_off, csize)};
        const std::uint32_t actual = static_cast<std::uint32_t>(
            ::crc32(0L, reinterpret_cast<const Bytef*>(entry.bytes.data()),
                    static_cast<uInt>(entry.bytes.size())));
        if (actual != crc)
            throw format_error("zip_read: entry " + name + " fails its CRC check");
        entries.push_back(std::move(entry));
        pos += 46u + name_len + extra_len + comment_len;
    }
    return entries;
}

} // namespace scef
