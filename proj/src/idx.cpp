#include "pfan/idx.hpp"

#include <fstream>

#include "pfan/errors.hpp"

namespace pfan {

std::size_t IdxTensor::element_count() const {
    std::size_t n = 1;
    for (std::uint32_t d : dims) n *= d;
    return dims.empty() ? 0 : n;
}

IdxTensor parse_idx(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 4) throw FormatError("IDX header truncated", static_cast<long long>(bytes.size()));
    if (bytes[0] != 0 || bytes[1] != 0)
        throw FormatError("IDX magic does not start with zero bytes", bytes[0] != 0 ? 0 : 1);
    if (bytes[2] != 0x08) throw FormatError("IDX type code is not 0x08 (unsigned byte)", 2);
    std::uint32_t ndims = bytes[3];

    IdxTensor t;
    t.magic = (static_cast<std::uint32_t>(bytes[0]) << 24) |
              (static_cast<std::uint32_t>(bytes[1]) << 16) |
              (static_cast<std::uint32_t>(bytes[2]) << 8) | bytes[3];
    if (t.magic != 2049 && t.magic != 2051)
        throw FormatError("unknown IDX magic " + std::to_string(t.magic), 3);

    std::size_t offset = 4;
    for (std::uint32_t i = 0; i < ndims; ++i) {
        if (offset + 4 > bytes.size())
            throw FormatError("IDX dimension table truncated", static_cast<long long>(bytes.size()));
        std::uint32_t d = (static_cast<std::uint32_t>(bytes[offset]) << 24) |
                          (static_cast<std::uint32_t>(bytes[offset + 1]) << 16) |
                          (static_cast<std::uint32_t>(bytes[offset + 2]) << 8) |
                          bytes[offset + 3];
        t.dims.push_back(d);
        offset += 4;
    }

    std::size_t expected = t.element_count();
    if (bytes.size() - offset != expected)
        throw FormatError("IDX payload length " + std::to_string(bytes.size() - offset) +
                              " does not match dims product " + std::to_string(expected),
                          static_cast<long long>(offset));
    t.payload.assign(bytes.begin() + static_cast<std::ptrdiff_t>(offset), bytes.end());
    return t;
}

IdxTensor load_idx(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open IDX file: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return parse_idx(bytes);
}

std::vector<std::uint8_t> serialize_idx(const IdxTensor& t) {
    std::vector<std::uint8_t> out;
    out.push_back(static_cast<std::uint8_t>(t.magic >> 24));
    out.push_back(static_cast<std::uint8_t>(t.magic >> 16));
    out.push_back(static_cast<std::uint8_t>(t.magic >> 8));
    out.push_back(static_cast<std::uint8_t>(t.magic));
    for (std::uint32_t d : t.dims) {
        out.push_back(static_cast<std::uint8_t>(d >> 24));
        out.push_back(static_cast<std::uint8_t>(d >> 16));
        out.push_back(static_cast<std::uint8_t>(d >> 8));
        out.push_back(static_cast<std::uint8_t>(d));
    }
    out.insert(out.end(), t.payload.begin(), t.payload.end());
    return out;
}

void write_idx(const std::string& path, const IdxTensor& t) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write IDX file: " + path);
    auto bytes = serialize_idx(t);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

Matrix decode_images(const IdxTensor& t) {
    if (t.magic != 2051)
        throw FormatError("expected image magic 2051, got " + std::to_string(t.magic), 3);
    if (t.dims.size() != 3) throw FormatError("image tensor needs 3 dims", 3);
    int n = static_cast<int>(t.dims[0]);
    int pixels = static_cast<int>(t.dims[1] * t.dims[2]);
    Matrix out(n, pixels);
    for (int i = 0; i < n; ++i) {
        double* row = out.row_ptr(i);
        const std::uint8_t* src = t.payload.data() + static_cast<std::size_t>(i) * pixels;
        for (int j = 0; j < pixels; ++j) row[j] = src[j] / 255.0;
    }
    return out;
}

std::vector<int> decode_labels(const IdxTensor& t) {
    if (t.magic != 2049)
        throw FormatError("expected label magic 2049, got " + std::to_string(t.magic), 3);
    if (t.dims.size() != 1) throw FormatError("label tensor needs 1 dim", 3);
    return std::vector<int>(t.payload.begin(), t.payload.end());
}

}  // namespace pfan
