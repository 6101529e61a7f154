#ifndef PFAN_IDX_HPP
#define PFAN_IDX_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "pfan/matrix.hpp"

namespace pfan {

// IDX container: bytes 0-1 zero, byte 2 type code 0x08 (unsigned byte),
// byte 3 = #dims, then big-endian 32-bit dims, then the payload.
// magic is the whole first word: 2049 for label files, 2051 for image files.
struct IdxTensor {
    std::uint32_t magic = 0;
    std::vector<std::uint32_t> dims;
    std::vector<std::uint8_t> payload;

    std::size_t element_count() const;
};

// Parse errors raise FormatError carrying the offending byte offset.
IdxTensor load_idx(const std::string& path);
IdxTensor parse_idx(const std::vector<std::uint8_t>& bytes);

void write_idx(const std::string& path, const IdxTensor& t);
std::vector<std::uint8_t> serialize_idx(const IdxTensor& t);

// Image tensor (magic 2051, dims n x rows x cols) flattened row-major and
// scaled to [0,1].
Matrix decode_images(const IdxTensor& t);

// Label tensor (magic 2049, dims n).
std::vector<int> decode_labels(const IdxTensor& t);

}  // namespace pfan

#endif
