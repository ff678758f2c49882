#pragma once

#include "tqk/errors.hpp"
#include "tqk/quantize.hpp"
#include "tqk/tile_layout.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace tqk {

// Binary tensor container. Little-endian throughout:
//   magic "TQK1" | version u32 | records until EOF
// record:
//   name_len u32 | name bytes | dtype u8 | grouping u8 | rank u8 |
//   dims u64 * rank | payload_len u64 | payload
// F16 payloads are logical row-major elements; quantized payloads are block
// records (18/34/144 bytes, FP16 scales little-endian) over the tile-padded
// element count in block order.
inline constexpr char kTensorFileMagic[4] = {'T', 'Q', 'K', '1'};
inline constexpr uint32_t kTensorFileVersion = 1;

enum class TensorDtype : uint8_t { f16 = 0, q4_0 = 1, q8_0 = 2, q4_0_super = 3 };

enum class FormatIssue {
    truncated,
    bad_magic,
    bad_version,
    unknown_dtype,
    unknown_grouping,
    bad_rank,
    bad_dims,
    size_mismatch,
};

const char * format_issue_name(FormatIssue issue);

struct format_error : validation_error {
    format_error(FormatIssue i, const std::string & msg) : validation_error(msg), issue(i) {}
    FormatIssue issue;
};

struct TensorRecord {
    std::string name;
    TensorDtype dtype = TensorDtype::f16;
    Grouping grouping = Grouping::tile;
    std::vector<uint64_t> dims;
    std::vector<uint8_t> payload;

    uint64_t elem_count() const;
};

// exact payload size implied by dtype + dims (quantized dtypes are rank-2,
// padded to 32x32 tiles)
uint64_t expected_payload_bytes(TensorDtype dtype, const std::vector<uint64_t> & dims);

// serialization helpers between in-memory tensors and records
TensorRecord to_record(const std::string & name, const HalfMatrix & m);
TensorRecord to_record(const std::string & name, const QuantTensor & q);
HalfMatrix record_to_matrix(const TensorRecord & rec);
QuantTensor record_to_quant(const TensorRecord & rec);

// writes are atomic: temp file in the same directory, then rename
void write_tensor_file(const std::filesystem::path & path, std::span<const TensorRecord> records);
std::vector<TensorRecord> read_tensor_file(const std::filesystem::path & path);

// in-memory codec, shared by the file functions and the tests
std::vector<uint8_t> encode_tensor_file(std::span<const TensorRecord> records);
std::vector<TensorRecord> decode_tensor_file(std::span<const uint8_t> bytes);

} // namespace tqk
