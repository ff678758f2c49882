#include "tqk/tensor_io.hpp"

#include <cstring>
#include <fstream>

namespace tqk {

namespace {

constexpr int kMaxRank = 8;

void put_u16(std::vector<uint8_t> & out, uint16_t v) {
    out.push_back(static_cast<uint8_t>(v & 0xFF));
    out.push_back(static_cast<uint8_t>(v >> 8));
}

void put_u32(std::vector<uint8_t> & out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::vector<uint8_t> & out, uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>((v >> (8 * i)) & 0xFF));
}

struct Cursor {
    std::span<const uint8_t> bytes;
    size_t pos = 0;

    void need(size_t n) const {
        if (pos + n > bytes.size()) {
            throw format_error(FormatIssue::truncated, "tensor file truncated");
        }
    }
    uint8_t u8() {
        need(1);
        return bytes[pos++];
    }
    uint16_t u16() {
        need(2);
        uint16_t v = static_cast<uint16_t>(bytes[pos] | (bytes[pos + 1] << 8));
        pos += 2;
        return v;
    }
    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(bytes[pos + i]) << (8 * i);
        pos += 4;
        return v;
    }
    uint64_t u64() {
        need(8);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(bytes[pos + i]) << (8 * i);
        pos += 8;
        return v;
    }
    std::span<const uint8_t> take(size_t n) {
        need(n);
        auto s = bytes.subspan(pos, n);
        pos += n;
        return s;
    }
    bool at_end() const { return pos == bytes.size(); }
};

void validate_record_header(const TensorRecord & rec) {
    if (rec.dims.empty() || rec.dims.size() > kMaxRank) {
        throw format_error(FormatIssue::bad_rank, "tensor rank must be 1..8");
    }
    for (uint64_t d : rec.dims) {
        if (d == 0) throw format_error(FormatIssue::bad_dims, "tensor dims must be >= 1");
    }
    if (rec.payload.size() != expected_payload_bytes(rec.dtype, rec.dims)) {
        throw format_error(FormatIssue::size_mismatch,
                           "payload size does not match dtype block arithmetic for '" + rec.name + "'");
    }
}

} // namespace

const char * format_issue_name(FormatIssue issue) {
    switch (issue) {
        case FormatIssue::truncated: return "truncated";
        case FormatIssue::bad_magic: return "bad_magic";
        case FormatIssue::bad_version: return "bad_version";
        case FormatIssue::unknown_dtype: return "unknown_dtype";
        case FormatIssue::unknown_grouping: return "unknown_grouping";
        case FormatIssue::bad_rank: return "bad_rank";
        case FormatIssue::bad_dims: return "bad_dims";
        case FormatIssue::size_mismatch: return "size_mismatch";
    }
    return "?";
}

uint64_t TensorRecord::elem_count() const {
    uint64_t n = 1;
    for (uint64_t d : dims) n *= d;
    return n;
}

uint64_t expected_payload_bytes(TensorDtype dtype, const std::vector<uint64_t> & dims) {
    uint64_t elems = 1;
    for (uint64_t d : dims) {
        if (d == 0 || elems > (uint64_t(1) << 48) / d) {
            throw format_error(FormatIssue::bad_dims, "tensor dims out of range");
        }
        elems *= d;
    }
    if (dtype == TensorDtype::f16) {
        return elems * 2;
    }
    if (dims.size() != 2) {
        throw format_error(FormatIssue::bad_rank, "quantized tensors must be rank 2");
    }
    const uint64_t padded = static_cast<uint64_t>(ceil_to_tile(static_cast<int64_t>(dims[0]))) *
                            static_cast<uint64_t>(ceil_to_tile(static_cast<int64_t>(dims[1])));
    const uint64_t blocks = padded / kGroupSize;
    switch (dtype) {
        case TensorDtype::q4_0: return blocks * kBlockQ4Bytes;
        case TensorDtype::q8_0: return blocks * kBlockQ8Bytes;
        case TensorDtype::q4_0_super: return blocks / kSuperGroups * kSuperBlockBytes;
        default: break;
    }
    throw format_error(FormatIssue::unknown_dtype, "unknown dtype tag");
}

TensorRecord to_record(const std::string & name, const HalfMatrix & m) {
    TensorRecord rec;
    rec.name = name;
    rec.dtype = TensorDtype::f16;
    rec.grouping = Grouping::conventional; // irrelevant for f16 payloads
    rec.dims = {static_cast<uint64_t>(m.rows), static_cast<uint64_t>(m.cols)};
    rec.payload.reserve(m.data.size() * 2);
    for (Half h : m.data) put_u16(rec.payload, h.bits);
    return rec;
}

TensorRecord to_record(const std::string & name, const QuantTensor & q) {
    TensorRecord rec;
    rec.name = name;
    rec.grouping = q.grouping;
    rec.dims = {static_cast<uint64_t>(q.rows), static_cast<uint64_t>(q.cols)};

    if (q.coalesced) {
        rec.dtype = TensorDtype::q4_0_super;
        rec.payload.reserve(q.q4_super.size() * kSuperBlockBytes);
        for (const SuperBlockQ4 & s : q.q4_super) {
            rec.payload.insert(rec.payload.end(), s.qs.begin(), s.qs.end());
            for (Half h : s.scales) put_u16(rec.payload, h.bits);
        }
    } else if (q.scheme == QuantScheme::q4_0) {
        rec.dtype = TensorDtype::q4_0;
        rec.payload.reserve(q.q4.size() * kBlockQ4Bytes);
        for (const BlockQ4_0 & b : q.q4) {
            put_u16(rec.payload, b.scale.bits);
            rec.payload.insert(rec.payload.end(), b.qs.begin(), b.qs.end());
        }
    } else {
        rec.dtype = TensorDtype::q8_0;
        rec.payload.reserve(q.q8.size() * kBlockQ8Bytes);
        for (const BlockQ8_0 & b : q.q8) {
            put_u16(rec.payload, b.scale.bits);
            for (int8_t c : b.qs) rec.payload.push_back(static_cast<uint8_t>(c));
        }
    }
    return rec;
}

HalfMatrix record_to_matrix(const TensorRecord & rec) {
    if (rec.dtype != TensorDtype::f16) throw validation_error("record is not an f16 tensor");
    if (rec.dims.size() != 2) throw validation_error("f16 matrix records must be rank 2");
    HalfMatrix m = make_half_matrix(static_cast<int64_t>(rec.dims[0]), static_cast<int64_t>(rec.dims[1]));
    for (size_t i = 0; i < m.data.size(); ++i) {
        m.data[i] = Half::from_bits(
            static_cast<uint16_t>(rec.payload[2 * i] | (rec.payload[2 * i + 1] << 8)));
    }
    return m;
}

QuantTensor record_to_quant(const TensorRecord & rec) {
    if (rec.dtype == TensorDtype::f16) throw validation_error("record is not a quantized tensor");
    if (rec.dims.size() != 2) throw validation_error("quantized records must be rank 2");

    QuantTensor q;
    q.rows = static_cast<int64_t>(rec.dims[0]);
    q.cols = static_cast<int64_t>(rec.dims[1]);
    q.padded_rows = ceil_to_tile(q.rows);
    q.padded_cols = ceil_to_tile(q.cols);
    q.grouping = rec.grouping;

    const uint8_t * p = rec.payload.data();
    const int64_t blocks = q.block_count();
    if (rec.dtype == TensorDtype::q4_0_super) {
        if (rec.grouping != Grouping::tile) {
            throw validation_error("super-block tensors require tile grouping");
        }
        q.scheme = QuantScheme::q4_0;
        q.coalesced = true;
        q.q4_super.resize(static_cast<size_t>(blocks / kSuperGroups));
        for (SuperBlockQ4 & s : q.q4_super) {
            std::memcpy(s.qs.data(), p, 128);
            p += 128;
            for (Half & h : s.scales) {
                h = Half::from_bits(static_cast<uint16_t>(p[0] | (p[1] << 8)));
                p += 2;
            }
        }
    } else if (rec.dtype == TensorDtype::q4_0) {
        q.scheme = QuantScheme::q4_0;
        q.q4.resize(static_cast<size_t>(blocks));
        for (BlockQ4_0 & b : q.q4) {
            b.scale = Half::from_bits(static_cast<uint16_t>(p[0] | (p[1] << 8)));
            p += 2;
            std::memcpy(b.qs.data(), p, 16);
            p += 16;
        }
    } else {
        q.scheme = QuantScheme::q8_0;
        q.q8.resize(static_cast<size_t>(blocks));
        for (BlockQ8_0 & b : q.q8) {
            b.scale = Half::from_bits(static_cast<uint16_t>(p[0] | (p[1] << 8)));
            p += 2;
            std::memcpy(b.qs.data(), p, 32);
            p += 32;
        }
    }
    return q;
}

std::vector<uint8_t> encode_tensor_file(std::span<const TensorRecord> records) {
    std::vector<uint8_t> out;
    out.insert(out.end(), kTensorFileMagic, kTensorFileMagic + 4);
    put_u32(out, kTensorFileVersion);
    for (const TensorRecord & rec : records) {
        validate_record_header(rec);
        put_u32(out, static_cast<uint32_t>(rec.name.size()));
        out.insert(out.end(), rec.name.begin(), rec.name.end());
        out.push_back(static_cast<uint8_t>(rec.dtype));
        out.push_back(static_cast<uint8_t>(rec.grouping));
        out.push_back(static_cast<uint8_t>(rec.dims.size()));
        for (uint64_t d : rec.dims) put_u64(out, d);
        put_u64(out, rec.payload.size());
        out.insert(out.end(), rec.payload.begin(), rec.payload.end());
    }
    return out;
}

std::vector<TensorRecord> decode_tensor_file(std::span<const uint8_t> bytes) {
    Cursor cur{bytes};

    const auto magic = cur.take(4);
    if (std::memcmp(magic.data(), kTensorFileMagic, 4) != 0) {
        throw format_error(FormatIssue::bad_magic, "bad magic; not a TQK1 tensor file");
    }
    const uint32_t version = cur.u32();
    if (version != kTensorFileVersion) {
        throw format_error(FormatIssue::bad_version, "unsupported tensor file version");
    }

    std::vector<TensorRecord> records;
    while (!cur.at_end()) {
        TensorRecord rec;
        const uint32_t name_len = cur.u32();
        const auto name = cur.take(name_len);
        rec.name.assign(reinterpret_cast<const char *>(name.data()), name.size());

        const uint8_t dtype = cur.u8();
        if (dtype > static_cast<uint8_t>(TensorDtype::q4_0_super)) {
            throw format_error(FormatIssue::unknown_dtype, "unknown dtype tag in '" + rec.name + "'");
        }
        rec.dtype = static_cast<TensorDtype>(dtype);

        const uint8_t grouping = cur.u8();
        if (grouping > static_cast<uint8_t>(Grouping::tile)) {
            throw format_error(FormatIssue::unknown_grouping, "unknown grouping tag in '" + rec.name + "'");
        }
        rec.grouping = static_cast<Grouping>(grouping);

        const uint8_t rank = cur.u8();
        if (rank < 1 || rank > kMaxRank) {
            throw format_error(FormatIssue::bad_rank, "bad rank in '" + rec.name + "'");
        }
        rec.dims.resize(rank);
        for (uint64_t & d : rec.dims) d = cur.u64();

        const uint64_t payload_len = cur.u64();
        const uint64_t expected = expected_payload_bytes(rec.dtype, rec.dims);
        if (payload_len != expected) {
            throw format_error(FormatIssue::size_mismatch,
                               "payload length mismatch in '" + rec.name + "'");
        }
        const auto payload = cur.take(static_cast<size_t>(payload_len));
        rec.payload.assign(payload.begin(), payload.end());
        records.push_back(std::move(rec));
    }
    return records;
}

void write_tensor_file(const std::filesystem::path & path, std::span<const TensorRecord> records) {
    const std::vector<uint8_t> bytes = encode_tensor_file(records);

    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw io_error("cannot open for writing: " + tmp.string());
        os.write(reinterpret_cast<const char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!os) throw io_error("write failed: " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw io_error("rename failed: " + path.string() + ": " + ec.message());
    }
}

std::vector<TensorRecord> read_tensor_file(const std::filesystem::path & path) {
    std::ifstream is(path, std::ios::binary | std::ios::ate);
    if (!is) throw io_error("cannot open: " + path.string());
    const std::streamsize size = is.tellg();
    is.seekg(0);
    std::vector<uint8_t> bytes(static_cast<size_t>(size));
    if (size > 0) {
        is.read(reinterpret_cast<char *>(bytes.data()), size);
        if (!is) throw io_error("read failed: " + path.string());
    }
    return decode_tensor_file(bytes);
}

} // namespace tqk
