#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "l0sparse/replay_buffer.hpp"

namespace l0sparse {

enum class DataError { io, bad_magic, bad_version, bad_schema, truncated, checksum_mismatch };

class DataFormatError : public std::runtime_error {
public:
    DataFormatError(DataError code, const std::string& what)
        : std::runtime_error(what), code_(code) {}
    DataError code() const { return code_; }

private:
    DataError code_;
};

namespace detail {

// CRC-32 (IEEE 802.3), reflected, poly 0xEDB88320.
class Crc32 {
public:
    void update(const void* data, std::size_t len) {
        const auto* p = static_cast<const unsigned char*>(data);
        std::uint32_t c = state_;
        for (std::size_t i = 0; i < len; ++i) c = table()[(c ^ p[i]) & 0xFF] ^ (c >> 8);
        state_ = c;
    }
    std::uint32_t value() const { return state_ ^ 0xFFFFFFFFu; }

private:
    static const std::uint32_t* table() {
        static const auto t = [] {
            std::array<std::uint32_t, 256> out{};
            for (std::uint32_t i = 0; i < 256; ++i) {
                std::uint32_t c = i;
                for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
                out[i] = c;
            }
            return out;
        }();
        return t.data();
    }
    std::uint32_t state_ = 0xFFFFFFFFu;
};

class ChecksumWriter {
public:
    explicit ChecksumWriter(std::ostream& os) : os_(os) {}

    void bytes(const void* data, std::size_t len) {
        os_.write(static_cast<const char*>(data), static_cast<std::streamsize>(len));
        crc_.update(data, len);
    }
    void u16(std::uint16_t v) { write_le(v); }
    void u32(std::uint32_t v) { write_le(v); }
    void u64(std::uint64_t v) { write_le(v); }
    void f64(double v) { write_le(std::bit_cast<std::uint64_t>(v)); }
    void finish_crc() {
        const std::uint32_t crc = crc_.value();
        unsigned char b[4];
        for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((crc >> (8 * i)) & 0xFF);
        os_.write(reinterpret_cast<const char*>(b), 4);
    }
    bool good() const { return os_.good(); }

private:
    template <typename T>
    void write_le(T v) {
        unsigned char b[sizeof(T)];
        for (std::size_t i = 0; i < sizeof(T); ++i)
            b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
        bytes(b, sizeof(T));
    }

    std::ostream& os_;
    Crc32 crc_;
};

class ChecksumReader {
public:
    explicit ChecksumReader(std::istream& is, std::string name) : is_(is), name_(std::move(name)) {}

    void bytes(void* data, std::size_t len) {
        is_.read(static_cast<char*>(data), static_cast<std::streamsize>(len));
        if (static_cast<std::size_t>(is_.gcount()) != len)
            throw DataFormatError(DataError::truncated, name_ + ": truncated file");
        crc_.update(data, len);
    }
    std::uint16_t u16() { return read_le<std::uint16_t>(); }
    std::uint32_t u32() { return read_le<std::uint32_t>(); }
    std::uint64_t u64() { return read_le<std::uint64_t>(); }
    double f64() { return std::bit_cast<double>(read_le<std::uint64_t>()); }

    void verify_crc() {
        const std::uint32_t expect = crc_.value();
        unsigned char b[4];
        is_.read(reinterpret_cast<char*>(b), 4);
        if (is_.gcount() != 4)
            throw DataFormatError(DataError::truncated, name_ + ": truncated file (missing checksum)");
        std::uint32_t stored = 0;
        for (int i = 0; i < 4; ++i) stored |= static_cast<std::uint32_t>(b[i]) << (8 * i);
        if (stored != expect)
            throw DataFormatError(DataError::checksum_mismatch, name_ + ": checksum mismatch");
    }

private:
    template <typename T>
    T read_le() {
        unsigned char b[sizeof(T)];
        bytes(b, sizeof(T));
        T v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(b[i]) << (8 * i);
        return v;
    }

    std::istream& is_;
    std::string name_;
    Crc32 crc_;
};

}  // namespace detail

inline constexpr char kDatasetMagic[4] = {'S', 'G', 'D', '0'};
inline constexpr std::uint16_t kDatasetVersion = 1;

// Binary layout: magic "SGD0", version u16, obs_dim u32, act_dim u32,
// record count u64, then little-endian f64 columns in the order
// obs0,obs1,obs2,act0,rew,nobs0,nobs1,nobs2,done and a trailing CRC32.
inline void save_dataset(const ReplayBuffer& buffer, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataFormatError(DataError::io, path + ": cannot open for writing");
    detail::ChecksumWriter w(os);
    w.bytes(kDatasetMagic, 4);
    w.u16(kDatasetVersion);
    w.u32(static_cast<std::uint32_t>(kObsDim));
    w.u32(static_cast<std::uint32_t>(kActDim));
    const std::size_t n = buffer.count();
    w.u64(n);
    for (std::size_t k = 0; k < kObsDim; ++k)
        for (std::size_t i = 0; i < n; ++i) w.f64(buffer.obs_raw()[i * kObsDim + k]);
    for (std::size_t i = 0; i < n; ++i) w.f64(buffer.act_raw()[i]);
    for (std::size_t i = 0; i < n; ++i) w.f64(buffer.reward_raw()[i]);
    for (std::size_t k = 0; k < kObsDim; ++k)
        for (std::size_t i = 0; i < n; ++i) w.f64(buffer.next_obs_raw()[i * kObsDim + k]);
    for (std::size_t i = 0; i < n; ++i) w.f64(buffer.done_raw()[i] ? 1.0 : 0.0);
    w.finish_crc();
    if (!w.good()) throw DataFormatError(DataError::io, path + ": write failed");
}

inline ReplayBuffer load_dataset(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataFormatError(DataError::io, path + ": cannot open for reading");
    detail::ChecksumReader r(is, path);
    char magic[4];
    r.bytes(magic, 4);
    if (std::memcmp(magic, kDatasetMagic, 4) != 0)
        throw DataFormatError(DataError::bad_magic, path + ": bad magic");
    const std::uint16_t version = r.u16();
    if (version != kDatasetVersion)
        throw DataFormatError(DataError::bad_version,
                              path + ": unsupported version " + std::to_string(version));
    const std::uint32_t obs_dim = r.u32();
    const std::uint32_t act_dim = r.u32();
    if (obs_dim != kObsDim || act_dim != kActDim)
        throw DataFormatError(DataError::bad_schema, path + ": unexpected dims header");
    const std::uint64_t n = r.u64();
    if (n == 0) throw DataFormatError(DataError::bad_schema, path + ": empty dataset");
    if (n > (1ULL << 32))
        throw DataFormatError(DataError::bad_schema, path + ": implausible record count");

    std::vector<double> cols[8];
    for (auto& c : cols) c.resize(n);
    for (auto& c : cols)
        for (std::uint64_t i = 0; i < n; ++i) c[i] = r.f64();
    std::vector<double> done(n);
    for (std::uint64_t i = 0; i < n; ++i) done[i] = r.f64();
    r.verify_crc();

    ReplayBuffer buffer(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        TransitionRecord rec;
        rec.obs = {cols[0][i], cols[1][i], cols[2][i]};
        rec.act = cols[3][i];
        rec.reward = cols[4][i];
        rec.next_obs = {cols[5][i], cols[6][i], cols[7][i]};
        rec.done = done[i] != 0.0;
        buffer.store(rec);
    }
    return buffer;
}

inline void export_csv(const ReplayBuffer& buffer, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw DataFormatError(DataError::io, path + ": cannot open for writing");
    os << "obs0,obs1,obs2,act0,rew,nobs0,nobs1,nobs2,done\n";
    char buf[32];
    auto put = [&](double v, char sep) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        os << buf << sep;
    };
    for (std::size_t i = 0; i < buffer.count(); ++i) {
        const TransitionRecord rec = buffer.record(i);
        for (double v : rec.obs) put(v, ',');
        put(rec.act, ',');
        put(rec.reward, ',');
        for (double v : rec.next_obs) put(v, ',');
        os << (rec.done ? 1 : 0) << '\n';
    }
    if (!os.good()) throw DataFormatError(DataError::io, path + ": write failed");
}

}  // namespace l0sparse
