#include "quenchlab/field_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <zlib.h>

#include "quenchlab/errors.hpp"

namespace quenchlab {

static_assert(std::endian::native == std::endian::little, "QLF1 I/O assumes a little-endian host");

namespace {

constexpr std::string_view kMagic = "QLF1";

class Writer {
public:
    template <class T>
    void put(T v) {
        const auto at = buf_.size();
        buf_.resize(at + sizeof(T));
        std::memcpy(buf_.data() + at, &v, sizeof(T));
    }
    void raw(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }
    std::vector<std::uint8_t>& bytes() { return buf_; }

private:
    std::vector<std::uint8_t> buf_;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> b) : b_(b) {}

    template <class T>
    T get() {
        need(sizeof(T));
        T v;
        std::memcpy(&v, b_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    void need(std::size_t n) const {
        if (b_.size() - pos_ < n) fail(ErrorKind::corrupt_file, "field file is truncated");
    }
    std::size_t pos() const { return pos_; }

private:
    std::span<const std::uint8_t> b_;
    std::size_t pos_ = 0;
};

std::uint32_t crc_of(std::span<const std::uint8_t> bytes) {
    uLong crc = crc32(0L, Z_NULL, 0);
    // zlib takes a uInt length; feed large buffers in chunks.
    std::size_t off = 0;
    while (off < bytes.size()) {
        const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - off, 1u << 30));
        crc = crc32(crc, bytes.data() + off, chunk);
        off += chunk;
    }
    return static_cast<std::uint32_t>(crc);
}

}  // namespace

std::vector<std::uint8_t> encode_field(const SpaceTimeField& field) {
    Writer w;
    w.raw(kMagic);
    const GridSpec& g = field.grid();
    const int n = field.dim();
    w.put<std::uint16_t>(static_cast<std::uint16_t>(n));
    w.put<double>(field.params().p());
    for (int a = 0; a < n; ++a) w.put<std::uint32_t>(static_cast<std::uint32_t>(g.cells[a]));
    for (int a = 0; a < n; ++a) {
        w.put<double>(g.origin[a]);
        w.put<double>(g.extent[a]);
    }
    w.put<std::uint64_t>(field.slab_count());
    for (double t : field.times()) w.put<double>(t);
    for (double v : field.values()) w.put<double>(v);
    auto& bytes = w.bytes();
    const std::uint32_t crc = crc_of(std::span(bytes).subspan(kMagic.size()));
    w.put<std::uint32_t>(crc);
    return std::move(w.bytes());
}

SpaceTimeField decode_field(std::span<const std::uint8_t> bytes, BoundaryKind kind) {
    if (bytes.size() < kMagic.size()) fail(ErrorKind::corrupt_file, "field file is truncated");
    const std::string_view magic(reinterpret_cast<const char*>(bytes.data()), kMagic.size());
    if (magic != kMagic) {
        if (magic.substr(0, 3) == "QLF") {
            fail(ErrorKind::unsupported_version,
                 fmt::format("unsupported field format version '{}'", magic));
        }
        fail(ErrorKind::corrupt_file, "bad magic bytes in field file");
    }
    if (bytes.size() < kMagic.size() + 4) fail(ErrorKind::corrupt_file, "field file is truncated");
    const auto payload = bytes.subspan(kMagic.size(), bytes.size() - kMagic.size() - 4);
    Reader r(payload);
    const auto n = r.get<std::uint16_t>();
    if (n < 1 || n > kMaxDim) fail(ErrorKind::corrupt_file, "bad dimension in field file");
    const double p = r.get<double>();
    GridSpec g;
    g.origin.resize(n);
    g.extent.resize(n);
    g.cells.resize(n);
    for (int a = 0; a < n; ++a) g.cells[a] = r.get<std::uint32_t>();
    for (int a = 0; a < n; ++a) {
        g.origin[a] = r.get<double>();
        g.extent[a] = r.get<double>();
    }
    const auto count = r.get<std::uint64_t>();
    std::size_t per_slab = 1;
    for (int a = 0; a < n; ++a) per_slab *= g.cells[a] + 1;
    const std::size_t remaining = payload.size() - r.pos();
    if (count == 0 || count > remaining / 8 || per_slab > remaining / 8 / count ||
        remaining != 8 * (count + count * per_slab)) {
        fail(ErrorKind::corrupt_file, "field file size does not match its header");
    }
    std::uint32_t stored;
    std::memcpy(&stored, bytes.data() + bytes.size() - 4, 4);
    if (stored != crc_of(payload)) fail(ErrorKind::corrupt_file, "CRC mismatch in field file");

    std::vector<double> times(count);
    for (auto& t : times) t = r.get<double>();
    std::vector<double> values(count * per_slab);
    for (auto& v : values) v = r.get<double>();
    g.time_start = times.front();
    g.time_end = times.size() > 1 ? times.back() : times.front() + 1.0;
    try {
        return SpaceTimeField(ModelParams(p, n), g, std::move(times), std::move(values), kind);
    } catch (const Error& e) {
        fail(ErrorKind::corrupt_file, fmt::format("field file content is invalid: {}", e.what()));
    }
}

void save_field(const SpaceTimeField& field, const std::filesystem::path& path) {
    const auto bytes = encode_field(field);
    write_file_atomic(path, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

SpaceTimeField load_field(const std::filesystem::path& path, BoundaryKind kind) {
    const std::string s = read_file(path);
    return decode_field(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()), kind);
}

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(ErrorKind::usage, fmt::format("cannot write '{}'", tmp.string()));
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) fail(ErrorKind::usage, fmt::format("write to '{}' failed", tmp.string()));
    }
    std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::usage, fmt::format("cannot open '{}'", path.string()));
    std::ostringstream ss;
    ss << in.rdbuf();
    return std::move(ss).str();
}

}  // namespace quenchlab
