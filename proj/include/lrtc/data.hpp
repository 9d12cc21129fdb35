#ifndef LRTC_DATA_HPP
#define LRTC_DATA_HPP

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "lrtc/talg.hpp"
#include "lrtc/tensor.hpp"

namespace lrtc {

/// Thrown on file-system failures and malformed on-disk payloads.
struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Seed of the reproducible random stream.
struct RngSeed {
    std::uint64_t value = 0;
};

/// Derives an independent seed for sub-stream `stream` of a base seed
/// (splitmix64 of base xor stream), so e.g. the tensor and mask of one trial
/// draw from unrelated streams.
inline RngSeed derive_seed(RngSeed base, std::uint64_t stream) {
    std::uint64_t z = base.value ^ (stream * 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return RngSeed{z ^ (z >> 31)};
}

/// Reproducible random source. The engine is std::mt19937_64 seeded directly
/// with the seed value; all derived draws are implemented here with fixed
/// semantics rather than through distribution classes, so a seed produces
/// the same stream on every standard library:
///  - unit_open()  consumes one engine draw, returns (x >> 11) * 2^-53 in [0,1)
///  - normal()     consumes exactly two draws u1, u2 and returns the
///                 Box-Muller value sqrt(-2 ln(1-u1)) * cos(2 pi u2)
///  - below(n)     consumes draws until one falls in the largest multiple
///                 of n below 2^64 (rejection sampling), returns draw % n
class Rng {
public:
    explicit Rng(RngSeed seed) : engine_(seed.value) {}

    double unit_open() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double normal() {
        const double u1 = unit_open();
        const double u2 = unit_open();
        return std::sqrt(-2.0 * std::log1p(-u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - (std::numeric_limits<std::uint64_t>::max() % n + 1) % n;
        std::uint64_t x = engine_();
        while (x > limit) x = engine_();
        return x % n;
    }

private:
    std::mt19937_64 engine_;
};

/// Observed-index set of a partially sampled tensor. Indices are linear
/// positions in the i1-fastest tensor layout, kept sorted and unique.
class SamplingMask {
public:
    SamplingMask(Dims dims, std::vector<std::uint64_t> observed)
        : dims_(dims), observed_(std::move(observed)) {
        detail::check_dims_positive(dims);
        std::sort(observed_.begin(), observed_.end());
        const auto total = static_cast<std::uint64_t>(dims.count());
        if (observed_.empty()) throw std::invalid_argument("sampling mask must observe at least one entry");
        if (observed_.back() >= total)
            throw std::invalid_argument("mask index " + std::to_string(observed_.back()) +
                                        " out of range for dims " + dims.str());
        if (std::adjacent_find(observed_.begin(), observed_.end()) != observed_.end())
            throw std::invalid_argument("mask indices must be unique");
    }

    const Dims& dims() const { return dims_; }
    const std::vector<std::uint64_t>& observed() const { return observed_; }
    std::uint64_t count() const { return observed_.size(); }
    double sampling_rate() const {
        return static_cast<double>(observed_.size()) / static_cast<double>(dims_.count());
    }

    /// P_Omega: keeps observed entries, zeroes the rest.
    Tensor3 project(const Tensor3& x) const {
        require_dims(x);
        Tensor3 out(dims_);
        for (std::uint64_t idx : observed_) out.data()[idx] = x.data()[idx];
        return out;
    }

    /// P_Omega-bar = identity - P_Omega.
    Tensor3 project_complement(const Tensor3& x) const {
        require_dims(x);
        Tensor3 out = x;
        for (std::uint64_t idx : observed_) out.data()[idx] = 0.0;
        return out;
    }

    /// Overwrites the observed entries of x with the corresponding entries
    /// of source, by plain assignment.
    void assign_observed(Tensor3& x, const Tensor3& source) const {
        require_dims(x);
        require_dims(source);
        for (std::uint64_t idx : observed_) x.data()[idx] = source.data()[idx];
    }

    bool matches_observed(const Tensor3& a, const Tensor3& b) const {
        require_dims(a);
        require_dims(b);
        for (std::uint64_t idx : observed_)
            if (a.data()[idx] != b.data()[idx]) return false;
        return true;
    }

private:
    void require_dims(const Tensor3& x) const {
        if (!(x.dims() == dims_))
            throw dimension_error("mask dims " + dims_.str() + " vs tensor " + x.dims().str());
    }

    Dims dims_;
    std::vector<std::uint64_t> observed_;
};

/// Random tensor with standard-normal entries, filled in storage order.
inline Tensor3 gen_gaussian(Dims dims, RngSeed seed) {
    Tensor3 out(dims);
    Rng rng(seed);
    for (Index i = 0; i < out.size(); ++i) out.data()[i] = rng.normal();
    return out;
}

/// Tensor of tubal rank at most r, generated as the t-product of two
/// independent Gaussian factors P (I1 x r x I3) and Q (r x I2 x I3). P is
/// drawn first, then Q, each in storage order from sub-streams 0 and 1.
inline Tensor3 gen_lowrank(Dims dims, Index r, RngSeed seed) {
    if (r < 1 || r > std::min(dims.i1, dims.i2))
        throw std::invalid_argument("gen_lowrank: rank " + std::to_string(r) +
                                    " not in [1, min(I1,I2)] for dims " + dims.str());
    const Tensor3 p = gen_gaussian(Dims{dims.i1, r, dims.i3}, derive_seed(seed, 0));
    const Tensor3 q = gen_gaussian(Dims{r, dims.i2, dims.i3}, derive_seed(seed, 1));
    return tprod(p, q);
}

/// Uniform random subset of exactly round(sr * I1*I2*I3) linear indices,
/// sampled without replacement via a partial Fisher-Yates shuffle.
inline SamplingMask gen_mask(Dims dims, double sr, RngSeed seed) {
    detail::check_dims_positive(dims);
    if (!(sr > 0.0) || sr > 1.0) throw std::invalid_argument("sampling rate must be in (0, 1]");
    const auto total = static_cast<std::uint64_t>(dims.count());
    const auto m = static_cast<std::uint64_t>(std::llround(sr * static_cast<double>(total)));
    if (m == 0) throw std::invalid_argument("sampling rate rounds to an empty mask");
    std::vector<std::uint64_t> pool(total);
    for (std::uint64_t i = 0; i < total; ++i) pool[i] = i;
    Rng rng(seed);
    for (std::uint64_t i = 0; i < m; ++i) {
        const std::uint64_t j = i + rng.below(total - i);
        std::swap(pool[i], pool[j]);
    }
    pool.resize(m);
    return SamplingMask(dims, std::move(pool));
}

// ---------------------------------------------------------------------------
// Binary file formats (all integers and doubles little-endian).
// ---------------------------------------------------------------------------

namespace detail {

inline void put_bytes(std::ostream& os, const void* p, std::size_t n) {
    os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    if (!os) throw io_error("write failed");
}

inline void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    put_bytes(os, b, 4);
}

inline void put_u64(std::ostream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    put_bytes(os, b, 8);
}

inline void put_f64(std::ostream& os, double v) { put_u64(os, std::bit_cast<std::uint64_t>(v)); }

inline void get_bytes(std::istream& is, void* p, std::size_t n, const char* what) {
    is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (is.gcount() != static_cast<std::streamsize>(n))
        throw io_error(std::string("truncated file while reading ") + what);
}

inline std::uint32_t get_u32(std::istream& is, const char* what) {
    unsigned char b[4];
    get_bytes(is, b, 4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

inline std::uint64_t get_u64(std::istream& is, const char* what) {
    unsigned char b[8];
    get_bytes(is, b, 8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

inline double get_f64(std::istream& is, const char* what) {
    return std::bit_cast<double>(get_u64(is, what));
}

inline void expect_magic(std::istream& is, const char* magic, const char* format) {
    char b[4];
    get_bytes(is, b, 4, "magic");
    if (std::memcmp(b, magic, 4) != 0)
        throw io_error(std::string("not a ") + format + " file (bad magic)");
}

inline Dims get_dims(std::istream& is) {
    const std::uint64_t d1 = get_u64(is, "dims");
    const std::uint64_t d2 = get_u64(is, "dims");
    const std::uint64_t d3 = get_u64(is, "dims");
    constexpr std::uint64_t kMax = 1ULL << 20;  // per-axis sanity bound
    if (d1 == 0 || d2 == 0 || d3 == 0 || d1 > kMax || d2 > kMax || d3 > kMax)
        throw io_error("dims out of range");
    if (d1 * d2 > (1ULL << 40) / d3) throw io_error("dims product overflows supported size");
    return Dims{static_cast<Index>(d1), static_cast<Index>(d2), static_cast<Index>(d3)};
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw io_error("cannot open for writing: " + path);
    return os;
}

inline std::ifstream open_in(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw io_error("cannot open for reading: " + path);
    return is;
}

}  // namespace detail

/// Tensor file: magic "TNS3", version u32=1, dims as three u64, then
/// I1*I2*I3 little-endian IEEE-754 doubles in i1-fastest order.
inline void write_tensor(const std::string& path, const Tensor3& x) {
    std::ofstream os = detail::open_out(path);
    detail::put_bytes(os, "TNS3", 4);
    detail::put_u32(os, 1);
    detail::put_u64(os, static_cast<std::uint64_t>(x.dims().i1));
    detail::put_u64(os, static_cast<std::uint64_t>(x.dims().i2));
    detail::put_u64(os, static_cast<std::uint64_t>(x.dims().i3));
    for (Index i = 0; i < x.size(); ++i) detail::put_f64(os, x.data()[i]);
    os.flush();
    if (!os) throw io_error("write failed: " + path);
}

inline Tensor3 read_tensor(const std::string& path) {
    std::ifstream is = detail::open_in(path);
    detail::expect_magic(is, "TNS3", "tensor");
    const std::uint32_t version = detail::get_u32(is, "version");
    if (version != 1) throw io_error("unsupported tensor format version " + std::to_string(version));
    const Dims dims = detail::get_dims(is);
    std::vector<double> values(static_cast<std::size_t>(dims.count()));
    for (double& v : values) v = detail::get_f64(is, "values");
    if (is.peek() != std::ifstream::traits_type::eof()) throw io_error("trailing bytes after tensor payload");
    try {
        return Tensor3(dims, std::move(values));
    } catch (const std::invalid_argument& e) {
        throw io_error(std::string("invalid tensor payload: ") + e.what());
    }
}

/// Mask file: magic "MSK3", version u32=1, dims as three u64, count u64,
/// then count strictly increasing u64 linear indices.
inline void write_mask(const std::string& path, const SamplingMask& m) {
    std::ofstream os = detail::open_out(path);
    detail::put_bytes(os, "MSK3", 4);
    detail::put_u32(os, 1);
    detail::put_u64(os, static_cast<std::uint64_t>(m.dims().i1));
    detail::put_u64(os, static_cast<std::uint64_t>(m.dims().i2));
    detail::put_u64(os, static_cast<std::uint64_t>(m.dims().i3));
    detail::put_u64(os, m.count());
    for (std::uint64_t idx : m.observed()) detail::put_u64(os, idx);
    os.flush();
    if (!os) throw io_error("write failed: " + path);
}

inline SamplingMask read_mask(const std::string& path) {
    std::ifstream is = detail::open_in(path);
    detail::expect_magic(is, "MSK3", "mask");
    const std::uint32_t version = detail::get_u32(is, "version");
    if (version != 1) throw io_error("unsupported mask format version " + std::to_string(version));
    const Dims dims = detail::get_dims(is);
    const std::uint64_t count = detail::get_u64(is, "count");
    const auto total = static_cast<std::uint64_t>(dims.count());
    if (count == 0 || count > total) throw io_error("mask count out of range");
    std::vector<std::uint64_t> observed(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        observed[i] = detail::get_u64(is, "indices");
        if (observed[i] >= total) throw io_error("mask index out of range");
        if (i > 0 && observed[i] <= observed[i - 1])
            throw io_error("mask indices must be strictly increasing");
    }
    if (is.peek() != std::ifstream::traits_type::eof()) throw io_error("trailing bytes after mask payload");
    return SamplingMask(dims, std::move(observed));
}

// ---------------------------------------------------------------------------
// Image ingestion: binary portable pixmap (P6, maxval 255).
// ---------------------------------------------------------------------------

namespace detail {

inline int ppm_token(std::istream& is) {
    // next integer token, skipping whitespace and '#' comments
    int c = is.get();
    while (c != std::ifstream::traits_type::eof()) {
        if (c == '#') {
            while (c != '\n' && c != std::ifstream::traits_type::eof()) c = is.get();
        } else if (!std::isspace(c)) {
            break;
        }
        c = is.get();
    }
    if (c == std::ifstream::traits_type::eof()) throw io_error("truncated pixmap header");
    int value = 0;
    bool any = false;
    while (c != std::ifstream::traits_type::eof() && std::isdigit(c)) {
        value = value * 10 + (c - '0');
        if (value > 1 << 24) throw io_error("pixmap header value out of range");
        any = true;
        c = is.get();
    }
    if (!any) throw io_error("malformed pixmap header");
    if (c != std::ifstream::traits_type::eof()) is.unget();
    return value;
}

}  // namespace detail

/// Reads a binary P6 pixmap into an H x W x 3 tensor scaled to [0,1]:
/// entry (row, col, channel) = byte / 255.
inline Tensor3 image_to_tensor(const std::string& path) {
    std::ifstream is = detail::open_in(path);
    char magic[2];
    detail::get_bytes(is, magic, 2, "magic");
    if (magic[0] != 'P' || magic[1] != '6') throw io_error("unsupported image format (want binary P6 pixmap)");
    const int width = detail::ppm_token(is);
    const int height = detail::ppm_token(is);
    const int maxval = detail::ppm_token(is);
    if (width < 1 || height < 1) throw io_error("pixmap with empty dimensions");
    if (maxval != 255) throw io_error("unsupported pixmap maxval " + std::to_string(maxval));
    is.get();  // single whitespace byte after maxval
    std::vector<unsigned char> raw(static_cast<std::size_t>(width) * height * 3);
    detail::get_bytes(is, raw.data(), raw.size(), "pixels");
    Tensor3 out(Dims{height, width, 3});
    std::size_t pos = 0;
    for (Index row = 0; row < height; ++row)
        for (Index col = 0; col < width; ++col)
            for (Index ch = 0; ch < 3; ++ch) out(row, col, ch) = static_cast<double>(raw[pos++]) / 255.0;
    return out;
}

/// Writes an H x W x 3 tensor as a binary P6 pixmap, clamping to [0,1] and
/// quantizing to 8 bits. Round-trips an image read by image_to_tensor
/// byte-exactly.
inline void tensor_to_image(const Tensor3& x, const std::string& path) {
    const Dims d = x.dims();
    if (d.i3 != 3) throw dimension_error("image tensor must have exactly 3 frontal slices, got " + d.str());
    std::ofstream os = detail::open_out(path);
    os << "P6\n" << d.i2 << " " << d.i1 << "\n255\n";
    std::vector<unsigned char> raw(static_cast<std::size_t>(d.count()));
    std::size_t pos = 0;
    for (Index row = 0; row < d.i1; ++row)
        for (Index col = 0; col < d.i2; ++col)
            for (Index ch = 0; ch < 3; ++ch) {
                const double v = std::clamp(x(row, col, ch), 0.0, 1.0);
                raw[pos++] = static_cast<unsigned char>(std::lround(v * 255.0));
            }
    detail::put_bytes(os, raw.data(), raw.size());
    os.flush();
    if (!os) throw io_error("write failed: " + path);
}

}  // namespace lrtc

#endif  // LRTC_DATA_HPP
