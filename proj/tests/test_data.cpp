#include <catch2/catch.hpp>

#include <cstdio>
#include <unistd.h>
#include <filesystem>
#include <fstream>
#include <string>

#include "lrtc/data.hpp"

using namespace lrtc;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("lrtc_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

}  // namespace

TEST_CASE("gen_lowrank") {
    SECTION("same seed reproduces the tensor bitwise") {
        Tensor3 a = gen_lowrank({7, 6, 3}, 2, RngSeed{42});
        Tensor3 b = gen_lowrank({7, 6, 3}, 2, RngSeed{42});
        REQUIRE(a == b);
    }
    SECTION("different seeds differ") {
        Tensor3 a = gen_lowrank({7, 6, 3}, 2, RngSeed{42});
        Tensor3 b = gen_lowrank({7, 6, 3}, 2, RngSeed{43});
        REQUIRE_FALSE(a == b);
    }
    SECTION("tubal rank is r") {
        Tensor3 x = gen_lowrank({20, 20, 5}, 3, RngSeed{1});
        REQUIRE(tubal_rank(tsvd(x)) == 3);
    }
    SECTION("full rank when r = min(I1, I2)") {
        Tensor3 x = gen_lowrank({6, 8, 2}, 6, RngSeed{2});
        REQUIRE(tubal_rank(tsvd(x)) == 6);
    }
    SECTION("invalid rank") {
        REQUIRE_THROWS_AS(gen_lowrank({4, 4, 2}, 0, RngSeed{3}), std::invalid_argument);
        REQUIRE_THROWS_AS(gen_lowrank({4, 4, 2}, 5, RngSeed{3}), std::invalid_argument);
    }
}

TEST_CASE("gen_mask") {
    SECTION("sr = 1 observes everything") {
        SamplingMask m = gen_mask({4, 5, 3}, 1.0, RngSeed{4});
        REQUIRE(m.count() == 60);
        REQUIRE(m.sampling_rate() == 1.0);
    }
    SECTION("cardinality is exactly round(sr * N)") {
        SamplingMask m = gen_mask({100, 100, 20}, 0.2, RngSeed{5});
        REQUIRE(m.count() == 40000);
    }
    SECTION("different seeds give different masks") {
        SamplingMask a = gen_mask({10, 10, 2}, 0.3, RngSeed{6});
        SamplingMask b = gen_mask({10, 10, 2}, 0.3, RngSeed{7});
        REQUIRE(a.observed() != b.observed());
    }
    SECTION("sampling rate out of range") {
        REQUIRE_THROWS_AS(gen_mask({2, 2, 2}, 0.0, RngSeed{8}), std::invalid_argument);
        REQUIRE_THROWS_AS(gen_mask({2, 2, 2}, 1.5, RngSeed{8}), std::invalid_argument);
    }
    SECTION("per-slice counts stay within 5 sigma of the binomial expectation") {
        const Dims d{50, 50, 20};
        const double sr = 0.3;
        SamplingMask m = gen_mask(d, sr, RngSeed{9});
        const double per_slice = static_cast<double>(d.i1 * d.i2);
        const double expect = sr * per_slice;
        const double sigma = std::sqrt(per_slice * sr * (1.0 - sr));
        std::vector<int> counts(20, 0);
        for (std::uint64_t idx : m.observed()) counts[idx / (50 * 50)]++;
        for (int c : counts) REQUIRE(std::abs(c - expect) <= 5.0 * sigma);
    }
}

TEST_CASE("projection") {
    const Dims d{6, 5, 4};
    Tensor3 x = gen_gaussian(d, RngSeed{10});
    SamplingMask m = gen_mask(d, 0.4, RngSeed{11});
    SECTION("full mask is the identity") {
        SamplingMask full = gen_mask(d, 1.0, RngSeed{12});
        REQUIRE(full.project(x) == x);
    }
    SECTION("projection is idempotent") {
        REQUIRE(m.project(m.project(x)) == m.project(x));
    }
    SECTION("complement partitions the tensor") {
        Tensor3 a = m.project(x);
        Tensor3 b = m.project_complement(x);
        for (Index i = 0; i < x.size(); ++i)
            REQUIRE(a.data()[i] + b.data()[i] == x.data()[i]);
        const double na = a.frobenius_norm(), nb = b.frobenius_norm(), nx = x.frobenius_norm();
        REQUIRE(na * na + nb * nb == Approx(nx * nx));
    }
    SECTION("dimension mismatch") {
        REQUIRE_THROWS_AS(m.project(Tensor3(2, 2, 2)), dimension_error);
    }
    SECTION("mask construction rejects bad index sets") {
        REQUIRE_THROWS_AS(SamplingMask(d, {0, 0}), std::invalid_argument);
        REQUIRE_THROWS_AS(SamplingMask(d, {static_cast<std::uint64_t>(d.count())}),
                          std::invalid_argument);
        REQUIRE_THROWS_AS(SamplingMask(d, {}), std::invalid_argument);
    }
}

TEST_CASE("tensor file round trip") {
    TempDir dir;
    const std::string path = dir.file("x.tns");
    Tensor3 x = gen_gaussian({7, 5, 3}, RngSeed{13});
    write_tensor(path, x);
    REQUIRE(read_tensor(path) == x);

    SECTION("truncated payload is rejected") {
        std::filesystem::resize_file(path, std::filesystem::file_size(path) - 9);
        REQUIRE_THROWS_AS(read_tensor(path), io_error);
    }
    SECTION("trailing bytes are rejected") {
        std::ofstream os(path, std::ios::binary | std::ios::app);
        os.write("xx", 2);
        os.close();
        REQUIRE_THROWS_AS(read_tensor(path), io_error);
    }
    SECTION("bad magic is rejected") {
        std::ofstream os(path, std::ios::binary | std::ios::trunc);
        os.write("BOGUS!", 6);
        os.close();
        REQUIRE_THROWS_AS(read_tensor(path), io_error);
    }
    SECTION("missing file is an io_error") {
        REQUIRE_THROWS_AS(read_tensor(dir.file("missing.tns")), io_error);
    }
}

TEST_CASE("mask file round trip") {
    TempDir dir;
    const std::string path = dir.file("m.msk");
    SamplingMask m = gen_mask({6, 4, 5}, 0.35, RngSeed{14});
    write_mask(path, m);
    SamplingMask back = read_mask(path);
    REQUIRE(back.dims() == m.dims());
    REQUIRE(back.observed() == m.observed());

    SECTION("out-of-range index is rejected") {
        // dims 2x2x2 = 8 entries, index 8 out of range
        std::ofstream os(path, std::ios::binary | std::ios::trunc);
        os.write("MSK3", 4);
        const unsigned char v[4] = {1, 0, 0, 0};
        os.write(reinterpret_cast<const char*>(v), 4);
        auto put64 = [&](std::uint64_t u) {
            unsigned char b[8];
            for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(u >> (8 * i));
            os.write(reinterpret_cast<const char*>(b), 8);
        };
        put64(2);
        put64(2);
        put64(2);
        put64(1);
        put64(8);
        os.close();
        REQUIRE_THROWS_AS(read_mask(path), io_error);
    }
    SECTION("duplicate (non-increasing) indices are rejected") {
        std::ofstream os(path, std::ios::binary | std::ios::trunc);
        os.write("MSK3", 4);
        const unsigned char v[4] = {1, 0, 0, 0};
        os.write(reinterpret_cast<const char*>(v), 4);
        auto put64 = [&](std::uint64_t u) {
            unsigned char b[8];
            for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(u >> (8 * i));
            os.write(reinterpret_cast<const char*>(b), 8);
        };
        put64(2);
        put64(2);
        put64(2);
        put64(2);
        put64(3);
        put64(3);
        os.close();
        REQUIRE_THROWS_AS(read_mask(path), io_error);
    }
}

TEST_CASE("portable pixmap ingestion") {
    TempDir dir;
    SECTION("all-white 2x2 image becomes a tensor of ones") {
        const std::string path = dir.file("white.ppm");
        std::ofstream os(path, std::ios::binary);
        os << "P6\n2 2\n255\n";
        for (int i = 0; i < 12; ++i) os.put(static_cast<char>(255));
        os.close();
        Tensor3 t = image_to_tensor(path);
        REQUIRE(t.dims() == Dims{2, 2, 3});
        for (Index i = 0; i < t.size(); ++i) REQUIRE(t.data()[i] == 1.0);
    }
    SECTION("red channel scaling convention") {
        const std::string path = dir.file("px.ppm");
        std::ofstream os(path, std::ios::binary);
        os << "P6\n1 1\n255\n";
        os.put(static_cast<char>(128));
        os.put(static_cast<char>(0));
        os.put(static_cast<char>(0));
        os.close();
        Tensor3 t = image_to_tensor(path);
        REQUIRE(t(0, 0, 0) == Approx(128.0 / 255.0));
        REQUIRE(t(0, 0, 1) == 0.0);
        REQUIRE(t(0, 0, 2) == 0.0);
    }
    SECTION("quantized round trip is byte-exact") {
        const std::string path = dir.file("rand.ppm");
        std::ofstream os(path, std::ios::binary);
        os << "P6\n5 4\n255\n";
        Rng rng(RngSeed{15});
        for (int i = 0; i < 5 * 4 * 3; ++i) os.put(static_cast<char>(rng.below(256)));
        os.close();
        Tensor3 t = image_to_tensor(path);
        const std::string out = dir.file("rand_out.ppm");
        tensor_to_image(t, out);
        std::ifstream a(path, std::ios::binary), b(out, std::ios::binary);
        std::string sa((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
        std::string sb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
        REQUIRE(sa == sb);
    }
    SECTION("comments in the header are skipped") {
        const std::string path = dir.file("comment.ppm");
        std::ofstream os(path, std::ios::binary);
        os << "P6\n# a comment\n1 1\n# another\n255\n";
        os.put(static_cast<char>(7));
        os.put(static_cast<char>(8));
        os.put(static_cast<char>(9));
        os.close();
        Tensor3 t = image_to_tensor(path);
        REQUIRE(t(0, 0, 2) == Approx(9.0 / 255.0));
    }
    SECTION("unsupported formats are rejected") {
        const std::string path = dir.file("bad.ppm");
        std::ofstream os(path, std::ios::binary);
        os << "P5\n1 1\n255\n";
        os.put(static_cast<char>(1));
        os.close();
        REQUIRE_THROWS_AS(image_to_tensor(path), io_error);

        const std::string path16 = dir.file("deep.ppm");
        std::ofstream os2(path16, std::ios::binary);
        os2 << "P6\n1 1\n65535\n";
        os2.close();
        REQUIRE_THROWS_AS(image_to_tensor(path16), io_error);
    }
    SECTION("writing a non-RGB tensor is rejected") {
        REQUIRE_THROWS_AS(tensor_to_image(Tensor3(2, 2, 2), dir.file("no.ppm")), dimension_error);
    }
}

TEST_CASE("rng stream semantics") {
    Rng a(RngSeed{123});
    Rng b(RngSeed{123});
    for (int i = 0; i < 100; ++i) REQUIRE(a.normal() == b.normal());
    // derive_seed separates streams
    REQUIRE(derive_seed(RngSeed{123}, 0).value != derive_seed(RngSeed{123}, 1).value);
    // bounded draws stay in range
    Rng c(RngSeed{9});
    for (int i = 0; i < 1000; ++i) REQUIRE(c.below(17) < 17);
}
