#include <cmath>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "textcascade/simd/kernels.hpp"

using namespace textcascade;
namespace simd = textcascade::simd;

namespace {

std::vector<const simd::KernelTable*> vector_tables() {
    std::vector<const simd::KernelTable*> out;
    if (simd::level_supported(simd::Level::avx2)) out.push_back(simd::avx2_table());
    if (simd::level_supported(simd::Level::neon)) out.push_back(simd::neon_table());
    return out;
}

bool close(double a, double b) { return std::abs(a - b) <= 1e-12 * (1.0 + std::abs(a) + std::abs(b)); }

}  // namespace

TEST_SUITE("simd") {

TEST_CASE("scalar dot and axpy on small inputs") {
    const auto& k = simd::scalar_table();
    const double a[] = {1, 2, 3};
    const double b[] = {4, -5, 6};
    CHECK(k.dot(a, b, 3) == 12.0);
    double y[] = {1, 1, 1};
    k.axpy(2.0, a, y, 3);
    CHECK(y[0] == 3.0);
    CHECK(y[2] == 7.0);
    const double rows[] = {1, 0, 0, 1, 1, 1};
    const double scale[] = {1.0, 2.0, 0.5};
    const double x[] = {3, 1};
    CHECK(k.max_scaled_dot(rows, scale, 3, x, 2) == 3.0);
}

TEST_CASE("vector kernels agree with the scalar reference") {
    Rng rng(7);
    const auto& ref = simd::scalar_table();
    for (const auto* k : vector_tables()) {
        for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 8u, 17u, 50u, 100u, 101u}) {
            const auto a = fixtures::random_vector(rng, n);
            const auto b = fixtures::random_vector(rng, n);
            CHECK(close(k->dot(a.data(), b.data(), n), ref.dot(a.data(), b.data(), n)));

            auto y1 = fixtures::random_vector(rng, n);
            auto y2 = y1;
            k->axpy(0.37, a.data(), y1.data(), n);
            ref.axpy(0.37, a.data(), y2.data(), n);
            for (std::size_t i = 0; i < n; ++i) CHECK(close(y1[i], y2[i]));

            for (std::size_t rows : {1u, 2u, 9u}) {
                const auto block = fixtures::random_vector(rng, rows * n);
                auto scale = fixtures::random_vector(rng, rows);
                for (auto& s : scale) s = std::abs(s);
                CHECK(close(k->max_scaled_dot(block.data(), scale.data(), rows, a.data(), n),
                            ref.max_scaled_dot(block.data(), scale.data(), rows, a.data(), n)));
            }
        }
    }
}

TEST_CASE("level selection round trips") {
    const auto before = simd::active_level();
    CHECK(simd::level_supported(simd::Level::scalar));
    simd::set_level(simd::Level::scalar);
    CHECK(simd::active_level() == simd::Level::scalar);
    CHECK(simd::parse_level(simd::level_name(simd::Level::avx2)) == simd::Level::avx2);
    CHECK(simd::parse_level("auto") == simd::detected_level());
    CHECK_THROWS(simd::parse_level("sse9"));
    simd::set_level(before);
}

TEST_CASE("composed front ends match naive loops at every level") {
    Rng rng(11);
    const std::size_t r = 5, c = 13;
    const auto m = fixtures::random_vector(rng, r * c);
    const auto x = fixtures::random_vector(rng, c);
    const auto xr = fixtures::random_vector(rng, r);
    const auto before = simd::active_level();
    for (auto level : {simd::Level::scalar, simd::Level::avx2, simd::Level::neon}) {
        if (!simd::level_supported(level)) continue;
        simd::set_level(level);
        std::vector<double> out(r);
        simd::matvec(m, x, out);
        for (std::size_t i = 0; i < r; ++i) {
            double ref = 0.0;
            for (std::size_t j = 0; j < c; ++j) ref += m[i * c + j] * x[j];
            CHECK(close(out[i], ref));
        }
        std::vector<double> acc(c, 1.0);
        simd::matvec_transposed_add(m, xr, acc);
        for (std::size_t j = 0; j < c; ++j) {
            double ref = 1.0;
            for (std::size_t i = 0; i < r; ++i) ref += m[i * c + j] * xr[i];
            CHECK(close(acc[j], ref));
        }
        auto upd = m;
        simd::rank1_update(upd, -0.5, xr, x);
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) CHECK(close(upd[i * c + j], m[i * c + j] - 0.5 * xr[i] * x[j]));
        CHECK(simd::max_scaled_dot({}, {}, x) == 0.0);
    }
    simd::set_level(before);
}

}
