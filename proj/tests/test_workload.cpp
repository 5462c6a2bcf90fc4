#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "support/gen.hpp"
#include "tiermem/workload.hpp"

using namespace tiermem;

namespace {

constexpr Bytes kPage = 4 * KiB;

AccessPattern make(PatternVariant v, Bytes ws, std::uint64_t seed = 7) {
    AccessPattern p;
    p.variant = v;
    p.working_set = ws;
    p.seed = seed;
    return p;
}

}  // namespace

TEST_CASE("uniform over 4 pages is reproducible and stays in range") {
    const AccessPattern p = make(UniformPattern{}, 4 * kPage);
    std::mt19937_64 a(99), b(99);
    const auto first = next_accesses(p, kPage, a, 8);
    const auto second = next_accesses(p, kPage, b, 8);
    CHECK(first == second);
    CHECK(first.size() == 8);
    for (PageId id : first) CHECK(id < 4);
}

TEST_CASE("hot set at 90% lands in [0.88, 0.92] over 10^4 ops") {
    const AccessPattern p = make(HotSetPattern{2 * kPage, 0.9}, 64 * kPage);
    std::mt19937_64 rng(3);
    const auto ids = next_accesses(p, kPage, rng, 10'000);
    const auto hot = std::count_if(ids.begin(), ids.end(), [](PageId id) { return id < 2; });
    const double share = static_cast<double>(hot) / 10'000.0;
    CHECK(share >= 0.88);
    CHECK(share <= 0.92);
}

TEST_CASE("hot/warm/cold shares within 2% of 60/30/10 at 10^5 ops") {
    const AccessPattern p = make(HotWarmPattern{8 * kPage, 32 * kPage, 0.6, 0.3}, 128 * kPage);
    AccessGenerator gen(p, kPage, 11);
    std::array<double, 3> n{};
    gen.generate(100'000, [&](PageId id) { ++n[id < 8 ? 0 : id < 32 ? 1 : 2]; });
    CHECK(std::abs(n[0] / 1e5 - 0.6) <= 0.02);
    CHECK(std::abs(n[1] / 1e5 - 0.3) <= 0.02);
    CHECK(std::abs(n[2] / 1e5 - 0.1) <= 0.02);
}

TEST_CASE("page probabilities match the bands and sum to one") {
    const AccessPattern p = make(HotWarmPattern{2 * kPage, 6 * kPage, 0.6, 0.3}, 10 * kPage);
    const auto prob = page_probabilities(p, kPage);
    REQUIRE(prob.size() == 10);
    CHECK(prob[0] == doctest::Approx(0.3));
    CHECK(prob[3] == doctest::Approx(0.075));
    CHECK(prob[9] == doctest::Approx(0.025));
    CHECK(std::accumulate(prob.begin(), prob.end(), 0.0) == doctest::Approx(1.0));

    // The cold remainder is empty: its mass goes to the other bands.
    const auto full = page_probabilities(make(HotSetPattern{4 * kPage, 0.9}, 4 * kPage), kPage);
    CHECK(std::accumulate(full.begin(), full.end(), 0.0) == doctest::Approx(1.0));
    CHECK(full[0] == doctest::Approx(0.25));

    testgen::Gen g(5);
    for (int i = 0; i < 200; ++i) {
        const Bytes n = g.uint(1, 300);
        const Bytes w = g.uint(0, n);
        const Bytes h = g.uint(0, w);
        const double hf = g.real(0.0, 1.0);
        const double wf = g.real(0.0, 1.0 - hf);
        PatternVariant v = HotWarmPattern{h * kPage, w * kPage, hf, wf};
        if (g.coin(0.3)) v = ZipfPattern{g.real(0.0, 2.0)};
        if (g.coin(0.2)) v = HotSetPattern{h * kPage, hf};
        const auto pr = page_probabilities(make(v, n * kPage), kPage);
        CHECK(pr.size() == n);
        CHECK(std::accumulate(pr.begin(), pr.end(), 0.0) == doctest::Approx(1.0));
        CHECK(std::all_of(pr.begin(), pr.end(), [](double x) { return x >= 0.0; }));
    }
}

TEST_CASE("zipf favours low pages") {
    const AccessPattern p = make(ZipfPattern{1.0}, 100 * kPage);
    const auto prob = page_probabilities(p, kPage);
    for (std::size_t i = 1; i < prob.size(); ++i) CHECK(prob[i] < prob[i - 1]);
    CHECK(prob[0] / prob[1] == doctest::Approx(2.0));
    AccessGenerator gen(p, kPage, 1);
    for (PageId id : gen.next(1000)) CHECK(id < 100);
}

TEST_CASE("resizing the hot set moves the band boundary") {
    AccessGenerator gen(make(HotSetPattern{2 * kPage, 0.9}, 16 * kPage), kPage, 1);
    gen.resize_hot_set(4 * kPage);
    CHECK(gen.probabilities()[3] == doctest::Approx(0.9 / 4));
    CHECK(gen.probabilities()[4] == doctest::Approx(0.1 / 12));
    CHECK_THROWS_AS(gen.resize_hot_set(17 * kPage), std::invalid_argument);

    AccessGenerator hw(make(HotWarmPattern{2 * kPage, 4 * kPage, 0.6, 0.3}, 16 * kPage), kPage, 1);
    hw.resize_hot_set(6 * kPage);
    const auto& v = std::get<HotWarmPattern>(hw.pattern().variant);
    CHECK(v.warm_bytes == 6 * kPage);

    AccessGenerator uni(make(UniformPattern{}, 16 * kPage), kPage, 1);
    CHECK_THROWS_AS(uni.resize_hot_set(kPage), std::invalid_argument);
}

TEST_CASE("streams depend only on the seed") {
    const AccessPattern p = make(HotSetPattern{4 * kPage, 0.8}, 64 * kPage);
    AccessGenerator a(p, kPage, 42), b(p, kPage, 42), c(p, kPage, 43);
    const auto x = a.next(500);
    CHECK(x == b.next(500));
    CHECK(x != c.next(500));
}

TEST_CASE("invalid patterns are rejected") {
    CHECK_THROWS_AS(make(UniformPattern{}, 0).validate(), std::invalid_argument);
    CHECK_THROWS_AS(make(HotSetPattern{5 * kPage, 0.9}, 4 * kPage).validate(), std::invalid_argument);
    CHECK_THROWS_AS(make(HotSetPattern{kPage, 1.5}, 4 * kPage).validate(), std::invalid_argument);
    CHECK_THROWS_AS(make(HotWarmPattern{3 * kPage, 2 * kPage, 0.6, 0.3}, 4 * kPage).validate(),
                    std::invalid_argument);
    CHECK_THROWS_AS(make(HotWarmPattern{kPage, 2 * kPage, 0.7, 0.4}, 4 * kPage).validate(), std::invalid_argument);
    CHECK_THROWS_AS(make(ZipfPattern{-1.0}, 4 * kPage).validate(), std::invalid_argument);
    CHECK_THROWS_AS(AccessGenerator(make(UniformPattern{}, 4 * kPage), 0, 1), std::invalid_argument);
}
