#include <doctest.h>

#include <algorithm>

#include "support/eager_bins.hpp"
#include "support/gen.hpp"
#include "tiermem/hotness.hpp"

using namespace tiermem;

namespace {

constexpr Bytes kPage = 4 * KiB;

HotnessBins make(unsigned bins = 6) { return HotnessBins(Pid{1}, HotnessConfig{bins, kPage}); }

void sample_n(HotnessBins& h, PageId p, int n) {
    for (int i = 0; i < n; ++i) h.record_sample(p);
}

}  // namespace

TEST_CASE("bins are exponential with an open top bin") {
    const HotnessBins h = make(6);
    CHECK(h.classify(0) == 0);
    CHECK(h.classify(1) == 1);
    CHECK(h.classify(2) == 2);
    CHECK(h.classify(3) == 2);
    CHECK(h.classify(4) == 3);
    CHECK(h.classify(15) == 4);
    CHECK(h.classify(16) == 5);
    CHECK(h.classify(1'000'000) == 5);
    CHECK(h.cooling_threshold() == 32);
}

TEST_CASE("constructor validates the configuration") {
    CHECK_THROWS_AS(HotnessBins(Pid{1}, HotnessConfig{1, kPage}), std::invalid_argument);
    CHECK_THROWS_AS(HotnessBins(Pid{1}, HotnessConfig{33, kPage}), std::invalid_argument);
    CHECK_THROWS_AS(HotnessBins(Pid{1}, HotnessConfig{6, 0}), std::invalid_argument);
}

TEST_CASE("unknown pages are a logic error") {
    HotnessBins h = make();
    CHECK_THROWS_AS(h.record_sample(3), UnknownPageError);
    h.register_page(3, Tier::Slow);
    CHECK_NOTHROW(h.record_sample(3));
    CHECK_THROWS_AS(h.register_page(3, Tier::Fast), std::logic_error);
    h.unregister_page(3);
    CHECK_THROWS_AS(h.bin_of(3), UnknownPageError);
    CHECK(h.page_count() == 0);
}

TEST_CASE("reaching the threshold cools everyone else once per epoch") {
    HotnessBins h = make();
    h.register_page(0, Tier::Fast);
    h.register_page(1, Tier::Fast);
    sample_n(h, 1, 8);
    sample_n(h, 0, 31);
    CHECK(h.effective_count(1) == 8);
    const SampleResult r = h.record_sample(0);
    CHECK(r.triggered_cooling);
    CHECK(r.bin == 5);
    CHECK(h.effective_count(0) == 32);
    CHECK(h.effective_count(1) == 4);
    CHECK(h.cool_seq() == 1);

    // Same epoch: no second cooling, the page stays pinned at the top.
    sample_n(h, 1, 40);
    CHECK(h.record_sample(1).pinned);
    CHECK(h.cool_seq() == 1);
    CHECK(h.cool() == CoolResult::Suppressed);

    h.begin_epoch();
    CHECK(h.cool() == CoolResult::Cooled);
    CHECK(h.effective_count(0) == 16);
    CHECK(h.effective_count(1) == 22);
}

TEST_CASE("long-idle pages decay to zero") {
    HotnessBins h = make();
    h.register_page(0, Tier::Slow);
    sample_n(h, 0, 5);
    for (int e = 0; e < 40; ++e) {
        h.begin_epoch();
        h.cool();
    }
    CHECK(h.effective_count(0) == 0);
    CHECK(h.bin_of(0) == 0);
    CHECK(h.record(0).raw_count == 5);  // still lazy
    h.refresh_all();
    CHECK(h.record(0).raw_count == 0);
}

TEST_CASE("lazy counts equal an eager-halving oracle") {
    testgen::Gen g(21);
    for (unsigned bins : {2u, 3u, 6u, 8u}) {
        HotnessBins lazy = make(bins);
        oracle::EagerBins eager(bins);
        const PageId pages = 200;
        for (PageId p = 0; p < pages; ++p) {
            lazy.register_page(p, Tier::Slow);
            eager.add(p);
        }
        for (int op = 0; op < 20'000; ++op) {
            const auto roll = g.uint(0, 99);
            if (roll < 90) {
                // Skewed so a few pages hit the threshold.
                const PageId p = static_cast<PageId>(g.coin(0.5) ? g.uint(0, 9) : g.uint(0, pages - 1));
                lazy.record_sample(p);
                eager.sample(p);
                REQUIRE(lazy.effective_count(p) == eager.count(p));
            } else if (roll < 95) {
                lazy.cool();
                eager.cool();
            } else {
                lazy.begin_epoch();
                eager.begin_epoch();
            }
        }
        for (PageId p = 0; p < pages; ++p) {
            CHECK(lazy.effective_count(p) == eager.count(p));
            CHECK(lazy.bin_of(p) == eager.bin(p));
        }
    }
}

TEST_CASE("demotion victims are coldest first with LRU inside a bin") {
    HotnessBins h = make();
    for (PageId p = 0; p < 6; ++p) h.register_page(p, Tier::Fast);
    h.register_page(6, Tier::Slow);
    sample_n(h, 0, 4);  // bin 3
    sample_n(h, 1, 1);  // bin 1
    sample_n(h, 2, 1);  // bin 1
    sample_n(h, 3, 2);  // bin 2
    // 4 and 5 stay in bin 0; 6 is slow and never a demotion victim.
    const auto v = h.demotion_victims(100 * kPage);
    CHECK(v == std::vector<PageId>{4, 5, 1, 2, 3, 0});
    CHECK(h.demotion_victims(2 * kPage) == std::vector<PageId>{4, 5});
    CHECK(h.demotion_victims(kPage - 1).empty());
}

TEST_CASE("least recently sampled goes first within a bin") {
    HotnessBins h = make();
    h.register_page(1, Tier::Fast);
    h.register_page(5, Tier::Fast);
    h.register_page(9, Tier::Fast);
    sample_n(h, 5, 2);
    sample_n(h, 9, 32);  // cooling: page 5 drops to 1, page 9 stays hot
    h.begin_epoch();
    h.record_sample(1);
    CHECK(h.bin_of(1) == h.bin_of(5));
    CHECK(h.demotion_victims(2 * kPage) == std::vector<PageId>{5, 1});
}

TEST_CASE("equal recency falls back to page id") {
    HotnessBins h = make();
    for (PageId p : {4u, 2u, 3u}) h.register_page(p, Tier::Fast);
    for (PageId p : {4u, 2u, 3u}) h.record_sample(p);
    CHECK(h.demotion_victims(3 * kPage) == std::vector<PageId>{2, 3, 4});
}

TEST_CASE("promotion victims skip bin 0 and go hottest first") {
    HotnessBins h = make();
    for (PageId p = 0; p < 5; ++p) h.register_page(p, Tier::Slow);
    h.register_page(5, Tier::Fast);
    sample_n(h, 1, 3);
    sample_n(h, 2, 9);
    sample_n(h, 3, 1);
    sample_n(h, 5, 20);
    CHECK(h.promotion_victims(100 * kPage) == std::vector<PageId>{2, 1, 3});
}

TEST_CASE("victim lists for a larger budget extend the smaller ones") {
    testgen::Gen g(22);
    for (int round = 0; round < 30; ++round) {
        HotnessBins h = make();
        const PageId n = static_cast<PageId>(g.uint(1, 80));
        for (PageId p = 0; p < n; ++p) h.register_page(p, g.coin() ? Tier::Fast : Tier::Slow);
        for (int s = 0; s < 400; ++s) {
            h.record_sample(static_cast<PageId>(g.uint(0, n - 1)));
            if (g.coin(0.02)) h.begin_epoch();
        }
        const Bytes a = g.uint(0, n) * kPage;
        const Bytes b = g.uint(0, n) * kPage;
        for (bool hot : {false, true}) {
            const auto small = hot ? h.promotion_victims(a) : h.demotion_victims(a);
            const auto big = hot ? h.promotion_victims(a + b) : h.demotion_victims(a + b);
            REQUIRE(small.size() <= big.size());
            CHECK(std::equal(small.begin(), small.end(), big.begin()));
            CHECK(big.size() * kPage <= a + b);
        }
    }
}

TEST_CASE("tallies and dump") {
    HotnessBins h(Pid{7}, HotnessConfig{4, kPage});
    h.register_page(0, Tier::Fast);
    h.register_page(1, Tier::Slow);
    h.register_page(2, Tier::Slow);
    h.register_page(5, Tier::Fast);
    h.unregister_page(5);
    sample_n(h, 1, 2);
    sample_n(h, 2, 6);
    CHECK(h.tallies() == std::vector<std::uint64_t>{1, 0, 1, 1});
    CHECK(h.dump() ==
          "pid 7 pages 3 cool_seq 0\n"
          "bin 0 total 1 fast 1 slow 0\n"
          "bin 1 total 0 fast 0 slow 0\n"
          "bin 2 total 1 fast 0 slow 1\n"
          "bin 3 total 1 fast 0 slow 1\n");
}

TEST_CASE("set_tier moves a page between victim lists") {
    HotnessBins h = make();
    h.register_page(0, Tier::Slow);
    sample_n(h, 0, 3);
    CHECK(h.promotion_victims(kPage) == std::vector<PageId>{0});
    h.set_tier(0, Tier::Fast);
    CHECK(h.promotion_victims(kPage).empty());
    CHECK(h.demotion_victims(kPage) == std::vector<PageId>{0});
    CHECK(h.tier(0) == Tier::Fast);
}
