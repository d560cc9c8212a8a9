#include <gtest/gtest.h>

#include <deque>

#include "support.hpp"

using namespace paxray;
using namespace testing_support;

namespace {

/// Breadth-first flood fill; ids assigned in order of each component's first element.
template <std::size_t Dim>
std::vector<int> flood_fill(const Mask<Dim>& m, bool full) {
    std::vector<int> ids(m.size(), 0);
    int next = 0;
    for (std::size_t seed = 0; seed < m.size(); ++seed) {
        if (!m[seed] || ids[seed]) continue;
        ids[seed] = ++next;
        std::deque<std::size_t> q{seed};
        while (!q.empty()) {
            const auto c = unravel<Dim>(m.shape, q.front());
            q.pop_front();
            const int combos = Dim == 3 ? 27 : 9;
            for (int k = 0; k < combos; ++k) {
                std::array<int, Dim> d{};
                int r = k, nonzero = 0;
                for (std::size_t a = 0; a < Dim; ++a) {
                    d[a] = r % 3 - 1;
                    r /= 3;
                    nonzero += d[a] != 0;
                }
                if (nonzero == 0 || (!full && nonzero != 1)) continue;
                std::size_t j = 0;
                bool inside = true;
                for (std::size_t a = 0; a < Dim; ++a) {
                    const int v = c[a] + d[a];
                    if (v < 0 || v >= m.shape[a]) inside = false;
                    j = j * static_cast<std::size_t>(m.shape[a]) + static_cast<std::size_t>(v);
                }
                if (inside && m[j] && !ids[j]) {
                    ids[j] = next;
                    q.push_back(j);
                }
            }
        }
    }
    return ids;
}

/// Direct window scan; erosion treats out-of-grid elements as set.
template <std::size_t Dim>
Mask<Dim> window_filter(const Mask<Dim>& m, int r, bool dilate) {
    Mask<Dim> out(m.shape);
    for (std::size_t i = 0; i < m.size(); ++i) {
        const auto c = unravel<Dim>(m.shape, i);
        bool any = false, all = true;
        std::array<int, Dim> d;
        d.fill(-r);
        while (true) {
            bool inside = true;
            std::size_t j = 0;
            for (std::size_t a = 0; a < Dim; ++a) {
                const int v = c[a] + d[a];
                if (v < 0 || v >= m.shape[a]) inside = false;
                j = j * static_cast<std::size_t>(m.shape[a]) + static_cast<std::size_t>(v);
            }
            if (inside) {
                any = any || m[j];
                all = all && m[j];
            }
            std::size_t a = 0;
            while (a < Dim && ++d[a] > r) d[a++] = -r;
            if (a == Dim) break;
        }
        out.bits[i] = dilate ? any : all;
    }
    return out;
}

/// Otsu by the textbook definition: maximise w0 w1 (mu0 - mu1)^2 over edges.
double otsu_reference(const morph::Histogram& h) {
    double best = -1;
    double best_edge = 0;
    for (std::size_t t = 1; t < h.counts.size(); ++t) {
        double w0 = 0, w1 = 0, m0 = 0, m1 = 0;
        for (std::size_t i = 0; i < h.counts.size(); ++i) {
            const double c = 0.5 * (h.bin_edges[i] + h.bin_edges[i + 1]);
            (i < t ? w0 : w1) += static_cast<double>(h.counts[i]);
            (i < t ? m0 : m1) += c * static_cast<double>(h.counts[i]);
        }
        if (w0 == 0 || w1 == 0) continue;
        const double total = w0 + w1;
        const double score = (w0 / total) * (w1 / total) * std::pow(m0 / w0 - m1 / w1, 2);
        if (score > best * (1 + 1e-9)) {
            best = score;
            best_edge = h.bin_edges[t];
        }
    }
    return best_edge;
}

}  // namespace

// ---------------------------------------------------------------------------
// Components
// ---------------------------------------------------------------------------

TEST(Components, MatchFloodFillOracle3D) {
    Rng rng(1);
    for (int trial = 0; trial < 60; ++trial) {
        const Extent<3> s{rng.integer(1, 7), rng.integer(1, 7), rng.integer(1, 7)};
        const auto m = random_mask<3>(s, rng.uniform(0.1, 0.7), rng);
        for (int conn : {6, 26}) {
            const auto cc = morph::connected_components(m, conn);
            const auto ref = flood_fill(m, conn == 26);
            ASSERT_EQ(std::vector<int>(cc.ids.begin(), cc.ids.end()), ref) << "conn " << conn;
            EXPECT_EQ(cc.count, ref.empty() ? 0 : *std::max_element(ref.begin(), ref.end()));
        }
    }
}

TEST(Components, MatchFloodFillOracle2D) {
    Rng rng(2);
    for (int trial = 0; trial < 100; ++trial) {
        const Extent<2> s{rng.integer(1, 12), rng.integer(1, 12)};
        const auto m = random_mask<2>(s, rng.uniform(0.1, 0.7), rng);
        for (int conn : {4, 8}) {
            const auto cc = morph::connected_components(m, conn);
            ASSERT_EQ(std::vector<int>(cc.ids.begin(), cc.ids.end()), flood_fill(m, conn == 8));
            std::size_t total = 0;
            for (auto n : cc.sizes) total += n;
            EXPECT_EQ(total, m.count());
        }
    }
}

TEST(Components, DiagonalPairDependsOnConnectivity) {
    Mask3D m({2, 2, 2});
    m.bits[offset(m.shape, 0, 0, 0)] = 1;
    m.bits[offset(m.shape, 1, 1, 1)] = 1;
    EXPECT_EQ(morph::connected_components(m, 6).count, 2);
    EXPECT_EQ(morph::connected_components(m, 26).count, 1);
}

TEST(Components, InvalidConnectivity) {
    Mask3D m({2, 2, 2});
    try {
        (void)morph::connected_components(m, 8);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.qualified(), "morph.InvalidConnectivity");
    }
}

TEST(Components, LargestComponentKeepsFirstOfEqualSizes) {
    Mask2D m({1, 7});
    m.bits = {1, 1, 0, 1, 1, 0, 1};
    Mask2D expect({1, 7});
    expect.bits = {1, 1, 0, 0, 0, 0, 0};
    EXPECT_EQ(morph::largest_component(m), expect);
    try {
        (void)morph::largest_component(Mask2D({3, 3}));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.qualified(), "morph.EmptyMask");
    }
}

TEST(Components, LargestIsSubsetAndConnected) {
    Rng rng(4);
    for (int trial = 0; trial < 40; ++trial) {
        const auto m = random_mask<3>({6, 6, 6}, 0.4, rng);
        if (m.empty()) continue;
        const auto l = morph::largest_component(m);
        EXPECT_TRUE(is_subset(l, m));
        EXPECT_EQ(morph::connected_components(l, 6).count, 1);
        const auto cc = morph::connected_components(m, 6);
        EXPECT_EQ(l.count(), *std::max_element(cc.sizes.begin(), cc.sizes.end()));
    }
}

TEST(Components, RemoveSmallKeepsOnlyLargeEnough) {
    Rng rng(6);
    for (int trial = 0; trial < 40; ++trial) {
        const auto m = random_mask<2>({10, 10}, 0.35, rng);
        const std::size_t min_size = static_cast<std::size_t>(rng.integer(0, 6));
        const auto out = morph::remove_small_components(m, min_size, 8);
        const auto ref = flood_fill(m, true);
        std::map<int, std::size_t> size;
        for (int id : ref) if (id) ++size[id];
        for (std::size_t i = 0; i < m.size(); ++i)
            EXPECT_EQ(out[i], ref[i] != 0 && size[ref[i]] >= min_size);
    }
}

// ---------------------------------------------------------------------------
// Morphology
// ---------------------------------------------------------------------------

TEST(Morphology, MatchesWindowScan) {
    Rng rng(7);
    for (int trial = 0; trial < 40; ++trial) {
        const Extent<3> s{rng.integer(1, 6), rng.integer(1, 6), rng.integer(1, 6)};
        const auto m = random_mask<3>(s, rng.uniform(0.2, 0.8), rng);
        const int r = rng.integer(1, 2);
        EXPECT_EQ(morph::dilate(m, r), window_filter(m, r, true));
        EXPECT_EQ(morph::erode(m, r), window_filter(m, r, false));
        const auto m2 = random_mask<2>({rng.integer(1, 9), rng.integer(1, 9)}, 0.5, rng);
        EXPECT_EQ(morph::dilate(m2, r), window_filter(m2, r, true));
        EXPECT_EQ(morph::erode(m2, r), window_filter(m2, r, false));
    }
}

TEST(Morphology, ClosingExtensiveIdempotentOpeningAntiExtensive) {
    Rng rng(8);
    for (int trial = 0; trial < 40; ++trial) {
        const auto m = random_mask<3>({6, 7, 5}, rng.uniform(0.2, 0.8), rng);
        const int r = rng.integer(1, 2);
        const auto closed = morph::binary_close(m, r);
        const auto opened = morph::binary_open(m, r);
        EXPECT_TRUE(is_subset(m, closed));
        EXPECT_TRUE(is_subset(opened, m));
        EXPECT_EQ(morph::binary_close(closed, r), closed);
        EXPECT_EQ(morph::binary_open(opened, r), opened);
    }
}

TEST(Morphology, ZeroRadiusIsIdentity) {
    Rng rng(10);
    const auto m = random_mask<2>({5, 5}, 0.5, rng);
    EXPECT_EQ(morph::binary_close(m, 0), m);
    EXPECT_EQ(morph::binary_open(m, 0), m);
}

TEST(Morphology, ClosingFillsOneVoxelGap) {
    Mask2D m({1, 5});
    m.bits = {1, 1, 0, 1, 1};
    Mask2D full({1, 5});
    full.bits = {1, 1, 1, 1, 1};
    EXPECT_EQ(morph::binary_close(m, 1), full);
}

// ---------------------------------------------------------------------------
// Otsu
// ---------------------------------------------------------------------------

TEST(Otsu, BimodalSplitsBetweenModes) {
    std::vector<double> values;
    for (int i = 0; i < 100; ++i) values.push_back(0);
    for (int i = 0; i < 50; ++i) values.push_back(700);
    const auto h = morph::integer_histogram(values, -1024, 3072);
    const double t = morph::otsu_threshold(h);
    EXPECT_GT(t, 0);
    EXPECT_LE(t, 700);
}

TEST(Otsu, MatchesTextbookOracle) {
    Rng rng(12);
    for (int trial = 0; trial < 300; ++trial) {
        morph::Histogram h;
        const int bins = rng.integer(2, 40);
        double edge = rng.uniform(-10, 10);
        for (int i = 0; i <= bins; ++i) {
            h.bin_edges.push_back(edge);
            edge += rng.uniform(0.1, 3);
        }
        for (int i = 0; i < bins; ++i) h.counts.push_back(rng.chance(0.3) ? 0 : static_cast<std::uint64_t>(rng.integer(1, 1000)));
        if (std::count_if(h.counts.begin(), h.counts.end(), [](auto c) { return c > 0; }) < 2) continue;
        EXPECT_DOUBLE_EQ(morph::otsu_threshold(h), otsu_reference(h)) << "trial " << trial;
    }
}

TEST(Otsu, SymmetricTieGoesToLowestEdge) {
    morph::Histogram h{{0, 1, 2, 3, 4}, {5, 0, 0, 5}};
    EXPECT_EQ(morph::otsu_threshold(h), 1.0);
}

TEST(Otsu, DegenerateAndInvalidInputs) {
    auto code = [](const morph::Histogram& h) {
        try {
            (void)morph::otsu_threshold(h);
        } catch (const Error& e) {
            return e.qualified();
        }
        return std::string();
    };
    EXPECT_EQ(code({{0, 1, 2}, {0, 9}}), "morph.DegenerateHistogram");
    EXPECT_EQ(code({{0, 1}, {3}}), "morph.DegenerateHistogram");
    EXPECT_EQ(code({{0, 1, 1}, {1, 1}}), "morph.InvalidHistogram");
    EXPECT_EQ(code({{0, 1}, {1, 1}}), "morph.InvalidHistogram");
}
