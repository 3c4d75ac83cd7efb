#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "poolsight/geometry.hpp"
#include "poolsight/rng.hpp"

using namespace poolsight;

namespace {

Polygon unit_square() {
    return Polygon{{{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0, 0}}, {}};
}

Polygon square(double cx, double cy, double side) {
    const double h = side / 2.0;
    return Polygon{{{cx - h, cy - h}, {cx + h, cy - h}, {cx + h, cy + h}, {cx - h, cy + h},
                    {cx - h, cy - h}},
                   {}};
}

Polygon translated(const Polygon& p, double dx, double dy) {
    Polygon out = p;
    for (auto& v : out.outer) { v.x += dx; v.y += dy; }
    for (auto& h : out.holes) {
        for (auto& v : h) { v.x += dx; v.y += dy; }
    }
    return out;
}

}  // namespace

TEST_CASE("polygon_area basics") {
    CHECK(polygon_area(unit_square()) == doctest::Approx(1.0).epsilon(1e-12));

    Polygon with_hole = unit_square();
    // 0.5 x 0.5 hole centered in the square, clockwise.
    with_hole.holes.push_back({{0.25, 0.25}, {0.25, 0.75}, {0.75, 0.75}, {0.75, 0.25}, {0.25, 0.25}});
    CHECK(polygon_area(with_hole) == doctest::Approx(0.75).epsilon(1e-12));

    const double r = 37.5;
    Buffer buf({10.0, -3.0}, r);
    const double expected = 32.0 * r * r * std::sin(2.0 * std::numbers::pi / 64.0);
    CHECK(polygon_area(buf.ring()) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(buf.area() == doctest::Approx(expected).epsilon(1e-12));

    Polygon degenerate{{{0, 0}, {1, 0}, {2, 0}, {0, 0}}, {}};
    CHECK_THROWS_AS(polygon_area(degenerate), InvalidGeometryError);
}

TEST_CASE("buffer ring invariants") {
    Buffer buf({123.0, 456.0}, 350.0);
    const auto& ring = buf.ring().outer;
    REQUIRE(ring.size() == 65);
    for (const auto& v : ring) {
        CHECK(distance(v, buf.center()) == doctest::Approx(350.0).epsilon(1e-9));
    }
    // Convexity: every consecutive turn is a left turn.
    for (size_t i = 0; i + 2 < ring.size(); ++i) {
        const double c = (ring[i + 1].x - ring[i].x) * (ring[i + 2].y - ring[i].y) -
                         (ring[i + 1].y - ring[i].y) * (ring[i + 2].x - ring[i].x);
        CHECK(c > 0.0);
    }
    // 64-gon area within 0.17% of the disc.
    const double disc = std::numbers::pi * 350.0 * 350.0;
    CHECK(std::abs(buf.area() - disc) / disc < 0.0017);
}

TEST_CASE("intersection_area containment and disjoint cases") {
    Buffer buf({0.0, 0.0}, 100.0);
    Polygon inside = square(10.0, -5.0, 20.0);
    CHECK(intersection_area(inside, buf) == doctest::Approx(polygon_area(inside)).epsilon(1e-12));

    Polygon outside = square(500.0, 500.0, 20.0);
    CHECK(intersection_area(outside, buf) == doctest::Approx(0.0));
}

TEST_CASE("intersection_area: square bisected by a buffer edge line") {
    // A square centered on the supporting line of one 64-gon edge, small
    // enough that no other edge reaches it, is split exactly in half
    // (any line through the center of a centrally symmetric set bisects it).
    const double r = 1000.0;
    Buffer buf({0.0, 0.0}, r);
    const auto& ring = buf.ring().outer;
    const Point mid{(ring[0].x + ring[1].x) / 2.0, (ring[0].y + ring[1].y) / 2.0};
    Polygon subj = square(mid.x, mid.y, 10.0);
    const double got = intersection_area(subj, buf);
    CHECK(got == doctest::Approx(50.0).epsilon(1e-6));

    auto mc = oracle::mc_intersection_area(subj, buf, 10'000'000, 20260810);
    CHECK(std::abs(got - mc.estimate) <= 3.0 * mc.standard_error);
}

TEST_CASE("intersection_area with holes against Monte-Carlo oracle") {
    Rng rng(991);
    Buffer buf({0.0, 0.0}, 80.0);
    Polygon subj = oracle::random_star_polygon(rng, {30.0, 10.0}, 40.0, 90.0, 9);
    subj.holes.push_back({{20, 0}, {20, 20}, {40, 20}, {40, 0}, {20, 0}});  // clockwise hole
    const double got = intersection_area(subj, buf);
    auto mc = oracle::mc_intersection_area(subj, buf, 2'000'000, 7);
    CHECK(std::abs(got - mc.estimate) <= 3.0 * mc.standard_error);
}

TEST_CASE("intersection_area monotonicity on random cases") {
    Rng rng(4242);
    for (int i = 0; i < 50; ++i) {
        const Point c{rng.uniform(-50, 50), rng.uniform(-50, 50)};
        Buffer buf(c, rng.uniform(10.0, 120.0));
        Polygon subj = oracle::random_star_polygon(
            rng, {rng.uniform(-80, 80), rng.uniform(-80, 80)}, 5.0, 100.0, 3 + (i % 9));
        const double inter = intersection_area(subj, buf);
        CHECK(inter >= 0.0);
        CHECK(inter <= std::min(polygon_area(subj), buf.area()) * (1.0 + 1e-9) + 1e-9);
    }
}

TEST_CASE("intersection_area translation invariance") {
    Rng rng(55);
    for (int i = 0; i < 20; ++i) {
        const Point c{rng.uniform(-20, 20), rng.uniform(-20, 20)};
        Buffer buf(c, 60.0);
        Polygon subj = oracle::random_star_polygon(rng, {c.x + 30.0, c.y - 10.0}, 20.0, 70.0, 8);
        const double base = intersection_area(subj, buf);
        const double dx = 12345.0, dy = -6789.0;
        Buffer buf2({c.x + dx, c.y + dy}, 60.0);
        const double moved = intersection_area(translated(subj, dx, dy), buf2);
        if (base > 0.0) {
            CHECK(std::abs(moved - base) / base < 1e-9);
        } else {
            CHECK(moved == doctest::Approx(0.0));
        }
    }
}

TEST_CASE("polyline_length_in basics and chord") {
    Buffer buf({0.0, 0.0}, 100.0);

    Polyline inside{{{-10, 0}, {10, 5}}};
    CHECK(polyline_length_in(inside, buf) ==
          doctest::Approx(polyline_length(inside)).epsilon(1e-12));

    Polyline outside{{{200, 200}, {300, 300}}};
    CHECK(polyline_length_in(outside, buf) == doctest::Approx(0.0));

    // Diameter chord, endpoints 500 m away on each side. The clipped length
    // lies between twice the inradius and twice the circumradius.
    Polyline chord{{{-500, 0}, {500, 0}}};
    const double len = polyline_length_in(chord, buf);
    CHECK(std::abs(len - 200.0) / 200.0 < 0.005);
    CHECK(len >= 2.0 * 100.0 * std::cos(std::numbers::pi / 64.0) - 1e-9);
    CHECK(len <= 200.0 + 1e-9);
}

TEST_CASE("polyline_length_in additivity under splitting") {
    Rng rng(321);
    Buffer buf({5.0, -3.0}, 75.0);
    for (int trial = 0; trial < 20; ++trial) {
        Polyline zigzag;
        double x = -200.0;
        double y = rng.uniform(-60, 60);
        for (int i = 0; i < 8; ++i) {
            zigzag.vertices.push_back({x, y});
            x += rng.uniform(20.0, 80.0);
            y = rng.uniform(-90.0, 90.0);
        }
        const double whole = polyline_length_in(zigzag, buf);

        double pieces = 0.0;
        for (size_t i = 0; i + 1 < zigzag.vertices.size(); ++i) {
            // split each segment at an interior point
            const Point a = zigzag.vertices[i];
            const Point b = zigzag.vertices[i + 1];
            const double t = rng.uniform(0.2, 0.8);
            const Point m{a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)};
            pieces += polyline_length_in(Polyline{{a, m}}, buf);
            pieces += polyline_length_in(Polyline{{m, b}}, buf);
        }
        CHECK(pieces == doctest::Approx(whole).epsilon(1e-9));
        // Complement identity: inside + outside = total.
        const double total = polyline_length(zigzag);
        CHECK(whole <= total * (1.0 + 1e-12));
    }
}

TEST_CASE("min_distance") {
    std::vector<Point> targets{{3, 4}, {6, 8}};
    CHECK(min_distance({0, 0}, targets) == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(min_distance({3, 4}, targets) == doctest::Approx(0.0));

    CHECK_THROWS_AS(min_distance({0, 0}, std::span<const Point>{}), DataError);

    Rng rng(17);
    std::vector<Point> many;
    for (int i = 0; i < 1000; ++i) many.push_back({rng.uniform(-1e4, 1e4), rng.uniform(-1e4, 1e4)});
    const Point origin{rng.uniform(-1e4, 1e4), rng.uniform(-1e4, 1e4)};
    double best = std::numeric_limits<double>::infinity();
    for (const auto& t : many) best = std::min(best, distance(origin, t));  // exhaustive scan
    CHECK(min_distance(origin, many) == best);
}

TEST_CASE("merge_pools rules") {
    // Two stations 40 m apart -> one pool.
    std::vector<Station> s40{{1, {0, 0}}, {2, {40, 0}}};
    auto g = merge_pools(s40, 50.0);
    REQUIRE(g.size() == 1);
    CHECK(g[0].representative_id == 1);
    CHECK(g[0].member_ids == std::vector<int64_t>{1, 2});

    // Two stations 60 m apart -> two pools.
    std::vector<Station> s60{{1, {0, 0}}, {2, {60, 0}}};
    CHECK(merge_pools(s60, 50.0).size() == 2);

    // Chain: A-B 40 m, B-C 40 m, A-C 80 m. A absorbs B; C is beyond 50 m of
    // the representative A and forms its own pool.
    std::vector<Station> chain{{1, {0, 0}}, {2, {40, 0}}, {3, {80, 0}}};
    auto gc = merge_pools(chain, 50.0);
    REQUIRE(gc.size() == 2);
    CHECK(gc[0].member_ids == std::vector<int64_t>{1, 2});
    CHECK(gc[1].member_ids == std::vector<int64_t>{3});
}

TEST_CASE("merge_pools partition and order invariance") {
    Rng rng(2024);
    std::vector<Station> stations;
    for (int i = 0; i < 200; ++i) {
        stations.push_back({i, {rng.uniform(0, 2000), rng.uniform(0, 2000)}});
    }
    auto base = merge_pools(stations, 50.0);

    size_t members = 0;
    std::vector<bool> seen(stations.size(), false);
    for (const auto& grp : base) {
        for (int64_t id : grp.member_ids) {
            REQUIRE(!seen[static_cast<size_t>(id)]);
            seen[static_cast<size_t>(id)] = true;
            ++members;
            CHECK(distance(stations[static_cast<size_t>(id)].position, grp.location) <= 50.0 + 1e-9);
        }
    }
    CHECK(members == stations.size());

    auto shuffled = stations;
    rng.shuffle(shuffled);
    auto again = merge_pools(shuffled, 50.0);
    REQUIRE(again.size() == base.size());
    for (size_t i = 0; i < base.size(); ++i) {
        CHECK(again[i].representative_id == base[i].representative_id);
        CHECK(again[i].member_ids == base[i].member_ids);
    }
}
