#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "poolsight/layers.hpp"
#include "poolsight/matrix.hpp"
#include "poolsight/rng.hpp"

using namespace poolsight;

namespace {

std::filesystem::path temp_dir() {
    auto d = std::filesystem::temp_directory_path() / "poolsight_test_layers";
    std::filesystem::create_directories(d);
    return d;
}

}  // namespace

TEST_CASE("geojson round trip preserves geometry and attributes") {
    SpatialLayer layer;
    layer.name = "tiles";
    layer.kind = GeometryKind::Polygons;
    layer.polygons.push_back({Polygon{{{0, 0}, {10, 0}, {10, 10}, {0, 10}, {0, 0}}, {}}});
    layer.polygons.push_back({Polygon{{{10, 0}, {20, 0}, {20, 10}, {10, 10}, {10, 0}},
                                      {{{12, 2}, {12, 4}, {14, 4}, {14, 2}, {12, 2}}}}});
    layer.numeric["pop"] = {{100.0, 250.5}, {false, false}};
    layer.numeric["income"] = {{0.0, 37.25}, {true, false}};
    layer.categorical["zone"] = {"park", ""};

    const auto path = (temp_dir() / "tiles.geojson").string();
    save_geojson(layer, path);
    SpatialLayer back = load_geojson(path, "tiles");

    REQUIRE(back.kind == GeometryKind::Polygons);
    REQUIRE(back.size() == 2);
    CHECK(record_area(back.polygons[0]) == doctest::Approx(100.0));
    CHECK(record_area(back.polygons[1]) == doctest::Approx(96.0));
    CHECK(back.numeric_attr("pop").values[1] == doctest::Approx(250.5));
    CHECK(back.numeric_attr("income").missing[0]);
    CHECK_FALSE(back.numeric_attr("income").missing[1]);
    CHECK(back.categorical_attr("zone")[0] == "park");
    CHECK(back.categorical_attr("zone")[1].empty());
}

TEST_CASE("geojson load normalizes ring orientation") {
    const auto path = (temp_dir() / "cw.geojson").string();
    {
        std::ofstream out(path);
        out << R"({"type":"FeatureCollection","features":[
              {"type":"Feature","geometry":{"type":"Polygon",
               "coordinates":[[[0,0],[0,5],[5,5],[5,0],[0,0]]]},
               "properties":{"v":1}}]})";
    }
    SpatialLayer layer = load_geojson(path, "cw");
    REQUIRE(layer.size() == 1);
    CHECK(signed_ring_area(layer.polygons[0][0].outer) > 0.0);
}

TEST_CASE("points csv load classifies columns") {
    const auto path = (temp_dir() / "pois.csv").string();
    {
        std::ofstream out(path);
        out << "x,y,weight,type\n"
            << "1.5,2.5,10,bar\n"
            << "3.0,4.0,,cafe\n";
    }
    SpatialLayer layer = load_points_csv(path, "pois");
    REQUIRE(layer.kind == GeometryKind::Points);
    REQUIRE(layer.size() == 2);
    CHECK(layer.points[1].x == doctest::Approx(3.0));
    CHECK(layer.numeric_attr("weight").missing[1]);
    CHECK(layer.categorical_attr("type")[0] == "bar");
}

TEST_CASE("grid index finds the same candidates as a linear scan") {
    Rng rng(88);
    SpatialLayer layer;
    layer.kind = GeometryKind::Polygons;
    for (int i = 0; i < 300; ++i) {
        const double x = rng.uniform(0, 5000), y = rng.uniform(0, 5000);
        const double w = rng.uniform(5, 200), h = rng.uniform(5, 200);
        layer.polygons.push_back(
            {Polygon{{{x, y}, {x + w, y}, {x + w, y + h}, {x, y + h}, {x, y}}, {}}});
    }
    GridIndex idx = build_index(layer, 250.0);
    for (int t = 0; t < 50; ++t) {
        BoundingBox q{rng.uniform(0, 5000), rng.uniform(0, 5000), 0, 0};
        q.max_x = q.min_x + rng.uniform(10, 800);
        q.max_y = q.min_y + rng.uniform(10, 800);
        std::vector<uint32_t> brute;
        for (uint32_t i = 0; i < layer.polygons.size(); ++i) {
            if (bounding_box(layer.polygons[i][0]).intersects(q)) brute.push_back(i);
        }
        CHECK(idx.candidates(q) == brute);
    }
}

TEST_CASE("matrix save/load round trips losslessly") {
    FeatureMatrix m;
    m.observation_ids = {"p1", "p2", "p3"};
    m.feature_names = {"a", "b,with comma"};
    m.provenance = {"layer:count:a", "layer:average:b"};
    m.values.resize(3, 2);
    m.values << 0.1, -1.0 / 3.0, 1e-17, 12345.678901234567, 2.0, std::exp(1.0);

    const auto csv_path = (temp_dir() / "m.csv").string();
    const auto side_path = (temp_dir() / "m.json").string();
    save_matrix(m, csv_path, side_path);
    FeatureMatrix back = load_matrix(csv_path, side_path);

    REQUIRE(back.n_rows() == 3);
    REQUIRE(back.n_cols() == 2);
    CHECK(back.observation_ids == m.observation_ids);
    CHECK(back.feature_names == m.feature_names);
    CHECK(back.provenance == m.provenance);
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 2; ++j) {
            CHECK(back.values(i, j) == m.values(i, j));  // bit-exact
        }
    }

    // Saving again must produce identical bytes (pipeline determinism).
    const auto csv2 = (temp_dir() / "m2.csv").string();
    const auto side2 = (temp_dir() / "m2.json").string();
    save_matrix(back, csv2, side2);
    auto slurp = [](const std::string& p) {
        std::ifstream in(p);
        return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    };
    CHECK(slurp(csv_path) == slurp(csv2));
    CHECK(slurp(side_path) == slurp(side2));
}

TEST_CASE("matrix validation rejects duplicate names") {
    FeatureMatrix m;
    m.observation_ids = {"p1"};
    m.feature_names = {"a", "a"};
    m.provenance = {"", ""};
    m.values.resize(1, 2);
    m.values << 1.0, 2.0;
    CHECK_THROWS_AS(m.validate(), DataError);
}
