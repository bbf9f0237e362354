#include "pcfc/mesh.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>

using namespace pcfc;
using namespace pcfc::mesh;

namespace {

double signed_area(const QuadMesh& m, std::size_t e) {
    double a = 0.0;
    for (int k = 0; k < 4; ++k) {
        const Node& p = m.nodes[m.elements[e][k]];
        const Node& q = m.nodes[m.elements[e][(k + 1) % 4]];
        a += p.x * q.y - q.x * p.y;
    }
    return 0.5 * a;
}

std::size_t count_lines(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::size_t n = 0;
    for (std::string line; std::getline(in, line);) ++n;
    return n;
}

}  // namespace

TEST_CASE("two-division grid over an empty microstructure") {
    microgen::Microstructure ms;
    ms.window_px = 200;
    const auto m = pixelate(ms, 2);
    CHECK(m.nodes.size() == 9);
    CHECK(m.elements.size() == 4);
    for (auto p : m.phase) CHECK(p == Phase::Matrix);
    CHECK(mesh_volume_fraction(m) == 0.0);
}

TEST_CASE("node numbering, orientation and corner coordinates") {
    const auto m = structured_grid(200.0, 7);
    CHECK(m.nodes.size() == 64);
    CHECK(m.elements.size() == 49);
    for (int j = 0; j <= 7; ++j)
        for (int i = 0; i <= 7; ++i) {
            const Node& n = m.nodes[std::size_t(j) * 8 + i];
            CHECK(n.x == doctest::Approx(i * 200.0 / 7));
            CHECK(n.y == doctest::Approx(j * 200.0 / 7));
        }
    CHECK(m.nodes[m.node_index(7, 7)].x == 200.0);
    CHECK(m.nodes[m.node_index(7, 7)].y == 200.0);
    double area = 0.0;
    for (std::size_t e = 0; e < m.elements.size(); ++e) {
        const double a = signed_area(m, e);
        CHECK(a > 0.0);
        area += a;
    }
    CHECK(area == doctest::Approx(200.0 * 200.0));
}

TEST_CASE("edge sets run from corner to corner") {
    const auto m = structured_grid(10.0, 4);
    const std::size_t A = m.node_index(0, 0), B = m.node_index(4, 0), C = m.node_index(4, 4), D = m.node_index(0, 4);
    auto ends = [&](Edge e) { return std::pair{m.edge(e).front(), m.edge(e).back()}; };
    CHECK(ends(Edge::AB) == std::pair{A, B});
    CHECK(ends(Edge::BC) == std::pair{B, C});
    CHECK(ends(Edge::CD) == std::pair{C, D});
    CHECK(ends(Edge::DA) == std::pair{D, A});
    for (auto n : m.edge(Edge::AB)) CHECK(m.nodes[n].y == 0.0);
    for (auto n : m.edge(Edge::BC)) CHECK(m.nodes[n].x == 10.0);
    for (auto n : m.edge(Edge::CD)) CHECK(m.nodes[n].y == 10.0);
    for (auto n : m.edge(Edge::DA)) CHECK(m.nodes[n].x == 0.0);
    for (int e = 0; e < 4; ++e) CHECK(m.edge_sets[e].size() == 5);
}

TEST_CASE("fine mesh reproduces the analytic fiber fraction") {
    const auto ms = microgen::generate({200, 0.60, 15.6, 1.0, 7});
    double area = 0.0;
    for (const auto& c : ms.inclusions) area += std::numbers::pi * c.r * c.r;
    const double analytic = area / (200.0 * 200.0);
    const auto m = pixelate(ms, 200);
    CHECK(std::abs(mesh_volume_fraction(m) - analytic) <= 0.02);
}

TEST_CASE("large centred inclusion leaves only the corners as matrix") {
    microgen::Microstructure ms;
    ms.window_px = 100;
    ms.inclusions = {{50.0, 50.0, 60.0}};
    const auto m = pixelate(ms, 10);
    auto at = [&](int i, int j) { return m.phase[std::size_t(j) * 10 + i]; };
    CHECK(at(0, 0) == Phase::Matrix);
    CHECK(at(9, 0) == Phase::Matrix);
    CHECK(at(9, 9) == Phase::Matrix);
    CHECK(at(0, 9) == Phase::Matrix);
    CHECK(at(4, 4) == Phase::Fiber);
    CHECK(at(5, 5) == Phase::Fiber);
    CHECK(at(5, 0) == Phase::Fiber);
}

TEST_CASE("volume fraction counts fiber elements") {
    auto m = structured_grid(1.0, 2);
    CHECK(mesh_volume_fraction(m) == 0.0);
    m.phase = {Phase::Fiber, Phase::Fiber, Phase::Fiber, Phase::Matrix};
    CHECK(mesh_volume_fraction(m) == 0.75);
    m.phase.assign(4, Phase::Fiber);
    CHECK(mesh_volume_fraction(m) == 1.0);
}

TEST_CASE("invalid divisions are rejected") {
    CHECK_THROWS_AS(structured_grid(100.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(structured_grid(0.0, 4), std::invalid_argument);
}

TEST_CASE("csv dump has one row per node and element") {
    const auto dir = std::filesystem::temp_directory_path() / "pcfc_test_mesh";
    std::filesystem::create_directories(dir);
    const auto m = structured_grid(4.0, 3);
    write_csv(m, dir / "grid");
    CHECK(count_lines(dir / "grid_nodes.csv") == 1 + 16);
    CHECK(count_lines(dir / "grid_elements.csv") == 1 + 9);
    std::filesystem::remove_all(dir);
}
