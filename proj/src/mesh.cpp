#include "pcfc/mesh.hpp"

#include "pcfc/errors.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <limits>
#include <stdexcept>

namespace pcfc::mesh {

QuadMesh structured_grid(double window, int divisions) {
    if (divisions < 2) throw std::invalid_argument("mesh divisions must be >= 2");
    if (!(window > 0.0)) throw std::invalid_argument("mesh window must be positive");

    QuadMesh m;
    m.window = window;
    m.divisions = divisions;
    const int n = divisions;
    const double h = window / n;

    m.nodes.reserve(std::size_t(n + 1) * (n + 1));
    for (int j = 0; j <= n; ++j)
        for (int i = 0; i <= n; ++i)
            // pin the far edge exactly at W instead of n*h
            m.nodes.push_back({i == n ? window : i * h, j == n ? window : j * h});

    m.elements.reserve(std::size_t(n) * n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
            m.elements.push_back({m.node_index(i, j), m.node_index(i + 1, j), m.node_index(i + 1, j + 1),
                                  m.node_index(i, j + 1)});
    m.phase.assign(m.elements.size(), Phase::Matrix);

    auto& ab = m.edge_sets[static_cast<int>(Edge::AB)];
    auto& bc = m.edge_sets[static_cast<int>(Edge::BC)];
    auto& cd = m.edge_sets[static_cast<int>(Edge::CD)];
    auto& da = m.edge_sets[static_cast<int>(Edge::DA)];
    for (int k = 0; k <= n; ++k) {
        ab.push_back(m.node_index(k, 0));
        bc.push_back(m.node_index(n, k));
        cd.push_back(m.node_index(n - k, n));
        da.push_back(m.node_index(0, n - k));
    }
    return m;
}

QuadMesh pixelate(const microgen::Microstructure& ms, int divisions) {
    QuadMesh m = structured_grid(ms.window_px, divisions);
    const double h = m.element_size();
    for (int j = 0; j < divisions; ++j)
        for (int i = 0; i < divisions; ++i)
            m.phase[std::size_t(j) * divisions + i] = microgen::phase_at(ms, (i + 0.5) * h, (j + 0.5) * h);
    return m;
}

double mesh_volume_fraction(const QuadMesh& mesh) {
    if (mesh.phase.empty()) return 0.0;
    const auto fiber = std::count(mesh.phase.begin(), mesh.phase.end(), Phase::Fiber);
    return double(fiber) / double(mesh.phase.size());
}

void write_csv(const QuadMesh& mesh, const std::filesystem::path& stem) {
    std::ofstream nodes(stem.string() + "_nodes.csv");
    std::ofstream elems(stem.string() + "_elements.csv");
    if (!nodes || !elems) throw Error("cannot write mesh csv next to " + stem.string());
    nodes << std::setprecision(std::numeric_limits<double>::max_digits10);
    nodes << "node,x,y\n";
    for (std::size_t i = 0; i < mesh.nodes.size(); ++i)
        nodes << i << ',' << mesh.nodes[i].x << ',' << mesh.nodes[i].y << '\n';
    elems << "element,n0,n1,n2,n3,phase\n";
    for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
        const auto& c = mesh.elements[e];
        elems << e << ',' << c[0] << ',' << c[1] << ',' << c[2] << ',' << c[3] << ','
              << microgen::to_string(mesh.phase[e]) << '\n';
    }
}

}  // namespace pcfc::mesh
