#pragma once

#include "pcfc/microgen.hpp"

#include <array>
#include <cstddef>
#include <filesystem>
#include <vector>

namespace pcfc::mesh {

using microgen::Phase;

struct Node {
    double x = 0.0;
    double y = 0.0;
};

/// Corner labels follow the RVE layout: A=(0,0), B=(W,0), C=(W,W), D=(0,W).
enum class Edge { AB = 0, BC = 1, CD = 2, DA = 3 };

/// Structured grid of 4-node quadrilaterals over [0, W]^2.
///
/// Node (i, j) has index j*(divisions+1) + i and sits at (i*h, j*h) with
/// h = W/divisions. Element connectivity is counter-clockwise starting at the
/// lower-left node. Edge node sets are ordered from the first corner of the
/// label to the second (AB runs A->B, DA runs D->A).
struct QuadMesh {
    double window = 0.0;
    int divisions = 0;
    std::vector<Node> nodes;
    std::vector<std::array<std::size_t, 4>> elements;
    std::vector<Phase> phase;
    std::array<std::vector<std::size_t>, 4> edge_sets;

    const std::vector<std::size_t>& edge(Edge e) const { return edge_sets[static_cast<int>(e)]; }
    std::size_t node_index(int i, int j) const { return std::size_t(j) * (divisions + 1) + i; }
    double element_size() const { return window / divisions; }
};

/// Uniform grid with every element tagged Matrix; phases are filled in by `pixelate`.
QuadMesh structured_grid(double window, int divisions);

/// Structured grid whose element phases are sampled at element centroids.
/// Throws std::invalid_argument when divisions < 2.
QuadMesh pixelate(const microgen::Microstructure& ms, int divisions);

/// Fiber element area over total area.
double mesh_volume_fraction(const QuadMesh& mesh);

// Optional dumps:
//   <stem>_nodes.csv     node,x,y
//   <stem>_elements.csv  element,n0,n1,n2,n3,phase
void write_csv(const QuadMesh& mesh, const std::filesystem::path& stem);

}  // namespace pcfc::mesh
