#pragma once

// Gauss-Legendre rules, cut-cell volume rules by 1D slicing, and boundary
// rules on trimming arcs and fitted faces. All rules live in physical
// coordinates on axis-aligned element boxes.

#include "trimstokes/geometry.hpp"

#include <vector>

namespace trimstokes {

struct GaussRule {
    std::vector<double> x;
    std::vector<double> w;
};

/// n-point Gauss-Legendre rule on [-1,1], 1 <= n <= 30.
GaussRule gauss_legendre(int n);

struct VolumeRule {
    std::vector<Vec2> points;
    std::vector<double> weights;
    std::vector<Vec2> params;  ///< parametric coordinates, filled by the mesh
    Index element = -1;

    double measure() const;
    std::size_t size() const { return weights.size(); }
};

struct BoundaryRule {
    std::vector<Vec2> points;
    std::vector<double> weights;
    std::vector<Vec2> normals;
    std::vector<Vec2> params;  ///< parametric coordinates, filled by the mesh
    double h = 0.0;  ///< local mesh size of the owning element
    BCTag tag = BCTag::dirichlet_weak;
    int face = -1;
    Index element = -1;

    double measure() const;
    std::size_t size() const { return weights.size(); }
};

/// n x n tensor Gauss rule on the box.
VolumeRule tensor_rule(const Box& K, int n);

/// Rule for K intersected with the trimmed domain. Returns the tensor rule
/// when no primitive reaches into the interior of K. Throws GeometryFault
/// when a slicing line meets more than four disjoint pieces.
VolumeRule cut_volume_rule(const Box& K, const TrimmedDomain& domain, int n);

/// n Gauss points in the arc parameter, arc-length weights.
BoundaryRule arc_rule(const BoundaryArc& arc, int n, double h);

/// One rule per boundary piece of Gamma inside K (trimming curve and fitted faces).
std::vector<BoundaryRule> cut_boundary_rule(const Box& K, const TrimmedDomain& domain, int n, double h);

/// True when some trimming arc passes through the open interior of K.
bool trimming_crosses_interior(const TrimmedDomain& domain, const Box& K);

} // namespace trimstokes
