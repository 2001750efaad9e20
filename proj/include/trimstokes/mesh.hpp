#pragma once

// Active Bezier mesh over a trimmed domain: element status, volume
// fractions, good/bad split and good neighbors of bad elements.

#include "trimstokes/quadrature.hpp"

#include <vector>

namespace trimstokes {

enum class ElementStatus { interior, cut, exterior };

struct MeshElement {
    Index ix = 0;
    Index iy = 0;
    Box param;                  ///< parametric cell
    Box phys;                   ///< physical bounding box (exact for affine maps)
    ElementStatus status = ElementStatus::exterior;
    double fraction = 0.0;      ///< |K cap Omega| / |K|
    double h = 0.0;             ///< element size (see MeshSize)
    bool good = false;
    Index neighbor = -1;        ///< good neighbor of a bad element
    VolumeRule volume;
    std::vector<BoundaryRule> boundary;

    bool active() const { return status != ElementStatus::exterior; }
};

/// Element size used in the Nitsche penalty and the mesh-dependent norms.
enum class MeshSize { edge, diameter };

struct MeshOptions {
    int quad_order = 4;
    /// `edge` is the longest side of K, `diameter` is diam(K).
    MeshSize mesh_size = MeshSize::edge;
    /// Cut elements whose volume fraction does not exceed this are dropped.
    double demote_fraction = 1e-30;
};

class TrimmedMesh {
public:
    TrimmedMesh() = default;

    const TrimmedDomain& domain() const { return domain_; }
    Index nx() const { return nx_; }
    Index ny() const { return ny_; }
    Index size() const { return static_cast<Index>(elements_.size()); }
    Index index(Index ix, Index iy) const { return ix + nx_ * iy; }

    const MeshElement& element(Index e) const { return elements_[static_cast<std::size_t>(e)]; }
    MeshElement& element(Index e) { return elements_[static_cast<std::size_t>(e)]; }
    const std::vector<MeshElement>& elements() const { return elements_; }

    const std::vector<double>& breakpoints(int d) const { return breaks_[static_cast<std::size_t>(d)]; }

    /// Active elements in row-major order.
    std::vector<Index> active() const;
    std::vector<Index> bad() const;
    Index count(ElementStatus s) const;
    /// max h_K over active elements
    double h() const;
    double theta() const { return theta_; }
    int quad_order() const { return quad_order_; }
    /// Sum of the volume weights over active elements.
    double area() const;

private:
    friend TrimmedMesh build_mesh(const TrimmedDomain&, const std::vector<double>&, const std::vector<double>&,
                                  const MeshOptions&);
    friend void classify_good_bad(TrimmedMesh&, double);

    TrimmedDomain domain_;
    std::array<std::vector<double>, 2> breaks_;
    Index nx_ = 0;
    Index ny_ = 0;
    std::vector<MeshElement> elements_;
    double theta_ = 1.0;
    int quad_order_ = 4;
};

/// Build the mesh on the breakpoint grid, with volume and boundary rules
/// per active element. Elements start all good; call classify_good_bad next.
TrimmedMesh build_mesh(const TrimmedDomain& domain, const std::vector<double>& breaks_x,
                       const std::vector<double>& breaks_y, const MeshOptions& options);

/// K is good iff interior, or cut with f_K >= theta and theta < 1 (theta = 1
/// stabilizes every cut element). Assigns good neighbors to bad elements.
/// Throws MeshFault when a bad element has no interior element within three rings.
void classify_good_bad(TrimmedMesh& mesh, double theta);

/// The interior element closest to K (center distance) within three index
/// rings; ties go to the smaller row-major index.
Index good_neighbor(const TrimmedMesh& mesh, Index K);

} // namespace trimstokes
