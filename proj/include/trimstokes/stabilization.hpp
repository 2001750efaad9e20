#pragma once

// R^p and R^v: L2 projections onto tensor polynomials on the good neighbor
// K' of a bad element K, extended polynomially to K. Projections are done
// on the parametric pullback in a Legendre basis scaled to the parametric
// box of K'; velocity values are then pushed forward like the plain basis.

#include "trimstokes/spaces.hpp"

#include <optional>

namespace trimstokes {

/// Values (and first derivatives) of the Legendre polynomials P_0..P_n at x.
void legendre(int n, double x, double* val, double* der);

class LocalProjector {
public:
    Index element() const { return element_; }
    Index neighbor() const { return neighbor_; }
    const Box& frame() const { return frame_; }

    /// Pressure basis of K' projected onto Q_k(K'), at parametric points of K.
    ScalarValues pressure(const std::vector<Vec2>& params) const;
    /// Velocity basis of K' projected onto the polynomial velocity space of
    /// K', evaluated (and mapped) at parametric points of K.
    VelocityValues velocity(const TrimmedMesh& mesh, const std::vector<Vec2>& params, bool gradients) const;

    /// Legendre coefficients (rows) per K' DOF (columns).
    const Eigen::MatrixXd& pressure_matrix() const { return Pp_; }
    const Eigen::MatrixXd& velocity_matrix(int c) const { return Pv_[static_cast<std::size_t>(c)]; }

private:
    friend LocalProjector build_projector(const StokesSpaces&, const TrimmedMesh&, Index);

    bool piola_ = false;
    Index element_ = -1;
    Index neighbor_ = -1;
    Box frame_;
    std::array<int, 2> pdeg_{0, 0};
    std::array<std::array<int, 2>, 2> vdeg_{};
    std::vector<Index> pdofs_;
    std::vector<Index> vdofs_;
    Eigen::MatrixXd Pp_;
    std::array<Eigen::MatrixXd, 2> Pv_;
};

/// Projector for the bad element K (K must have a good neighbor assigned).
LocalProjector build_projector(const StokesSpaces& spaces, const TrimmedMesh& mesh, Index K);

/// One projector per bad element.
class Stabilization {
public:
    Stabilization() = default;
    Stabilization(const StokesSpaces& spaces, const TrimmedMesh& mesh);

    bool empty() const { return count_ == 0; }
    Index size() const { return count_; }
    const LocalProjector* find(Index element) const;

private:
    std::vector<std::optional<LocalProjector>> by_element_;
    Index count_ = 0;
};

/// Pressure basis on element el: R^p on bad elements, plain elsewhere.
ScalarValues stabilized_pressure(const StokesSpaces& spaces, const Stabilization& stab, const MeshElement& el,
                                 Index id, const std::vector<Vec2>& params);

/// Velocity basis whose gradients feed the Nitsche consistency terms: R^v on
/// bad elements, plain elsewhere.
VelocityValues stabilized_velocity(const StokesSpaces& spaces, const TrimmedMesh& mesh, const Stabilization& stab,
                                   const MeshElement& el, Index id, const std::vector<Vec2>& params);

} // namespace trimstokes
