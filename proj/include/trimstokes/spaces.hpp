#pragma once

// Velocity/pressure spline pairs on the trimmed mesh: DOF numbering,
// element-wise basis evaluation (Piola for RT and N), strong Dirichlet
// constraints and pressure-DOF pruning.
//
// Global velocity numbering: component 0 row-major, then component 1.
// Pressure DOFs have their own row-major numbering.

#include "trimstokes/mesh.hpp"

#include <cmath>
#include <functional>
#include <string>
#include <vector>

namespace trimstokes {

enum class ElementKind { RT, N, TH };

std::string to_string(ElementKind kind);
ElementKind element_kind_from_string(const std::string& name);

struct ElementSpec {
    ElementKind kind = ElementKind::TH;
    int k = 1;
    int alpha = -1;  ///< -1 selects k - 1
};

using VectorField = std::function<Vec2(const Vec2&)>;

/// Values of the element's velocity basis at a set of points.
/// `val[c](q, j)` is component c of local function j at point q,
/// `grad[c][d](q, j)` its derivative with respect to x_d.
struct VelocityValues {
    std::vector<Index> dofs;
    std::array<Eigen::MatrixXd, 2> val;
    std::array<std::array<Eigen::MatrixXd, 2>, 2> grad;

    Index size() const { return static_cast<Index>(dofs.size()); }
    Vec2 value(Index q, Index j) const { return Vec2(val[0](q, j), val[1](q, j)); }
    Mat2 gradient(Index q, Index j) const
    {
        Mat2 g;
        g << grad[0][0](q, j), grad[0][1](q, j), grad[1][0](q, j), grad[1][1](q, j);
        return g;
    }
};

struct ScalarValues {
    std::vector<Index> dofs;
    Eigen::MatrixXd val;  ///< (points x functions)
    Index size() const { return static_cast<Index>(dofs.size()); }
};

class StokesSpaces {
public:
    StokesSpaces() = default;

    ElementKind kind() const { return kind_; }
    int degree() const { return k_; }
    int regularity() const { return alpha_; }
    bool piola() const { return kind_ != ElementKind::TH; }

    const TensorSplineSpace& velocity(int c) const { return vel_[static_cast<std::size_t>(c)]; }
    const TensorSplineSpace& pressure() const { return pres_; }

    Index velocity_size() const { return vel_[0].size() + vel_[1].size(); }
    Index pressure_size() const { return pres_.size(); }
    Index velocity_offset(int c) const { return c == 0 ? 0 : vel_[0].size(); }

    /// Global velocity DOFs touching element e (component 0 first), in local order.
    std::vector<Index> element_velocity_dofs(const MeshElement& el) const;
    std::vector<Index> element_pressure_dofs(const MeshElement& el) const;

    /// Evaluate the velocity basis of element el at parametric points.
    VelocityValues eval_velocity(const TrimmedMesh& mesh, const MeshElement& el, const std::vector<Vec2>& params,
                                 bool gradients) const;
    ScalarValues eval_pressure(const MeshElement& el, const std::vector<Vec2>& params) const;

    // Activity and numbering -------------------------------------------------

    const std::vector<char>& velocity_active() const { return vel_active_; }
    const std::vector<char>& pressure_active() const { return pres_active_; }
    /// Velocity DOF -> unknown index (-1 for inactive or constrained).
    const std::vector<Index>& velocity_unknown() const { return vel_unknown_; }
    /// Pressure DOF -> unknown index (-1 when inactive or pruned).
    const std::vector<Index>& pressure_unknown() const { return pres_unknown_; }
    Index num_velocity_unknowns() const { return n_vel_unknowns_; }
    Index num_pressure_unknowns() const { return n_pres_unknowns_; }
    bool pruned() const { return pruned_; }

    /// Constrained velocity DOFs and their prescribed values.
    const std::vector<Index>& constrained() const { return constrained_; }
    const std::vector<double>& constrained_values() const { return constrained_values_; }
    bool is_constrained(Index dof) const { return !std::isnan(constrained_value_[static_cast<std::size_t>(dof)]); }
    double constrained_value(Index dof) const { return constrained_value_[static_cast<std::size_t>(dof)]; }

    /// Recompute the constrained values for new Dirichlet data (same DOF set).
    void set_dirichlet_data(const TrimmedMesh& mesh, const VectorField& u_D);

private:
    friend StokesSpaces build_spaces(const ElementSpec&, const TrimmedMesh&, bool, const VectorField&);

    ElementKind kind_ = ElementKind::TH;
    int k_ = 1;
    int alpha_ = 0;
    std::array<TensorSplineSpace, 2> vel_;
    TensorSplineSpace pres_;
    std::vector<char> vel_active_;
    std::vector<char> pres_active_;
    std::vector<Index> vel_unknown_;
    std::vector<Index> pres_unknown_;
    Index n_vel_unknowns_ = 0;
    Index n_pres_unknowns_ = 0;
    bool pruned_ = false;
    std::vector<Index> constrained_;
    std::vector<double> constrained_values_;
    std::vector<double> constrained_value_;  ///< NaN when free

    // DOFs constrained on one strong face along one direction (component
    // index for TH, -1 for the normal of RT/N).
    struct FaceChannel {
        int face = 0;
        int direction = -1;
        std::vector<Index> dofs;
        std::vector<std::array<double, 2>> intervals;  ///< active part of the face, parametric
    };
    std::vector<FaceChannel> channels_;
};

/// Build the spaces on the mesh grid. When `prune_pressure` is set, pressure
/// DOFs whose support contains no good element are removed. Strong Dirichlet
/// faces constrain traces (TH) or normal components (RT, N) by face-wise L2
/// projection of u_D.
StokesSpaces build_spaces(const ElementSpec& spec, const TrimmedMesh& mesh, bool prune_pressure,
                          const VectorField& u_D);

/// Evaluate sum_j coeffs(dofs[j]) * basis_j at the points of `vals`.
Eigen::MatrixXd velocity_field(const VelocityValues& vals, const Eigen::VectorXd& coeffs);

} // namespace trimstokes
