#pragma once

#include "pcfc/mesh.hpp"

#include <Eigen/Core>

#include <array>
#include <memory>
#include <optional>
#include <variant>
#include <vector>

namespace pcfc::fea {

using mesh::Phase;

/// Isotropic linear-elastic constituent with brittle principal-stress limits.
/// Stresses in psi; the compressive limit is stored as a positive magnitude.
struct Material {
    double E = 0.0;
    double nu = 0.0;
    double sigma_f_t = 0.0;
    double sigma_f_c = 0.0;

    /// Throws std::invalid_argument unless E > 0, 0 <= nu < 0.5 and both limits > 0.
    void validate() const;

    static Material t800_fiber() { return {2.25e6, 0.25, 35000.0, 35000.0}; }
    static Material f3900_matrix() { return {4.09e5, 0.387, 15375.0, 23000.0}; }

    friend bool operator==(const Material&, const Material&) = default;
};

struct PhaseMaterials {
    Material matrix = Material::f3900_matrix();
    Material fiber = Material::t800_fiber();

    const Material& operator[](Phase p) const { return p == Phase::Fiber ? fiber : matrix; }
};

/// Plane-strain stress state (tau_xz = tau_yz = 0).
struct StressTensor4 {
    double sx = 0.0;
    double sy = 0.0;
    double sz = 0.0;
    double txy = 0.0;

    std::array<double, 4> as_array() const { return {sx, sy, sz, txy}; }

    StressTensor4& operator+=(const StressTensor4& o) {
        sx += o.sx;
        sy += o.sy;
        sz += o.sz;
        txy += o.txy;
        return *this;
    }
    StressTensor4& operator*=(double c) {
        sx *= c;
        sy *= c;
        sz *= c;
        txy *= c;
        return *this;
    }
    friend StressTensor4 operator+(StressTensor4 a, const StressTensor4& b) { return a += b; }
    friend StressTensor4 operator*(StressTensor4 a, double c) { return a *= c; }
    friend StressTensor4 operator*(double c, StressTensor4 a) { return a *= c; }
    friend StressTensor4 operator/(StressTensor4 a, double c) { return a *= 1.0 / c; }
    friend bool operator==(const StressTensor4&, const StressTensor4&) = default;
};

/// In-plane engineering strain (ex, ey, gamma_xy); ez = 0 by plane strain.
struct Strain3 {
    double ex = 0.0;
    double ey = 0.0;
    double gxy = 0.0;

    Strain3& operator+=(const Strain3& o) {
        ex += o.ex;
        ey += o.ey;
        gxy += o.gxy;
        return *this;
    }
    Strain3& operator*=(double c) {
        ex *= c;
        ey *= c;
        gxy *= c;
        return *this;
    }
    friend Strain3 operator+(Strain3 a, const Strain3& b) { return a += b; }
    friend Strain3 operator*(Strain3 a, double c) { return a *= c; }
    friend Strain3 operator*(double c, Strain3 a) { return a *= c; }
    friend Strain3 operator/(Strain3 a, double c) { return a *= 1.0 / c; }
};

/// Boundary tractions in psi: sx normal on BC, sy normal on CD, txy tangential.
///
/// The loading is applied as the full boundary traction sigma.n of the
/// uniform state on all four edges, so the load is self-equilibrated for any
/// combination including shear. The AD/AB fixities then only need to remove
/// rigid-body motion and are restricted to their end points: A is held in
/// both directions and B in direction 3 (y).
struct TractionLoad {
    double sx = 0.0;
    double sy = 0.0;
    double txy = 0.0;

    friend bool operator==(const TractionLoad&, const TractionLoad&) = default;
};

/// Uniaxial strain imposed as a normal displacement strain*W on edge BC, with
/// AD held in direction 2 (x) and AB held in direction 3 (y); CD is free.
struct DisplacementLoad {
    double strain = 0.001;
};

enum class LoadKind { Traction, Displacement };

struct BoundaryConditions {
    std::variant<TractionLoad, DisplacementLoad> load;

    LoadKind kind() const {
        return std::holds_alternative<TractionLoad>(load) ? LoadKind::Traction : LoadKind::Displacement;
    }
};

struct SolveResult {
    std::vector<double> displacement;        // 2 per node: (ux, uy)
    std::vector<StressTensor4> element_stress;  // mean over the 2x2 Gauss points
    std::vector<Strain3> element_strain;     // mean over the 2x2 Gauss points
    std::vector<double> element_volume;      // area x unit thickness
    std::vector<double> nodal_force;         // consistent applied forces, 2 per node
    std::vector<double> reaction;            // K u - f on constrained dofs, 0 elsewhere
    double relative_residual = 0.0;
};

using ElementMatrix = Eigen::Matrix<double, 8, 8>;
using Quad = std::array<mesh::Node, 4>;

/// 3x3 plane-strain constitutive matrix acting on (ex, ey, gxy).
Eigen::Matrix3d plane_strain_matrix(const Material& mat);

/// Bilinear quad stiffness, 2x2 Gauss quadrature, dof order (u0, v0, u1, v1, ...).
/// Throws SingularJacobian when the Jacobian determinant is not positive at a Gauss point.
ElementMatrix element_stiffness(const Quad& coords, const Material& mat);

/// Assembled and factorized plane-strain model for one RVE and one kind of
/// loading. Construction does the sparse Cholesky (LDL^T) factorization; each
/// `solve` is a back-substitution plus stress recovery. `solve` is const and
/// may be called concurrently from several threads.
class PlaneStrainModel {
public:
    PlaneStrainModel(const mesh::QuadMesh& mesh, const PhaseMaterials& materials, LoadKind kind);
    ~PlaneStrainModel();
    PlaneStrainModel(PlaneStrainModel&&) noexcept;
    PlaneStrainModel& operator=(PlaneStrainModel&&) noexcept;

    /// Throws std::invalid_argument when the load kind does not match the
    /// model and SolverFailure when the relative residual exceeds 1e-10.
    SolveResult solve(const BoundaryConditions& bc) const;

    LoadKind kind() const;
    const mesh::QuadMesh& mesh() const;
    const PhaseMaterials& materials() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

inline constexpr double kResidualTolerance = 1e-10;

/// One-shot assemble, factorize and solve.
SolveResult solve(const mesh::QuadMesh& mesh, const PhaseMaterials& materials, const BoundaryConditions& bc);

/// Principal stresses in ascending order (s1 <= s2 <= s3). sz is always one of them.
std::array<double, 3> principal_stresses(const StressTensor4& s);

struct EffectiveModulus {
    double e22 = 0.0;   // homogenized sx / applied strain
    double nu23 = 0.0;  // -(homogenized ey) / applied strain
};

/// Imposes `strain` on edge BC (displacement loading) and homogenizes the response.
EffectiveModulus effective_modulus(const mesh::QuadMesh& mesh, const PhaseMaterials& materials,
                                   double strain = 0.001);

}  // namespace pcfc::fea
