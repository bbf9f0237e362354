#include "pcfc/fea.hpp"

#include "pcfc/errors.hpp"
#include "pcfc/homogenize.hpp"

#include <Eigen/LU>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace pcfc::fea {

namespace {

constexpr double kGauss = 0.57735026918962576451;  // 1/sqrt(3)
constexpr std::array<std::array<double, 2>, 4> kGaussPoints{
    {{-kGauss, -kGauss}, {kGauss, -kGauss}, {kGauss, kGauss}, {-kGauss, kGauss}}};
constexpr std::array<double, 4> kXiNode{-1.0, 1.0, 1.0, -1.0};
constexpr std::array<double, 4> kEtaNode{-1.0, -1.0, 1.0, 1.0};

using StrainMatrix = Eigen::Matrix<double, 3, 8>;

struct GaussSample {
    StrainMatrix B;
    double weight_det;  // Gauss weight (1) times det J
};

std::array<GaussSample, 4> gauss_samples(const Quad& q) {
    std::array<GaussSample, 4> out{};
    for (int g = 0; g < 4; ++g) {
        const double xi = kGaussPoints[g][0];
        const double eta = kGaussPoints[g][1];
        std::array<double, 4> dxi{}, deta{};
        for (int a = 0; a < 4; ++a) {
            dxi[a] = 0.25 * kXiNode[a] * (1.0 + kEtaNode[a] * eta);
            deta[a] = 0.25 * kEtaNode[a] * (1.0 + kXiNode[a] * xi);
        }
        Eigen::Matrix2d J = Eigen::Matrix2d::Zero();
        for (int a = 0; a < 4; ++a) {
            J(0, 0) += dxi[a] * q[a].x;
            J(0, 1) += dxi[a] * q[a].y;
            J(1, 0) += deta[a] * q[a].x;
            J(1, 1) += deta[a] * q[a].y;
        }
        const double det = J.determinant();
        if (!(det > 0.0)) {
            std::ostringstream msg;
            msg << "non-positive Jacobian determinant " << det << " at Gauss point " << g;
            throw SingularJacobian(msg.str());
        }
        const Eigen::Matrix2d Jinv = J.inverse();
        StrainMatrix B = StrainMatrix::Zero();
        for (int a = 0; a < 4; ++a) {
            const double dx = Jinv(0, 0) * dxi[a] + Jinv(0, 1) * deta[a];
            const double dy = Jinv(1, 0) * dxi[a] + Jinv(1, 1) * deta[a];
            B(0, 2 * a) = dx;
            B(1, 2 * a + 1) = dy;
            B(2, 2 * a) = dy;
            B(2, 2 * a + 1) = dx;
        }
        out[g] = {B, det};
    }
    return out;
}

ElementMatrix stiffness_from(const std::array<GaussSample, 4>& samples, const Eigen::Matrix3d& D) {
    ElementMatrix K = ElementMatrix::Zero();
    for (const auto& gs : samples) K.noalias() += gs.B.transpose() * D * gs.B * gs.weight_det;
    // exact symmetry regardless of summation order
    return 0.5 * (K + K.transpose());
}

Quad element_quad(const mesh::QuadMesh& m, std::size_t e) {
    const auto& c = m.elements[e];
    return {m.nodes[c[0]], m.nodes[c[1]], m.nodes[c[2]], m.nodes[c[3]]};
}

// Consistent nodal forces of a constant traction (tx, ty) along an edge
// polyline: each segment hands half its resultant to each end node.
void add_edge_traction(const mesh::QuadMesh& m, mesh::Edge edge, double tx, double ty, std::vector<double>& f) {
    const auto& nodes = m.edge(edge);
    for (std::size_t k = 0; k + 1 < nodes.size(); ++k) {
        const auto& p = m.nodes[nodes[k]];
        const auto& q = m.nodes[nodes[k + 1]];
        const double half = 0.5 * std::hypot(q.x - p.x, q.y - p.y);
        for (std::size_t n : {nodes[k], nodes[k + 1]}) {
            f[2 * n] += tx * half;
            f[2 * n + 1] += ty * half;
        }
    }
}

}  // namespace

void Material::validate() const {
    if (!(E > 0.0)) throw std::invalid_argument("Young's modulus must be positive");
    if (!(nu >= 0.0 && nu < 0.5)) throw std::invalid_argument("Poisson's ratio must lie in [0, 0.5)");
    if (!(sigma_f_t > 0.0)) throw std::invalid_argument("tensile failure stress must be positive");
    if (!(sigma_f_c > 0.0)) throw std::invalid_argument("compressive failure stress must be positive");
}

Eigen::Matrix3d plane_strain_matrix(const Material& mat) {
    const double c = mat.E / ((1.0 + mat.nu) * (1.0 - 2.0 * mat.nu));
    Eigen::Matrix3d D;
    D << c * (1.0 - mat.nu), c * mat.nu, 0.0,
         c * mat.nu, c * (1.0 - mat.nu), 0.0,
         0.0, 0.0, c * (1.0 - 2.0 * mat.nu) / 2.0;
    return D;
}

ElementMatrix element_stiffness(const Quad& coords, const Material& mat) {
    return stiffness_from(gauss_samples(coords), plane_strain_matrix(mat));
}

struct PlaneStrainModel::Impl {
    using SparseMatrix = Eigen::SparseMatrix<double>;

    mesh::QuadMesh mesh;
    PhaseMaterials materials;
    LoadKind kind;
    std::size_t ndof = 0;

    std::vector<std::array<GaussSample, 4>> samples;
    std::vector<double> volume;

    std::vector<int> free_index;                  // -1 for constrained dofs
    std::vector<std::size_t> free_dofs;
    std::vector<std::size_t> constrained_dofs;
    SparseMatrix K;                               // full, unconstrained
    SparseMatrix K_ff;
    SparseMatrix K_fc;                            // free rows, constrained columns (in constrained_dofs order)
    Eigen::SimplicialLDLT<SparseMatrix> ldlt;

    Impl(const mesh::QuadMesh& m, const PhaseMaterials& mats, LoadKind k)
        : mesh(m), materials(mats), kind(k), ndof(2 * m.nodes.size()) {
        materials.matrix.validate();
        materials.fiber.validate();
        constrain();
        assemble();
        factorize();
    }

    void constrain() {
        std::vector<bool> fixed(ndof, false);
        if (kind == LoadKind::Displacement) {
            for (std::size_t n : mesh.edge(mesh::Edge::DA)) fixed[2 * n] = true;
            for (std::size_t n : mesh.edge(mesh::Edge::AB)) fixed[2 * n + 1] = true;
            for (std::size_t n : mesh.edge(mesh::Edge::BC)) fixed[2 * n] = true;
        } else {
            const std::size_t a = mesh.node_index(0, 0);
            const std::size_t b = mesh.node_index(mesh.divisions, 0);
            fixed[2 * a] = fixed[2 * a + 1] = true;
            fixed[2 * b + 1] = true;
        }
        free_index.assign(ndof, -1);
        for (std::size_t d = 0; d < ndof; ++d) {
            if (fixed[d]) {
                constrained_dofs.push_back(d);
            } else {
                free_index[d] = static_cast<int>(free_dofs.size());
                free_dofs.push_back(d);
            }
        }
    }

    void assemble() {
        std::vector<int> constrained_index(ndof, -1);
        for (std::size_t i = 0; i < constrained_dofs.size(); ++i) constrained_index[constrained_dofs[i]] = int(i);

        const std::size_t ne = mesh.elements.size();
        samples.resize(ne);
        volume.resize(ne);
        std::vector<Eigen::Triplet<double>> all, ff, fc;
        all.reserve(ne * 64);
        ff.reserve(ne * 64);
        for (std::size_t e = 0; e < ne; ++e) {
            samples[e] = gauss_samples(element_quad(mesh, e));
            double area = 0.0;
            for (const auto& gs : samples[e]) area += gs.weight_det;
            volume[e] = area;

            const ElementMatrix Ke = stiffness_from(samples[e], plane_strain_matrix(materials[mesh.phase[e]]));

            std::array<std::size_t, 8> dof{};
            for (int a = 0; a < 4; ++a) {
                dof[2 * a] = 2 * mesh.elements[e][a];
                dof[2 * a + 1] = 2 * mesh.elements[e][a] + 1;
            }
            for (int i = 0; i < 8; ++i) {
                for (int j = 0; j < 8; ++j) {
                    const double v = Ke(i, j);
                    all.emplace_back(int(dof[i]), int(dof[j]), v);
                    const int fi = free_index[dof[i]];
                    if (fi < 0) continue;
                    if (const int fj = free_index[dof[j]]; fj >= 0)
                        ff.emplace_back(fi, fj, v);
                    else
                        fc.emplace_back(fi, constrained_index[dof[j]], v);
                }
            }
        }
        K.resize(int(ndof), int(ndof));
        K.setFromTriplets(all.begin(), all.end());
        K_ff.resize(int(free_dofs.size()), int(free_dofs.size()));
        K_ff.setFromTriplets(ff.begin(), ff.end());
        K_fc.resize(int(free_dofs.size()), int(constrained_dofs.size()));
        K_fc.setFromTriplets(fc.begin(), fc.end());
    }

    void factorize() {
        ldlt.compute(K_ff);
        if (ldlt.info() != Eigen::Success) throw SolverFailure("sparse LDL^T factorization failed");
        if (ldlt.vectorD().minCoeff() <= 0.0)
            throw SolverFailure("constrained stiffness is not positive definite");
    }

    void nodal_loads(const TractionLoad& t, std::vector<double>& f) const {
        using mesh::Edge;
        add_edge_traction(mesh, Edge::BC, t.sx, t.txy, f);
        add_edge_traction(mesh, Edge::CD, t.txy, t.sy, f);
        add_edge_traction(mesh, Edge::DA, -t.sx, -t.txy, f);
        add_edge_traction(mesh, Edge::AB, -t.txy, -t.sy, f);
    }

    SolveResult solve(const BoundaryConditions& bc) const {
        if (bc.kind() != kind) throw std::invalid_argument("boundary condition kind does not match the model");

        SolveResult r;
        r.nodal_force.assign(ndof, 0.0);
        Eigen::VectorXd u_c = Eigen::VectorXd::Zero(Eigen::Index(constrained_dofs.size()));
        if (const auto* t = std::get_if<TractionLoad>(&bc.load)) {
            nodal_loads(*t, r.nodal_force);
        } else {
            const double ux = std::get<DisplacementLoad>(bc.load).strain * mesh.window;
            for (std::size_t i = 0; i < constrained_dofs.size(); ++i) {
                const std::size_t d = constrained_dofs[i];
                const std::size_t node = d / 2;
                if (d % 2 == 0 && std::abs(mesh.nodes[node].x - mesh.window) < 1e-12 * mesh.window) u_c[Eigen::Index(i)] = ux;
            }
        }

        Eigen::VectorXd rhs(Eigen::Index(free_dofs.size()));
        for (std::size_t i = 0; i < free_dofs.size(); ++i) rhs[Eigen::Index(i)] = r.nodal_force[free_dofs[i]];
        rhs -= K_fc * u_c;

        Eigen::VectorXd u_f = Eigen::VectorXd::Zero(rhs.size());
        const double rhs_norm = rhs.norm();
        if (rhs_norm > 0.0) {
            u_f = ldlt.solve(rhs);
            for (int refine = 0; refine < 2; ++refine) {
                const Eigen::VectorXd res = rhs - K_ff * u_f;
                r.relative_residual = res.norm() / rhs_norm;
                if (r.relative_residual <= kResidualTolerance * 1e-2) break;
                u_f += ldlt.solve(res);
            }
            r.relative_residual = (rhs - K_ff * u_f).norm() / rhs_norm;
            if (!(r.relative_residual <= kResidualTolerance)) {
                std::ostringstream msg;
                msg << "relative residual " << r.relative_residual << " exceeds " << kResidualTolerance;
                throw SolverFailure(msg.str());
            }
        }

        Eigen::VectorXd u = Eigen::VectorXd::Zero(Eigen::Index(ndof));
        for (std::size_t i = 0; i < free_dofs.size(); ++i) u[Eigen::Index(free_dofs[i])] = u_f[Eigen::Index(i)];
        for (std::size_t i = 0; i < constrained_dofs.size(); ++i) u[Eigen::Index(constrained_dofs[i])] = u_c[Eigen::Index(i)];
        r.displacement.assign(u.data(), u.data() + u.size());

        const Eigen::VectorXd internal = K * u;
        r.reaction.assign(ndof, 0.0);
        for (std::size_t d : constrained_dofs) r.reaction[d] = internal[Eigen::Index(d)] - r.nodal_force[d];

        recover(u, r);
        return r;
    }

    void recover(const Eigen::VectorXd& u, SolveResult& r) const {
        const std::size_t ne = mesh.elements.size();
        r.element_stress.resize(ne);
        r.element_strain.resize(ne);
        r.element_volume = volume;
        for (std::size_t e = 0; e < ne; ++e) {
            const Material& mat = materials[mesh.phase[e]];
            const Eigen::Matrix3d D = plane_strain_matrix(mat);
            Eigen::Matrix<double, 8, 1> ue;
            for (int a = 0; a < 4; ++a) {
                ue[2 * a] = u[Eigen::Index(2 * mesh.elements[e][a])];
                ue[2 * a + 1] = u[Eigen::Index(2 * mesh.elements[e][a] + 1)];
            }
            Eigen::Vector3d strain = Eigen::Vector3d::Zero();
            for (const auto& gs : samples[e]) strain += gs.B * ue;
            strain /= 4.0;
            // D is constant per element, so the Gauss-point stress mean is D times the strain mean.
            const Eigen::Vector3d s = D * strain;
            r.element_strain[e] = {strain[0], strain[1], strain[2]};
            r.element_stress[e] = {s[0], s[1], mat.nu * (s[0] + s[1]), s[2]};
        }
    }
};

PlaneStrainModel::PlaneStrainModel(const mesh::QuadMesh& mesh, const PhaseMaterials& materials, LoadKind kind)
    : impl_(std::make_unique<Impl>(mesh, materials, kind)) {}
PlaneStrainModel::~PlaneStrainModel() = default;
PlaneStrainModel::PlaneStrainModel(PlaneStrainModel&&) noexcept = default;
PlaneStrainModel& PlaneStrainModel::operator=(PlaneStrainModel&&) noexcept = default;

SolveResult PlaneStrainModel::solve(const BoundaryConditions& bc) const { return impl_->solve(bc); }
LoadKind PlaneStrainModel::kind() const { return impl_->kind; }
const mesh::QuadMesh& PlaneStrainModel::mesh() const { return impl_->mesh; }
const PhaseMaterials& PlaneStrainModel::materials() const { return impl_->materials; }

SolveResult solve(const mesh::QuadMesh& mesh, const PhaseMaterials& materials, const BoundaryConditions& bc) {
    return PlaneStrainModel(mesh, materials, bc.kind()).solve(bc);
}

std::array<double, 3> principal_stresses(const StressTensor4& s) {
    const double centre = 0.5 * (s.sx + s.sy);
    const double radius = std::hypot(0.5 * (s.sx - s.sy), s.txy);
    std::array<double, 3> p{centre - radius, centre + radius, s.sz};
    std::sort(p.begin(), p.end());
    return p;
}

EffectiveModulus effective_modulus(const mesh::QuadMesh& mesh, const PhaseMaterials& materials, double strain) {
    if (!(strain != 0.0)) throw std::invalid_argument("applied strain must be nonzero");
    const SolveResult r = solve(mesh, materials, BoundaryConditions{DisplacementLoad{strain}});
    const ElementGroups groups = phase_groups(mesh);
    const StressTensor4 s = homogenize<StressTensor4>(r.element_stress, r.element_volume, groups);
    const Strain3 e = homogenize<Strain3>(r.element_strain, r.element_volume, groups);
    return {s.sx / strain, -e.ey / strain};
}

}  // namespace pcfc::fea
