#include "pcfc/errors.hpp"
#include "pcfc/fea.hpp"
#include "pcfc/homogenize.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <random>

using namespace pcfc;
using namespace pcfc::fea;

namespace {

// Strain energy of a bilinear quad written from scratch with Lame constants
// and 2x2 Gauss points; used as the oracle for the element stiffness.
double quad_energy(const Quad& q, const Material& m, const std::array<double, 8>& u) {
    const double lambda = m.E * m.nu / ((1 + m.nu) * (1 - 2 * m.nu));
    const double mu = m.E / (2 * (1 + m.nu));
    const double xin[4] = {-1, 1, 1, -1}, etan[4] = {-1, -1, 1, 1};
    const double g = 1 / std::sqrt(3.0);
    double energy = 0;
    for (double xi : {-g, g})
        for (double eta : {-g, g}) {
            double xx = 0, xe = 0, yx = 0, ye = 0;  // dx/dxi, dx/deta, dy/dxi, dy/deta
            double uxi = 0, ueta = 0, vxi = 0, veta = 0;
            for (int a = 0; a < 4; ++a) {
                const double nxi = xin[a] * (1 + etan[a] * eta) / 4, neta = etan[a] * (1 + xin[a] * xi) / 4;
                xx += nxi * q[a].x, xe += neta * q[a].x, yx += nxi * q[a].y, ye += neta * q[a].y;
                uxi += nxi * u[2 * a], ueta += neta * u[2 * a], vxi += nxi * u[2 * a + 1], veta += neta * u[2 * a + 1];
            }
            const double det = xx * ye - xe * yx;
            // chain rule: d/dx = ( ye d/dxi - yx d/deta)/det, d/dy = (-xe d/dxi + xx d/deta)/det
            const double ux = (ye * uxi - yx * ueta) / det, uy = (-xe * uxi + xx * ueta) / det;
            const double vx = (ye * vxi - yx * veta) / det, vy = (-xe * vxi + xx * veta) / det;
            const double ex = ux, ey = vy, gxy = uy + vx;
            const double sx = (lambda + 2 * mu) * ex + lambda * ey, sy = lambda * ex + (lambda + 2 * mu) * ey;
            energy += 0.5 * (sx * ex + sy * ey + mu * gxy * gxy) * det;
        }
    return energy;
}

bool near_rel(double a, double b, double rel, double scale) { return std::abs(a - b) <= rel * scale; }

void check_uniform(const SolveResult& r, const StressTensor4& expect, double rel) {
    const double scale = std::max({std::abs(expect.sx), std::abs(expect.sy), std::abs(expect.sz), std::abs(expect.txy)});
    for (std::size_t e = 0; e < r.element_stress.size(); ++e) {
        const auto& s = r.element_stress[e];
        if (!(near_rel(s.sx, expect.sx, rel, scale) && near_rel(s.sy, expect.sy, rel, scale) &&
              near_rel(s.sz, expect.sz, rel, scale) && near_rel(s.txy, expect.txy, rel, scale))) {
            CAPTURE(e);
            CAPTURE(s.sx);
            CAPTURE(s.sy);
            CAPTURE(s.sz);
            CAPTURE(s.txy);
            FAIL_CHECK("element stress deviates from the uniform state");
            return;
        }
    }
}

mesh::QuadMesh composite(int divisions, std::uint64_t seed = 139) {
    return mesh::pixelate(microgen::generate({200, 0.6, 15.6, 1.0, seed}), divisions);
}

}  // namespace

TEST_CASE("plane-strain constitutive matrix") {
    const Material m = Material::f3900_matrix();
    const auto D = plane_strain_matrix(m);
    const double lambda = m.E * m.nu / ((1 + m.nu) * (1 - 2 * m.nu));
    const double mu = m.E / (2 * (1 + m.nu));
    CHECK(D(0, 0) == doctest::Approx(lambda + 2 * mu));
    CHECK(D(0, 1) == doctest::Approx(lambda));
    CHECK(D(2, 2) == doctest::Approx(mu));
    CHECK(D(0, 2) == 0.0);
}

TEST_CASE("tabulated constituent properties") {
    CHECK(Material::t800_fiber() == Material{2.25e6, 0.25, 35000.0, 35000.0});
    CHECK(Material::f3900_matrix() == Material{4.09e5, 0.387, 15375.0, 23000.0});
    CHECK_NOTHROW(Material::t800_fiber().validate());
    CHECK_THROWS_AS((Material{1.0, 0.5, 1.0, 1.0}.validate()), std::invalid_argument);
}

TEST_CASE("unit square stiffness: symmetry and rigid-body modes") {
    const Quad q{{{0, 0}, {1, 0}, {1, 1}, {0, 1}}};
    const auto K = element_stiffness(q, Material::f3900_matrix());
    CHECK((K - K.transpose()).norm() == 0.0);
    Eigen::Matrix<double, 8, 1> tx, ty, rot;
    for (int a = 0; a < 4; ++a) {
        tx.segment<2>(2 * a) << 1, 0;
        ty.segment<2>(2 * a) << 0, 1;
        rot.segment<2>(2 * a) << -q[a].y, q[a].x;
    }
    const double kmax = K.cwiseAbs().maxCoeff();
    CHECK((K * tx).norm() <= 1e-10 * kmax);
    CHECK((K * ty).norm() <= 1e-10 * kmax);
    CHECK((K * rot).norm() <= 1e-10 * kmax);

    Eigen::SelfAdjointEigenSolver<ElementMatrix> es(K);
    const auto ev = es.eigenvalues();
    const double tol = 1e-8 * ev.cwiseAbs().maxCoeff();
    int zero = 0, positive = 0;
    for (int i = 0; i < 8; ++i) {
        if (std::abs(ev[i]) <= tol) ++zero;
        else if (ev[i] > 0) ++positive;
    }
    CHECK(zero == 3);
    CHECK(positive == 5);
}

TEST_CASE("element stiffness equals the finite-difference Hessian of the strain energy") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> jitter(-0.2, 0.2);
    for (int trial = 0; trial < 5; ++trial) {
        const Quad q{{{0 + jitter(rng), 0 + jitter(rng)},
                      {2 + jitter(rng), 0 + jitter(rng)},
                      {2 + jitter(rng), 1.5 + jitter(rng)},
                      {0 + jitter(rng), 1.5 + jitter(rng)}}};
        const Material mat = trial % 2 ? Material::t800_fiber() : Material::f3900_matrix();
        const auto K = element_stiffness(q, mat);
        const double h = 1e-3;
        double worst = 0.0;
        for (int i = 0; i < 8; ++i)
            for (int j = 0; j < 8; ++j) {
                auto energy_at = [&](double di, double dj) {
                    std::array<double, 8> u{};
                    u[i] += di;
                    u[j] += dj;
                    return quad_energy(q, mat, u);
                };
                const double H = (energy_at(h, h) - energy_at(h, -h) - energy_at(-h, h) + energy_at(-h, -h)) / (4 * h * h);
                worst = std::max(worst, std::abs(H - K(i, j)));
            }
        CHECK(worst <= 1e-6 * K.cwiseAbs().maxCoeff());
    }
}

TEST_CASE("inverted element is rejected") {
    const Quad clockwise{{{0, 0}, {0, 1}, {1, 1}, {1, 0}}};
    CHECK_THROWS_AS(element_stiffness(clockwise, Material::f3900_matrix()), SingularJacobian);
}

TEST_CASE("patch tests on a homogeneous plate") {
    const auto m = mesh::structured_grid(200.0, 20);
    PhaseMaterials mats;
    const double nu = mats.matrix.nu;
    const PlaneStrainModel model(m, mats, LoadKind::Traction);

    SUBCASE("uniaxial") { check_uniform(model.solve({TractionLoad{1000, 0, 0}}), {1000, 0, 387, 0}, 1e-6); }
    SUBCASE("pure shear") { check_uniform(model.solve({TractionLoad{0, 0, 500}}), {0, 0, 0, 500}, 1e-6); }
    SUBCASE("biaxial with shear") {
        check_uniform(model.solve({TractionLoad{1000, -500, 250}}), {1000, -500, nu * 500, 250}, 1e-6);
    }
    SUBCASE("zero load") {
        const auto r = model.solve({TractionLoad{0, 0, 0}});
        for (double u : r.displacement) CHECK(u == 0.0);
        check_uniform(r, {0, 0, 0, 0}, 0.0);
    }
}

TEST_CASE("homogeneous plate strains follow Hooke's law") {
    const auto m = mesh::structured_grid(100.0, 10);
    const PhaseMaterials mats;
    const auto& mat = mats.matrix;
    const auto r = solve(m, mats, {TractionLoad{1000, 0, 500}});
    const double G = mat.E / (2 * (1 + mat.nu));
    const double ex = (1 - mat.nu * mat.nu) / mat.E * 1000;
    const double ey = -mat.nu * (1 + mat.nu) / mat.E * 1000;
    for (const auto& e : r.element_strain) {
        CHECK(e.ex == doctest::Approx(ex).epsilon(1e-8));
        CHECK(e.ey == doctest::Approx(ey).epsilon(1e-8));
        CHECK(e.gxy == doctest::Approx(500 / G).epsilon(1e-8));
    }
}

TEST_CASE("composite response: average stress, out-of-plane stress, equilibrium, linearity") {
    const auto m = composite(40);
    const PhaseMaterials mats;
    const auto groups = phase_groups(m);
    const PlaneStrainModel model(m, mats, LoadKind::Traction);
    const TractionLoad load{700, -300, 400};
    const auto r = model.solve({load});
    CHECK(r.relative_residual <= kResidualTolerance);

    // Average-stress theorem: the volume-averaged stress equals the applied boundary traction.
    const auto avg = rve_stress(r, groups);
    CHECK(avg.sx == doctest::Approx(load.sx).epsilon(1e-8));
    CHECK(avg.sy == doctest::Approx(load.sy).epsilon(1e-8));
    CHECK(avg.txy == doctest::Approx(load.txy).epsilon(1e-8));

    for (std::size_t e = 0; e < r.element_stress.size(); ++e) {
        const auto& s = r.element_stress[e];
        const double nu = mats[m.phase[e]].nu;
        CHECK(s.sz == doctest::Approx(nu * (s.sx + s.sy)).epsilon(1e-12));
    }

    double fx = 0, fy = 0, scale = 0;
    for (std::size_t n = 0; n < m.nodes.size(); ++n) {
        fx += r.nodal_force[2 * n] + r.reaction[2 * n];
        fy += r.nodal_force[2 * n + 1] + r.reaction[2 * n + 1];
        scale = std::max({scale, std::abs(r.nodal_force[2 * n]), std::abs(r.nodal_force[2 * n + 1])});
    }
    CHECK(std::abs(fx) <= 1e-9 * scale);
    CHECK(std::abs(fy) <= 1e-9 * scale);
    for (double rx : r.reaction) CHECK(std::abs(rx) <= 1e-6 * scale);

    const auto r2 = model.solve({TractionLoad{2 * load.sx, 2 * load.sy, 2 * load.txy}});
    for (std::size_t e = 0; e < r.element_stress.size(); e += 37) {
        CHECK(r2.element_stress[e].sx == doctest::Approx(2 * r.element_stress[e].sx).epsilon(1e-9));
        CHECK(r2.element_stress[e].txy == doctest::Approx(2 * r.element_stress[e].txy).epsilon(1e-9));
    }
}

TEST_CASE("displacement loading: reactions balance and match the homogenized stress") {
    const auto m = composite(40, 176);
    const PhaseMaterials mats;
    const auto groups = phase_groups(m);
    const double strain = 0.001;
    const auto r = solve(m, mats, {DisplacementLoad{strain}});
    for (std::size_t n : m.edge(mesh::Edge::BC)) CHECK(r.displacement[2 * n] == doctest::Approx(strain * 200.0));
    for (std::size_t n : m.edge(mesh::Edge::DA)) CHECK(r.displacement[2 * n] == 0.0);
    for (std::size_t n : m.edge(mesh::Edge::AB)) CHECK(r.displacement[2 * n + 1] == 0.0);

    double total_x = 0.0, bc_x = 0.0;
    for (std::size_t n = 0; n < m.nodes.size(); ++n) total_x += r.reaction[2 * n];
    for (std::size_t n : m.edge(mesh::Edge::BC)) bc_x += r.reaction[2 * n];
    CHECK(std::abs(total_x) <= 1e-9 * std::abs(bc_x));
    // Resultant on BC per unit length equals the volume-averaged sx.
    CHECK(bc_x / 200.0 == doctest::Approx(rve_stress(r, groups).sx).epsilon(1e-8));
}

TEST_CASE("load kind must match the model") {
    const auto m = mesh::structured_grid(10.0, 4);
    const PlaneStrainModel model(m, PhaseMaterials{}, LoadKind::Displacement);
    CHECK_THROWS_AS(model.solve({TractionLoad{1, 0, 0}}), std::invalid_argument);
}

TEST_CASE("effective modulus of homogeneous plates") {
    const auto m = mesh::structured_grid(200.0, 10);
    for (bool fiber : {false, true}) {
        PhaseMaterials mats;
        if (fiber) mats.matrix = mats.fiber;
        const auto& mat = mats.matrix;
        const auto em = effective_modulus(m, mats);
        const double expected = mat.E / (1 - mat.nu * mat.nu);
        CHECK(std::abs(em.e22 - expected) <= 0.005 * expected);
        CHECK(em.e22 == doctest::Approx(expected).epsilon(1e-9));
        CHECK(em.nu23 == doctest::Approx(mat.nu / (1 - mat.nu)).epsilon(1e-9));
    }
    CHECK(4.09e5 / (1 - 0.387 * 0.387) == doctest::Approx(4.81e5).epsilon(0.001));
    CHECK(2.25e6 / (1 - 0.25 * 0.25) == doctest::Approx(2.40e6).epsilon(0.001));
}

TEST_CASE("principal stresses") {
    auto p = principal_stresses({0, 0, 0, 300});
    CHECK(p[0] == doctest::Approx(-300));
    CHECK(p[1] == doctest::Approx(0));
    CHECK(p[2] == doctest::Approx(300));
    p = principal_stresses({1000, 0, 387, 0});
    CHECK(p == std::array<double, 3>{0, 387, 1000});

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-5000, 5000);
    for (int i = 0; i < 200; ++i) {
        const StressTensor4 s{u(rng), u(rng), u(rng), u(rng)};
        Eigen::Matrix3d T;
        T << s.sx, s.txy, 0, s.txy, s.sy, 0, 0, 0, s.sz;
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(T);
        const auto ev = es.eigenvalues();
        const auto got = principal_stresses(s);
        const double scale = ev.cwiseAbs().maxCoeff();
        for (int k = 0; k < 3; ++k) CHECK(std::abs(got[k] - ev[k]) <= 1e-9 * scale);
    }
}

TEST_CASE("volume averaging and nested homogenization") {
    const std::vector<double> values{4, 8};
    const std::vector<double> volumes{1, 3};
    CHECK(volume_average<double>(values, volumes, std::vector<std::size_t>{0, 1}) == doctest::Approx(7.0));
    CHECK(homogenize<double>(values, volumes, ElementGroups{{0, 1}}) == doctest::Approx(7.0));
    CHECK(homogenize<double>(values, volumes, ElementGroups{{0}, {1}}) == doctest::Approx(7.0));
    CHECK_THROWS_AS(volume_average<double>(values, volumes, std::vector<std::size_t>{}), EmptyRegion);

    const std::vector<StressTensor4> uniform(5, StressTensor4{1, 2, 3, 4});
    const std::vector<double> vol5{1, 2, 3, 4, 5};
    CHECK(homogenize<StressTensor4>(uniform, vol5, ElementGroups{{0, 2}, {1, 3, 4}}).sx == doctest::Approx(1.0));

    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.1, 10.0);
    std::vector<double> v(50), w(50);
    ElementGroups groups(3);
    for (std::size_t i = 0; i < 50; ++i) {
        v[i] = u(rng);
        w[i] = u(rng);
        groups[i % 3].push_back(i);
    }
    double num = 0, den = 0;
    for (std::size_t i = 0; i < 50; ++i) num += v[i] * w[i], den += w[i];
    CHECK(homogenize<double>(v, w, groups) == doctest::Approx(num / den).epsilon(1e-12));
}
