#include "gkpsim/logical.hpp"
#include "gkpsim/units.hpp"

#include <doctest.h>

#include <cmath>

using namespace gkpsim;

TEST_CASE("crenellation") {
    CHECK(crenellation(0.0) == 1.0);
    CHECK(crenellation(1.2) == -1.0);
    CHECK(crenellation(-2.1) == 1.0);
    CHECK(crenellation(0.5) == 0.0);
}

TEST_CASE("codewords read out as the expected Bloch vectors") {
    QuadratureGrid g = build_grid(1024, 16.0);
    const double var = 0.004, kappa = 3.0;
    struct Case {
        Codeword w;
        double x, y, z;
    };
    for (Case c : {Case{Codeword::PlusX, 1, 0, 0}, Case{Codeword::MinusX, -1, 0, 0}, Case{Codeword::PlusZ, 0, 0, 1},
                   Case{Codeword::MinusZ, 0, 0, -1}, Case{Codeword::PlusY, 0, 1, 0}}) {
        Readout r = measure_logicals(codeword(g, c.w, kappa, var), g);
        CHECK(r.bloch.x == doctest::Approx(c.x).epsilon(0.02));
        CHECK(r.bloch.y == doctest::Approx(c.y).epsilon(0.02));
        CHECK(r.bloch.z == doctest::Approx(c.z).epsilon(0.02));
        CHECK(r.edge_probability < 1e-12);
    }
}

TEST_CASE("Pauli operators flip the conjugate axis") {
    QuadratureGrid g = build_grid(1024, 16.0);
    StateVector px = codeword(g, Codeword::PlusX, 3.0, 0.004);
    CHECK(measure_logicals(apply_sigma_z(g, px), g).bloch.x == doctest::Approx(-measure_logicals(px, g).bloch.x));
    StateVector pz = codeword(g, Codeword::PlusZ, 3.0, 0.004);
    CHECK(measure_logicals(apply_sigma_x(g, pz), g).bloch.z == doctest::Approx(-measure_logicals(pz, g).bloch.z));
}

TEST_CASE("fidelity and targets") {
    BlochVector x{1, 0, 0};
    CHECK(fidelity(x, x) == 1.0);
    CHECK(fidelity(x, {-1, 0, 0}) == 0.0);
    BlochVector t = target_state(x, 1);
    CHECK(std::atan2(t.y, t.x) == doctest::Approx(units::pi / 8));
    BlochVector td = target_state(x, -1);
    CHECK(std::atan2(td.y, td.x) == doctest::Approx(-units::pi / 8));
}

TEST_CASE("Clifford frames") {
    Eigen::Matrix3d H = frame_hadamard();
    CHECK((H * H - Eigen::Matrix3d::Identity()).norm() < 1e-15);
    CHECK((frame_s_dagger(4) - Eigen::Matrix3d::Identity()).norm() < 1e-14);
    CHECK((frame_s_dagger(1) * frame_s_dagger(3) - Eigen::Matrix3d::Identity()).norm() < 1e-14);
    Eigen::Vector3d y = frame_s_dagger(1) * Eigen::Vector3d(1, 0, 0);
    CHECK(y[1] == doctest::Approx(-1.0));
}

TEST_CASE("edge probability counts the outer band") {
    QuadratureGrid g = build_grid(64, 2.0);
    StateVector psi = StateVector::Zero(64);
    psi[0] = 1.0;
    CHECK(edge_probability(g, psi) == doctest::Approx(1.0));
    psi[0] = 0.0;
    psi[32] = 1.0;
    CHECK(edge_probability(g, psi) == 0.0);
}
