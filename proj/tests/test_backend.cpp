#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "helpers.hpp"
#include "qpragma/lowering.hpp"

using namespace qpragma;
using qptest::apply_all;
using qptest::identity;
using qptest::Matrix;
using qptest::max_entry_delta;
using qptest::unitary_of;

TEST_CASE("single-qubit gate matrices act correctly on |0> and |1>") {
    const double h = 1.0 / std::sqrt(2.0);
    Matrix m = unitary_of({QInstr::make_gate(Gate::H, {0})}, 1);
    CHECK(std::abs(m[0][0] - cplx{h, 0}) < 1e-12);
    CHECK(std::abs(m[1][1] - cplx{-h, 0}) < 1e-12);
    m = unitary_of({QInstr::make_gate(Gate::Y, {0})}, 1);
    CHECK(std::abs(m[1][0] - cplx{0, 1}) < 1e-12);
    CHECK(std::abs(m[0][1] - cplx{0, -1}) < 1e-12);
    m = unitary_of({QInstr::make_gate(Gate::PH, {0}, 1.25)}, 1);
    CHECK(std::abs(m[1][1] - std::polar(1.0, 1.25)) < 1e-12);
}

TEST_CASE("controlled application equals the block unitary") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> angle(-3.0, 3.0);
    for (int trial = 0; trial < 20; ++trial) {
        double a = angle(rng);
        Sequence u = {QInstr::make_gate(Gate::RY, {0}, a)};
        Matrix small = unitary_of(u, 1);
        QInstr c = QInstr::make_gate(Gate::RY, {0}, a);
        c.ctrls = {1};
        Matrix big = unitary_of({c}, 2);
        // basis index: target at bit 0, control at bit 1
        Matrix expect = identity(4);
        for (int r = 0; r < 2; ++r)
            for (int col = 0; col < 2; ++col) expect[2 + r][2 + col] = small[r][col];
        CHECK(max_entry_delta(big, expect) < 1e-12);
    }
}

TEST_CASE("norm is preserved across long random circuits") {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<std::uint32_t> q(0, 3);
    std::uniform_real_distribution<double> angle(-3.0, 3.0);
    StateVector sv(8);
    sv.alloc({0, 1, 2, 3});
    for (int i = 0; i < 2000; ++i) {
        switch (i % 5) {
            case 0: sv.apply(QInstr::make_gate(Gate::H, {q(rng)})); break;
            case 1: sv.apply(QInstr::make_gate(Gate::RX, {q(rng)}, angle(rng))); break;
            case 2: sv.apply(QInstr::make_gate(Gate::T, {q(rng)})); break;
            case 3: {
                std::uint32_t a = q(rng), b = q(rng);
                if (a != b) sv.apply(QInstr::make_gate(Gate::CNOT, {a, b}));
                break;
            }
            default: sv.apply(QInstr::make_gate(Gate::PH, {q(rng)}, angle(rng))); break;
        }
    }
    CHECK(std::abs(sv.norm2() - 1.0) < 1e-9);
}

TEST_CASE("U followed by dagger(U) restores the state") {
    std::mt19937_64 rng(6);
    std::uniform_int_distribution<std::uint32_t> q(0, 2);
    std::uniform_real_distribution<double> angle(-3.0, 3.0);
    for (int trial = 0; trial < 50; ++trial) {
        Sequence s;
        for (int i = 0; i < 15; ++i) {
            int k = static_cast<int>(rng() % 4);
            if (k == 0) s.push_back(QInstr::make_gate(Gate::H, {q(rng)}));
            if (k == 1) s.push_back(QInstr::make_gate(Gate::S, {q(rng)}));
            if (k == 2) s.push_back(QInstr::make_gate(Gate::RZ, {q(rng)}, angle(rng)));
            if (k == 3) {
                std::uint32_t a = q(rng), b = q(rng);
                if (a != b) s.push_back(QInstr::make_gate(Gate::CNOT, {a, b}));
            }
        }
        Sequence round = s;
        for (auto& i : dagger(s)) round.push_back(i);
        CHECK(max_entry_delta(unitary_of(round, 3), identity(8)) < 1e-10);
    }
}

TEST_CASE("RY(pi/3) leaves |0> overlap 0.75") {
    StateVector sv(2);
    sv.alloc({0});
    sv.apply(QInstr::make_gate(Gate::RY, {0}, kPi / 3.0));
    CHECK(sv.overlap_zero({0}) == Catch::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("permutation instructions agree with Draper circuits on 4 bits") {
    std::vector<std::uint32_t> reg = {0, 1, 2, 3};
    for (std::uint64_t c = 0; c < 16; ++c) {
        PermSpec spec;
        spec.kind = PermKind::add_const;
        spec.c = c;
        Matrix perm = unitary_of({QInstr::make_perm(spec, reg)}, 4);
        Matrix draper = unitary_of(lower_add_const(reg, c, +1), 4);
        INFO("c = " << c);
        CHECK(max_entry_delta(perm, draper) < 1e-9);
    }
}

TEST_CASE("measure collapses and is reproducible for a fixed seed") {
    auto run_once = [](std::uint64_t seed) {
        std::mt19937_64 rng(seed);
        StateVector sv(4);
        sv.alloc({0, 1});
        sv.apply(QInstr::make_gate(Gate::H, {0}));
        sv.apply(QInstr::make_gate(Gate::CNOT, {0, 1}));
        return sv.measure({0, 1}, rng);
    };
    auto a = run_once(3), b = run_once(3);
    CHECK(a == b);
    CHECK(a[0] == a[1]);  // Bell correlation
}

TEST_CASE("release reports the prior zero overlap and projects leftovers") {
    std::mt19937_64 rng(9);
    StateVector sv(4);
    sv.alloc({0, 1});
    sv.apply(QInstr::make_gate(Gate::H, {0}));
    double p = sv.release({0}, rng);
    CHECK(p == Catch::Approx(0.5));
    CHECK(sv.live_qubits() == 1);
    CHECK(std::abs(sv.norm2() - 1.0) < 1e-12);
}

TEST_CASE("qubit budget is enforced") {
    StateVector sv(2);
    sv.alloc({0, 1});
    CHECK_THROWS_AS(sv.alloc({2}), ExecError);
}

TEST_CASE("gates on dead addresses are rejected") {
    StateVector sv(2);
    sv.alloc({0});
    CHECK_THROWS_AS(sv.apply(QInstr::make_gate(Gate::X, {7})), ExecError);
}
