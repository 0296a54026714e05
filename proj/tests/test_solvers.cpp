#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "thermnet/network.hpp"
#include "thermnet/solvers.hpp"

using namespace thermnet;

namespace {

constexpr double sigma = 5.670374419e-8;

Model quartic_model() {
    Model m;
    ThermalNode n;
    n.id = "plate";
    n.kind = NodeKind::diffusion;
    n.capacity = 100.0;
    n.temperature = 150.0;
    m.nodes.push_back(n);
    RadCouplingMatrix rc;
    rc.entries.push_back({"plate", "space", 0.01, 0.0});
    m.rad_couplings = rc;
    HeatLoad l;
    l.node = "plate";
    l.power = 1.0;
    m.loads.push_back(l);
    validate_model(m);
    return m;
}

Model conduction_chain_model() {
    Model m;
    MaterialTable t;
    t.name = "k1";
    t.conductivity = {{1.0, 1.0}};
    t.specific_heat = {{1.0, 100.0}};
    m.materials.push_back(t);
    ThermalNode a;
    a.id = "hot";
    a.kind = NodeKind::boundary;
    a.temperature = 293.15;
    m.nodes.push_back(a);
    ThermalNode b;
    b.id = "cold";
    b.kind = NodeKind::boundary;
    b.temperature = 30.0;
    m.nodes.push_back(b);
    const ChainSegment seg = subdivide_chain(1.0, 1e-3, "k1", 7, "hot", "cold", 0.7, "c");
    for (const auto& nd : seg.nodes) m.nodes.push_back(nd);
    for (const auto& cd : seg.conductors) m.conductors.push_back(cd);
    validate_model(m);
    return m;
}

Model lowpass_model(double C = 100.0, double gl = 1.0, double t_boundary = 100.0,
                    double t_start = 110.0) {
    Model m;
    ThermalNode b;
    b.id = "drive";
    b.kind = NodeKind::boundary;
    b.temperature = t_boundary;
    m.nodes.push_back(b);
    ThermalNode n;
    n.id = "mass";
    n.kind = NodeKind::diffusion;
    n.capacity = C;
    n.temperature = t_start;
    m.nodes.push_back(n);
    Conductor c;
    c.id = "link";
    c.node_a = "drive";
    c.node_b = "mass";
    c.gl = gl;
    m.conductors.push_back(c);
    validate_model(m);
    return m;
}

double quartic_equilibrium() { return std::pow(1.0 / (sigma * 0.01) + 81.0, 0.25); }

}  // namespace

TEST_CASE("steady Newton: closed-form quartic equilibrium") {
    const Model m = quartic_model();
    const Network net(m);
    const SteadyResult res = solve_steady_newton(net);
    CHECK(res.temperatures[net.node_index("plate")] ==
          Catch::Approx(quartic_equilibrium()).margin(1e-6));
    CHECK(res.temperatures[net.node_index("plate")] == Catch::Approx(204.93).margin(0.01));
}

TEST_CASE("steady Newton: linear problems solve in one step") {
    const Model m = conduction_chain_model();
    const Network net(m);
    const SteadyResult res = solve_steady_newton(net);
    CHECK(res.iterations <= 3);
    // linear profile check at the middle node
    const double x_mid = 0.5;
    CHECK(res.temperatures[net.node_index("c4")] ==
          Catch::Approx(293.15 + x_mid * (30.0 - 293.15)).margin(1e-6));
}

TEST_CASE("steady Newton: symmetric radiative pair stays symmetric") {
    Model m;
    for (const char* id : {"a", "b"}) {
        ThermalNode n;
        n.id = id;
        n.kind = NodeKind::diffusion;
        n.capacity = 10.0;
        n.temperature = 120.0;
        m.nodes.push_back(n);
    }
    RadCouplingMatrix rc;
    rc.entries.push_back({"a", "b", 0.05, 0.0});
    rc.entries.push_back({"a", "space", 0.02, 0.0});
    rc.entries.push_back({"b", "space", 0.02, 0.0});
    m.rad_couplings = rc;
    for (const char* id : {"a", "b"}) {
        HeatLoad l;
        l.node = id;
        l.power = 0.5;
        m.loads.push_back(l);
    }
    validate_model(m);
    const Network net(m);
    const SteadyResult res = solve_steady_newton(net);
    CHECK(res.temperatures[net.node_index("a")] ==
          Catch::Approx(res.temperatures[net.node_index("b")]).epsilon(1e-12));
}

TEST_CASE("steady Newton: singular Jacobian names the isolated node") {
    Model m;
    ThermalNode n;
    n.id = "adrift";
    n.kind = NodeKind::diffusion;
    n.capacity = 5.0;
    n.temperature = 100.0;
    m.nodes.push_back(n);
    validate_model(m);
    const Network net(m);
    try {
        solve_steady_newton(net);
        FAIL("expected SolveError");
    } catch (const SolveError& e) {
        CHECK(std::string(e.what()).find("adrift") != std::string::npos);
        CHECK_FALSE(e.best_state.empty());
    }
}

TEST_CASE("iterative solver agrees with Newton") {
    SECTION("quartic model") {
        const Model m = quartic_model();
        const Network net(m);
        const SteadyResult a = solve_steady_newton(net);
        const SteadyResult b = solve_steady_iterative(net);
        CHECK(std::abs(a.temperatures[net.node_index("plate")] -
                       b.temperatures[net.node_index("plate")]) < 1e-3);
    }
    SECTION("linear chain converges undamped") {
        const Model m = conduction_chain_model();
        const Network net(m);
        SolveOptions opt;
        opt.damping = 1.0;
        const SteadyResult a = solve_steady_newton(net);
        const SteadyResult b = solve_steady_iterative(net, {}, opt);
        for (int i = 0; i < net.node_count(); ++i)
            CHECK(std::abs(a.temperatures[i] - b.temperatures[i]) < 1e-3);
    }
    SECTION("radiative pair") {
        Model m;
        ThermalNode n;
        n.id = "a";
        n.kind = NodeKind::diffusion;
        n.capacity = 10.0;
        n.temperature = 150.0;
        m.nodes.push_back(n);
        ThermalNode b;
        b.id = "hot";
        b.kind = NodeKind::boundary;
        b.temperature = 293.15;
        m.nodes.push_back(b);
        RadCouplingMatrix rc;
        rc.entries.push_back({"a", "hot", 0.03, 0.0});
        rc.entries.push_back({"a", "space", 0.04, 0.0});
        m.rad_couplings = rc;
        validate_model(m);
        const Network net(m);
        const SteadyResult x = solve_steady_newton(net);
        const SteadyResult y = solve_steady_iterative(net);
        CHECK(std::abs(x.temperatures[net.node_index("a")] -
                       y.temperatures[net.node_index("a")]) < 1e-3);
    }
}

TEST_CASE("arithmetic node closure") {
    SECTION("isothermal bath") {
        Model m;
        ThermalNode a;
        a.id = "tv";
        a.kind = NodeKind::arithmetic;
        m.nodes.push_back(a);
        ThermalNode w1;
        w1.id = "w1";
        w1.kind = NodeKind::boundary;
        w1.temperature = 300.0;
        m.nodes.push_back(w1);
        ThermalNode w2 = w1;
        w2.id = "w2";
        m.nodes.push_back(w2);
        RadCouplingMatrix rc;
        rc.entries.push_back({"tv", "w1", 1.0, 0.0});
        rc.entries.push_back({"tv", "w2", 1.0, 0.0});
        m.rad_couplings = rc;
        validate_model(m);
        const Network net(m);
        std::vector<double> T = net.initial_state();
        close_arithmetic_nodes(net, T, 0.0);
        CHECK(T[net.node_index("tv")] == Catch::Approx(300.0).margin(1e-9));
    }
    SECTION("radiative mean of hot and cold baths") {
        Model m;
        ThermalNode a;
        a.id = "tv";
        a.kind = NodeKind::arithmetic;
        m.nodes.push_back(a);
        ThermalNode hot;
        hot.id = "hot";
        hot.kind = NodeKind::boundary;
        hot.temperature = 400.0;
        m.nodes.push_back(hot);
        ThermalNode cold;
        cold.id = "cold";
        cold.kind = NodeKind::boundary;
        cold.temperature = 1e-3;  // stands in for the 0 K limit
        m.nodes.push_back(cold);
        RadCouplingMatrix rc;
        rc.entries.push_back({"tv", "hot", 1.0, 0.0});
        rc.entries.push_back({"tv", "cold", 1.0, 0.0});
        m.rad_couplings = rc;
        validate_model(m);
        const Network net(m);
        std::vector<double> T = net.initial_state();
        close_arithmetic_nodes(net, T, 0.0);
        CHECK(T[net.node_index("tv")] ==
              Catch::Approx(std::pow(0.5 * std::pow(400.0, 4), 0.25)).margin(1e-6));
        CHECK(T[net.node_index("tv")] == Catch::Approx(336.36).margin(0.01));
    }
    SECTION("conductive ties average linearly") {
        Model m;
        ThermalNode a;
        a.id = "tv";
        a.kind = NodeKind::arithmetic;
        m.nodes.push_back(a);
        ThermalNode x;
        x.id = "x";
        x.kind = NodeKind::boundary;
        x.temperature = 100.0;
        m.nodes.push_back(x);
        ThermalNode y;
        y.id = "y";
        y.kind = NodeKind::boundary;
        y.temperature = 200.0;
        m.nodes.push_back(y);
        for (const char* other : {"x", "y"}) {
            Conductor c;
            c.id = std::string("c_") + other;
            c.node_a = "tv";
            c.node_b = other;
            c.gl = 1.0;
            m.conductors.push_back(c);
        }
        validate_model(m);
        const Network net(m);
        std::vector<double> T = net.initial_state();
        close_arithmetic_nodes(net, T, 0.0);
        CHECK(T[net.node_index("tv")] == Catch::Approx(150.0).margin(1e-9));
    }
}

TEST_CASE("transient: analytic first-order decay") {
    // tau = C/GL = 100 s; offset decays to 1/e at t = tau
    const Model m = lowpass_model();
    const Network net(m);
    for (SolveMethod method : {SolveMethod::crank_nicolson, SolveMethod::bdf}) {
        SolveOptions opt;
        opt.method = method;
        opt.output_every = 10.0;
        const TransientResult tr = solve_transient(net, {}, 0.0, 100.0, opt);
        const double T_end = tr.temperatures.back()[net.node_index("mass")];
        CHECK(T_end - 100.0 == Catch::Approx(10.0 * std::exp(-1.0)).epsilon(1e-3));
        for (std::size_t k = 1; k < tr.times.size(); ++k) {
            CHECK(tr.times[k] > tr.times[k - 1]);
            for (double v : tr.temperatures[k]) CHECK(v > 0.0);
        }
    }
}

TEST_CASE("transient: zero-length span returns the initial state") {
    const Model m = lowpass_model();
    const Network net(m);
    const TransientResult tr = solve_transient(net, {}, 0.0, 0.0);
    REQUIRE(tr.times.size() == 1);
    CHECK(tr.temperatures[0][net.node_index("mass")] == 110.0);
}

TEST_CASE("transient: radiative cool-down matches a tight-tolerance reference") {
    Model m = quartic_model();
    m.loads.clear();
    validate_model(m);
    const Network net(m);
    std::vector<double> T0 = net.initial_state();
    T0[net.node_index("plate")] = 300.0;

    SolveOptions tight;
    tight.method = SolveMethod::bdf;
    tight.error_tol_abs = 1e-8;
    tight.error_tol_rel = 1e-10;
    const TransientResult ref = solve_transient(net, T0, 0.0, 5000.0, tight);

    for (SolveMethod method : {SolveMethod::crank_nicolson, SolveMethod::bdf}) {
        SolveOptions opt;
        opt.method = method;
        const TransientResult tr = solve_transient(net, T0, 0.0, 5000.0, opt);
        CHECK(std::abs(tr.temperatures.back()[net.node_index("plate")] -
                       ref.temperatures.back()[net.node_index("plate")]) < 1e-3);
    }
}

TEST_CASE("transient: radiative cool-down matches the dt/100 fixed-step reference") {
    Model m = quartic_model();
    m.loads.clear();
    validate_model(m);
    const Network net(m);
    std::vector<double> T0 = net.initial_state();
    T0[net.node_index("plate")] = 300.0;
    auto run_fixed = [&](SolveMethod method, double dt) {
        SolveOptions opt;
        opt.method = method;
        opt.adaptive = false;
        opt.dt_initial = dt;
        return solve_transient(net, T0, 0.0, 2000.0, opt)
            .temperatures.back()[net.node_index("plate")];
    };
    for (SolveMethod method : {SolveMethod::crank_nicolson, SolveMethod::bdf}) {
        const double coarse = run_fixed(method, 10.0);
        const double ref = run_fixed(method, 0.1);
        CHECK(std::abs(coarse - ref) < 1e-3);
    }
}

TEST_CASE("transient: fixed-step Crank-Nicolson converges at second order") {
    const Model m = lowpass_model();
    const Network net(m);
    auto run_fixed = [&](double dt) {
        SolveOptions opt;
        opt.method = SolveMethod::crank_nicolson;
        opt.adaptive = false;
        opt.dt_initial = dt;
        const TransientResult tr = solve_transient(net, {}, 0.0, 80.0, opt);
        return tr.temperatures.back()[net.node_index("mass")];
    };
    const double exact = 100.0 + 10.0 * std::exp(-0.8);
    const double e1 = std::abs(run_fixed(4.0) - exact);
    const double e2 = std::abs(run_fixed(2.0) - exact);
    const double e3 = std::abs(run_fixed(1.0) - exact);
    CHECK(e1 / e2 == Catch::Approx(4.0).margin(1.0));
    CHECK(e2 / e3 == Catch::Approx(4.0).margin(1.0));
}

TEST_CASE("transient: halving the error tolerance at least halves the deviation") {
    Model m = quartic_model();
    m.loads.clear();
    validate_model(m);
    const Network net(m);
    std::vector<double> T0 = net.initial_state();
    T0[net.node_index("plate")] = 300.0;

    SolveOptions tight;
    tight.method = SolveMethod::bdf;
    tight.error_tol_abs = 1e-9;
    tight.error_tol_rel = 1e-12;
    const double ref =
        solve_transient(net, T0, 0.0, 3000.0, tight).temperatures.back()[net.node_index("plate")];

    auto deviation = [&](double tol) {
        SolveOptions opt;
        opt.method = SolveMethod::bdf;
        opt.error_tol_abs = tol;
        opt.error_tol_rel = 0.0;
        return std::abs(
            solve_transient(net, T0, 0.0, 3000.0, opt).temperatures.back()[net.node_index("plate")] -
            ref);
    };
    const double d1 = deviation(1e-2);
    const double d2 = deviation(5e-3);
    CHECK(d2 <= 0.5 * d1 * 1.2);  // order >= 1 with 20% slack
}

TEST_CASE("transient: monotone cool-down without overshoot") {
    const Model m = conduction_chain_model();
    const Network net(m);
    std::vector<double> T0 = net.initial_state();
    // start hot everywhere; all interior temperatures must decay monotonically
    for (int i = 0; i < net.node_count(); ++i)
        if (m.nodes[i].kind == NodeKind::diffusion) T0[i] = 293.15;

    Model cold = m;
    for (auto& n : cold.nodes)
        if (n.id == "hot") n.temperature = 30.0;  // both ends cold now
    validate_model(cold);
    const Network cnet(cold);
    SolveOptions opt;
    opt.method = SolveMethod::crank_nicolson;
    opt.output_every = 50.0;
    const TransientResult tr = solve_transient(cnet, T0, 0.0, 5000.0, opt);
    for (int i : cnet.diffusion_nodes()) {
        for (std::size_t k = 1; k < tr.times.size(); ++k)
            CHECK(tr.temperatures[k][i] <= tr.temperatures[k - 1][i] + 1e-9);
    }
}

TEST_CASE("transient to steady consistency") {
    const Model m = quartic_model();
    const Network net(m);
    SolveOptions opt;
    opt.method = SolveMethod::bdf;
    opt.stop_rate = 1e-8;
    opt.dt_max = 1e7;
    const TransientResult tr = solve_transient(net, {}, 0.0, 1e9, opt);
    REQUIRE(tr.stopped_on_rate);
    const SteadyResult st = solve_steady_newton(net);
    CHECK(std::abs(tr.temperatures.back()[net.node_index("plate")] -
                   st.temperatures[net.node_index("plate")]) < 0.01);
}

TEST_CASE("transient with arithmetic node tracks the closure") {
    // diffusion node cools; arithmetic node follows instantaneously
    Model m;
    ThermalNode d;
    d.id = "mass";
    d.kind = NodeKind::diffusion;
    d.capacity = 50.0;
    d.temperature = 300.0;
    m.nodes.push_back(d);
    ThermalNode a;
    a.id = "tv";
    a.kind = NodeKind::arithmetic;
    m.nodes.push_back(a);
    RadCouplingMatrix rc;
    rc.entries.push_back({"mass", "space", 0.02, 0.0});
    rc.entries.push_back({"tv", "mass", 0.5, 0.0});
    rc.entries.push_back({"tv", "space", 0.5, 0.0});
    m.rad_couplings = rc;
    validate_model(m);
    const Network net(m);
    SolveOptions opt;
    opt.method = SolveMethod::bdf;
    opt.output_every = 100.0;
    const TransientResult tr = solve_transient(net, {}, 0.0, 2000.0, opt);
    for (std::size_t k = 0; k < tr.times.size(); ++k) {
        const double tm = tr.temperatures[k][net.node_index("mass")];
        const double tv = tr.temperatures[k][net.node_index("tv")];
        const double expect = std::pow(0.5 * (std::pow(tm, 4) + 81.0), 0.25);
        CHECK(tv == Catch::Approx(expect).margin(1e-6));
    }
}

TEST_CASE("Crank-Nicolson and BDF agree within ten times the error tolerance") {
    // the smaller shipped-style models; the full example model is covered by
    // the acceptance run
    for (int variant = 0; variant < 2; ++variant) {
        Model m = variant == 0 ? quartic_model() : lowpass_model(100.0, 1.0, 100.0, 260.0);
        const Network net(m);
        SolveOptions opt;
        opt.output_every = 100.0;
        opt.method = SolveMethod::crank_nicolson;
        const TransientResult cn = solve_transient(net, {}, 0.0, 3000.0, opt);
        opt.method = SolveMethod::bdf;
        const TransientResult bdf = solve_transient(net, {}, 0.0, 3000.0, opt);
        REQUIRE(cn.times.size() == bdf.times.size());
        for (std::size_t k = 0; k < cn.times.size(); ++k)
            for (int i : net.diffusion_nodes()) {
                const double allow =
                    10.0 * (opt.error_tol_abs +
                            opt.error_tol_rel * std::abs(bdf.temperatures[k][i]));
                CHECK(std::abs(cn.temperatures[k][i] - bdf.temperatures[k][i]) < allow);
            }
    }
}

TEST_CASE("transient step underflow reports diagnostic state") {
    const Model m = lowpass_model();
    const Network net(m);
    SolveOptions opt;
    opt.dt_min = 10.0;
    opt.dt_max = 10.0;
    opt.dt_initial = 10.0;
    opt.error_tol_abs = 1e-16;  // unreachable: forces rejection at dt_min
    opt.error_tol_rel = 0.0;
    try {
        solve_transient(net, {}, 0.0, 100.0, opt);
        FAIL("expected SolveError");
    } catch (const SolveError& e) {
        CHECK(std::string(e.what()).find("underflow") != std::string::npos);
        CHECK_FALSE(e.best_state.empty());
    }
}
