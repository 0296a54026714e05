#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "thermnet/model.hpp"
#include "thermnet/radiative.hpp"

using namespace thermnet;

namespace {

ThermalNode boundary(const std::string& id, double T = 300.0) {
    ThermalNode n;
    n.id = id;
    n.kind = NodeKind::boundary;
    n.temperature = T;
    return n;
}

SurfaceFace rect_face(const std::string& id, const std::string& node, double w, double h,
                      Vec3 origin, Vec3 axis, double alpha = 1.0, double eps = 1.0) {
    SurfaceFace f;
    f.id = id;
    f.node = node;
    f.primitive.kind = PrimitiveKind::rectangle;
    f.primitive.p0 = w;
    f.primitive.p1 = h;
    f.primitive.frame = make_frame(origin, axis);
    f.alpha = alpha;
    f.epsilon = eps;
    return f;
}

SurfaceFace disc_face(const std::string& id, const std::string& node, double r, Vec3 origin,
                      Vec3 axis, double alpha = 1.0, double eps = 1.0) {
    SurfaceFace f;
    f.id = id;
    f.node = node;
    f.primitive.kind = PrimitiveKind::disc;
    f.primitive.p0 = r;
    f.primitive.frame = make_frame(origin, axis);
    f.alpha = alpha;
    f.epsilon = eps;
    return f;
}

// closed unit cube, all faces pointing inward
Model cube_model(double alpha = 1.0) {
    Model m;
    m.nodes.push_back(boundary("walls"));
    const double h = 0.5;
    m.faces.push_back(rect_face("floor", "walls", 1, 1, {0, 0, -h}, {0, 0, 1}, alpha));
    m.faces.push_back(rect_face("ceiling", "walls", 1, 1, {0, 0, h}, {0, 0, -1}, alpha));
    m.faces.push_back(rect_face("west", "walls", 1, 1, {-h, 0, 0}, {1, 0, 0}, alpha));
    m.faces.push_back(rect_face("east", "walls", 1, 1, {h, 0, 0}, {-1, 0, 0}, alpha));
    m.faces.push_back(rect_face("south", "walls", 1, 1, {0, -h, 0}, {0, 1, 0}, alpha));
    m.faces.push_back(rect_face("north", "walls", 1, 1, {0, h, 0}, {0, -1, 0}, alpha));
    validate_model(m);
    return m;
}

Model coax_disc_model(double r1, double r2, double h) {
    Model m;
    m.nodes.push_back(boundary("a"));
    m.nodes.push_back(boundary("b"));
    m.faces.push_back(disc_face("disc1", "a", r1, {0, 0, 0}, {0, 0, 1}));
    m.faces.push_back(disc_face("disc2", "b", r2, {0, 0, h}, {0, 0, -1}));
    validate_model(m);
    return m;
}

double entry_gr(const RadCouplingMatrix& m, const std::string& a, const std::string& b) {
    for (const auto& e : m.entries)
        if ((e.a == a && e.b == b) || (m.symmetrized && e.a == b && e.b == a)) return e.gr;
    return 0.0;
}

double entry_stderr(const RadCouplingMatrix& m, const std::string& a, const std::string& b) {
    for (const auto& e : m.entries)
        if ((e.a == a && e.b == b) || (m.symmetrized && e.a == b && e.b == a))
            return e.stderr_est;
    return 0.0;
}

}  // namespace

TEST_CASE("analytic coaxial-disc view factor") {
    // X = 6 -> F = 3 - 2 sqrt(2)
    CHECK(analytic_view_factor_coaxial_discs(0.5, 0.5, 1.0) ==
          Catch::Approx(3.0 - 2.0 * std::sqrt(2.0)).epsilon(1e-12));
    CHECK(analytic_view_factor_coaxial_discs(0.5, 0.5, 1.0) == Catch::Approx(0.17157).margin(5e-6));
    // receiver fills the hemisphere
    CHECK(analytic_view_factor_coaxial_discs(0.1, 100.0, 1.0) == Catch::Approx(1.0).margin(1e-3));
    // far field: F ~ (r2/h)^2
    CHECK(analytic_view_factor_coaxial_discs(0.5, 0.5, 100.0) ==
          Catch::Approx(2.5e-5).epsilon(0.1));
}

TEST_CASE("emission from a back side points against the front normal") {
    Model m;
    m.nodes.push_back(boundary("n"));
    SurfaceFace f = rect_face("f", "n", 1, 1, {0, 0, 0}, {0, 0, 1});
    f.side = FaceSide::back;
    m.faces.push_back(f);
    validate_model(m);
    const Scene scene = Scene::from_model(m);
    CounterRng rng(5);
    for (int i = 0; i < 1000; ++i) {
        const Ray r = sample_emission(scene, 0, rng);
        CHECK(r.direction.z < 0.0);
    }
}

TEST_CASE("trace terminations") {
    SECTION("black enclosure absorbs at first hit") {
        const Model m = cube_model(1.0);
        const Scene scene = Scene::from_model(m);
        for (int k = 0; k < 500; ++k) {
            CounterRng rng(9, 0, k);
            Ray ray = sample_emission(scene, 0, rng);
            const TraceResult r = trace_ray(scene, ray, rng);
            CHECK(r.kind == TraceResult::Kind::absorbed);
            CHECK(r.bounces == 0);
        }
    }
    SECTION("half-absorbing plate: binomial statistics") {
        Model m;
        m.nodes.push_back(boundary("n"));
        m.faces.push_back(rect_face("plate", "n", 1, 1, {0, 0, 0}, {0, 0, 1}, 0.5));
        validate_model(m);
        const Scene scene = Scene::from_model(m);
        const int N = 100000;
        int absorbed = 0;
        for (int k = 0; k < N; ++k) {
            CounterRng rng(13, 0, k);
            Ray ray{{0.0, 0.0, 1.0}, {0.0, 0.0, -1.0}, 0, 1.0};
            if (trace_ray(scene, ray, rng).kind == TraceResult::Kind::absorbed) ++absorbed;
        }
        const double frac = static_cast<double>(absorbed) / N;
        CHECK(std::abs(frac - 0.5) < 3.0 * std::sqrt(0.25 / N));
    }
    SECTION("empty scene escapes") {
        Model m;
        m.nodes.push_back(boundary("n"));
        validate_model(m);
        const Scene scene = Scene::from_model(m);
        CounterRng rng(1);
        Ray ray{{0, 0, 0}, {0, 0, 1}, -1, 1.0};
        CHECK(trace_ray(scene, ray, rng).kind == TraceResult::Kind::escaped);
    }
}

TEST_CASE("exchange factors: coaxial discs against the analytic oracle") {
    TraceOptions opt;
    opt.rays_default = 100000;
    const Model m = coax_disc_model(0.5, 0.5, 1.0);
    const Scene scene = Scene::from_model(m);
    const RadCouplingMatrix mc = compute_exchange_factors(scene, opt);
    const double A = std::numbers::pi * 0.25;
    const double F = analytic_view_factor_coaxial_discs(0.5, 0.5, 1.0);
    const double gr = entry_gr(mc, "disc1", "disc2");
    const double se = entry_stderr(mc, "disc1", "disc2");
    CHECK(std::abs(gr - A * F) < 3.0 * se);

    SECTION("vanishing gap drives F towards 1") {
        const Model close_m = coax_disc_model(0.5, 0.5, 1e-3);
        const RadCouplingMatrix cm =
            compute_exchange_factors(Scene::from_model(close_m), opt);
        CHECK(entry_gr(cm, "disc1", "disc2") / A > 0.997);
    }
}

TEST_CASE("isolated plate with both sides active sends everything to space") {
    Model m;
    m.nodes.push_back(boundary("n"));
    m.faces.push_back(rect_face("front", "n", 1, 1, {0, 0, 0}, {0, 0, 1}));
    SurfaceFace back = rect_face("back", "n", 1, 1, {0, 0, 0}, {0, 0, 1});
    back.id = "back";
    back.side = FaceSide::back;
    m.faces.push_back(back);
    validate_model(m);
    TraceOptions opt;
    opt.rays_default = 20000;
    const RadCouplingMatrix mc = compute_exchange_factors(Scene::from_model(m), opt);
    const double total_space = entry_gr(mc, "front", "space") + entry_gr(mc, "back", "space");
    CHECK(total_space == Catch::Approx(2.0).epsilon(1e-12));
    CHECK(entry_gr(mc, "front", "back") == 0.0);
}

TEST_CASE("symmetrize") {
    SECTION("averages the two directions and preserves bookkeeping") {
        RadCouplingMatrix raw;
        raw.method = "montecarlo";
        raw.area_epsilon = {{"a", 2.0}, {"b", 3.0}};
        raw.rays_used = {{"a", 1000}, {"b", 1000}};
        raw.entries = {{"a", "b", 1.0, 0.01},
                       {"a", "space", 1.0, 0.01},
                       {"b", "a", 1.2, 0.01},
                       {"b", "space", 1.8, 0.01}};
        const RadCouplingMatrix sym = symmetrize(raw);
        CHECK(entry_gr(sym, "a", "b") == Catch::Approx(1.1));
        // space column recomputed to preserve A_i eps_i row sums
        CHECK(entry_gr(sym, "a", "space") == Catch::Approx(2.0 - 1.1).epsilon(1e-12));
        CHECK(entry_gr(sym, "b", "space") == Catch::Approx(3.0 - 1.1).epsilon(1e-12));
    }
    SECTION("a numerically symmetric matrix is a fixed point") {
        RadCouplingMatrix raw;
        raw.method = "montecarlo";
        raw.area_epsilon = {{"a", 2.0}, {"b", 2.0}};
        raw.rays_used = {{"a", 100}, {"b", 100}};
        raw.entries = {{"a", "b", 0.5, 0.0},
                       {"a", "space", 1.5, 0.0},
                       {"b", "a", 0.5, 0.0},
                       {"b", "space", 1.5, 0.0}};
        const RadCouplingMatrix sym = symmetrize(raw);
        CHECK(entry_gr(sym, "a", "b") == 0.5);
        CHECK(entry_gr(sym, "a", "space") == 1.5);
        CHECK(entry_gr(sym, "b", "space") == 1.5);
    }
}

TEST_CASE("cube closure and reciprocity at moderate ray count") {
    TraceOptions opt;
    opt.rays_default = 20000;
    const Model m = cube_model(1.0);
    const Scene scene = Scene::from_model(m);
    const RadCouplingMatrix mc = compute_exchange_factors(scene, opt);
    const std::vector<std::string> ids{"floor", "ceiling", "west", "east", "south", "north"};
    for (const auto& a : ids) {
        double row = 0.0;
        for (const auto& b : ids)
            if (a != b) row += entry_gr(mc, a, b);
        CHECK(row == Catch::Approx(1.0).margin(0.03));  // A = eps = 1
        CHECK(entry_gr(mc, a, "space") == 0.0);
    }
    // reciprocity within combined statistical error
    int ok = 0, total = 0;
    for (std::size_t i = 0; i < ids.size(); ++i)
        for (std::size_t j = i + 1; j < ids.size(); ++j) {
            const double d = std::abs(entry_gr(mc, ids[i], ids[j]) - entry_gr(mc, ids[j], ids[i]));
            const double se =
                entry_stderr(mc, ids[i], ids[j]) + entry_stderr(mc, ids[j], ids[i]);
            ++total;
            if (d <= 3.0 * se) ++ok;
        }
    CHECK(ok == total);
}

TEST_CASE("every emitted ray is scored exactly once") {
    TraceOptions opt;
    opt.rays_default = 5000;
    const Model m = cube_model(0.4);  // reflective enclosure
    const RadCouplingMatrix mc = compute_exchange_factors(Scene::from_model(m), opt);
    // bookkeeping identity: row sum + space = A_i eps_i holds iff each ray
    // terminated exactly once
    const std::vector<std::string> ids{"floor", "ceiling", "west", "east", "south", "north"};
    for (const auto& a : ids) {
        double row = entry_gr(mc, a, "space");
        for (const auto& b : ids) row += entry_gr(mc, a, b);
        CHECK(row == Catch::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("bounce cap: trapped rays are scored at the last face and counted") {
    // two nearly lossless specular mirrors facing each other trap most rays
    Model m;
    m.nodes.push_back(boundary("a"));
    m.nodes.push_back(boundary("b"));
    SurfaceFace f1 = disc_face("m1", "a", 0.5, {0, 0, 0}, {0, 0, 1}, 1e-4, 1.0);
    f1.reflection = Reflection::specular;
    SurfaceFace f2 = disc_face("m2", "b", 0.5, {0, 0, 0.1}, {0, 0, -1}, 1e-4, 1.0);
    f2.reflection = Reflection::specular;
    m.faces.push_back(f1);
    m.faces.push_back(f2);
    validate_model(m);
    TraceOptions opt;
    opt.rays_default = 2000;
    const RadCouplingMatrix mc = compute_exchange_factors(Scene::from_model(m), opt);
    CHECK(mc.capped_rays > 0);
    // bookkeeping stays exact: every ray terminated exactly once
    for (const std::string id : {"m1", "m2"}) {
        double row = entry_gr(mc, id, "space");
        for (const std::string other : {"m1", "m2"}) row += entry_gr(mc, id, other);
        CHECK(row == Catch::Approx(mc.area_epsilon.at(id)).epsilon(1e-12));
    }
}

TEST_CASE("non-emitting faces produce a zero row but still absorb") {
    Model m = coax_disc_model(0.5, 0.5, 0.2);
    m.faces[1].epsilon = 0.0;  // disc2 absorbs (alpha=1) but never emits
    validate_model(m);
    TraceOptions opt;
    opt.rays_default = 2000;
    const RadCouplingMatrix mc = compute_exchange_factors(Scene::from_model(m), opt);
    CHECK(entry_gr(mc, "disc2", "disc1") == 0.0);
    CHECK(entry_gr(mc, "disc1", "disc2") > 0.0);
    CHECK(mc.rays_used.at("disc2") == 0);
}

TEST_CASE("stderr scales as 1/sqrt(N)") {
    const Model m = coax_disc_model(0.5, 0.5, 1.0);
    const Scene scene = Scene::from_model(m);
    TraceOptions opt;
    opt.rays_default = 20000;
    const double se1 = entry_stderr(compute_exchange_factors(scene, opt), "disc1", "disc2");
    opt.rays_default = 80000;
    const double se2 = entry_stderr(compute_exchange_factors(scene, opt), "disc1", "disc2");
    CHECK(std::abs(se2 / se1 - 0.5) < 0.1);
}

TEST_CASE("high-accuracy faces receive the large ray budget") {
    Model m = coax_disc_model(0.5, 0.5, 1.0);
    m.faces[0].high_accuracy = true;
    validate_model(m);
    TraceOptions opt;
    opt.rays_default = 1000;
    opt.rays_high_accuracy = 100000;
    const RadCouplingMatrix mc = compute_exchange_factors(Scene::from_model(m), opt);
    CHECK(mc.rays_used.at("disc1") == 100000);
    CHECK(mc.rays_used.at("disc2") == 1000);

    SECTION("per-face override wins") {
        opt.rays_per_face["disc2"] = 777;
        const RadCouplingMatrix mc2 = compute_exchange_factors(Scene::from_model(m), opt);
        CHECK(mc2.rays_used.at("disc2") == 777);
    }
}

TEST_CASE("deterministic and schedule-independent") {
    const Model m = cube_model(0.7);
    const Scene scene = Scene::from_model(m);
    TraceOptions opt;
    opt.rays_default = 5000;
    opt.seed = 77;
    opt.threads = 1;
    const RadCouplingMatrix a = compute_exchange_factors(scene, opt);
    opt.threads = 4;
    const RadCouplingMatrix b = compute_exchange_factors(scene, opt);
    opt.threads = 8;
    const RadCouplingMatrix c = compute_exchange_factors(scene, opt);
    CHECK(a == b);
    CHECK(a == c);
    opt.seed = 78;
    CHECK_FALSE(a == compute_exchange_factors(scene, opt));
}
