#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "thermnet/geometry.hpp"
#include "thermnet/rng.hpp"

using namespace thermnet;
using std::numbers::pi;

TEST_CASE("primitive areas") {
    Primitive p;
    p.kind = PrimitiveKind::rectangle;
    p.p0 = 2.0;
    p.p1 = 3.0;
    CHECK(p.area() == Catch::Approx(6.0));
    p.kind = PrimitiveKind::disc;
    p.p0 = 0.5;
    CHECK(p.area() == Catch::Approx(pi * 0.25));
    p.kind = PrimitiveKind::annulus;
    p.p0 = 0.5;
    p.p1 = 1.0;
    CHECK(p.area() == Catch::Approx(pi * 0.75));
    p.kind = PrimitiveKind::cylinder;
    p.p0 = 0.5;
    p.p1 = 2.0;
    CHECK(p.area() == Catch::Approx(2.0 * pi));
    p.kind = PrimitiveKind::cone;
    p.p0 = 1.0;
    p.p1 = 0.0;
    p.p2 = 1.0;  // full cone, slant sqrt(2)
    CHECK(p.area() == Catch::Approx(pi * std::sqrt(2.0)));
}

TEST_CASE("uniform sampling covers the rectangle: mean is the centroid") {
    Primitive p;
    p.kind = PrimitiveKind::rectangle;
    p.p0 = 1.0;
    p.p1 = 1.0;
    CounterRng rng(42);
    const int N = 100000;
    double sx = 0.0, sy = 0.0;
    for (int i = 0; i < N; ++i) {
        const auto s = p.sample(rng);
        sx += s.point.x;
        sy += s.point.y;
    }
    const double se = 1.0 / std::sqrt(12.0 * N);  // std error of the mean per axis
    CHECK(std::abs(sx / N) < 3.0 * se);
    CHECK(std::abs(sy / N) < 3.0 * se);
}

TEST_CASE("cosine-weighted emission: mean polar cosine is 2/3") {
    CounterRng rng(7);
    const Vec3 n{0, 0, 1};
    const int N = 100000;
    double sum = 0.0;
    for (int i = 0; i < N; ++i) sum += sample_cosine_hemisphere(n, rng).z;
    // Var(cos) = 1/2 - 4/9 = 1/18
    const double se = std::sqrt((0.5 - 4.0 / 9.0) / N);
    CHECK(std::abs(sum / N - 2.0 / 3.0) < 3.0 * se);
}

TEST_CASE("sampled directions stay on the requested side") {
    CounterRng rng(3);
    const Vec3 n{0, 0, -1};  // a back-side normal
    for (int i = 0; i < 1000; ++i) {
        const Vec3 d = sample_cosine_hemisphere(n, rng);
        CHECK(dot(d, Vec3{0, 0, 1}) < 0.0);
    }
}

TEST_CASE("ray-primitive intersections") {
    SECTION("disc hit and miss") {
        Primitive p;
        p.kind = PrimitiveKind::disc;
        p.p0 = 1.0;
        p.frame = make_frame({0, 0, 2}, {0, 0, 1});
        const auto hit = p.intersect({0.2, 0.3, 0.0}, {0, 0, 1}, 1e-12);
        REQUIRE(hit);
        CHECK(hit->t == Catch::Approx(2.0));
        CHECK(hit->front_normal.z == Catch::Approx(1.0));
        CHECK_FALSE(p.intersect({2.0, 0.0, 0.0}, {0, 0, 1}, 1e-12));
        CHECK_FALSE(p.intersect({0.0, 0.0, 0.0}, {0, 0, -1}, 1e-12));
    }
    SECTION("annulus rejects the hole") {
        Primitive p;
        p.kind = PrimitiveKind::annulus;
        p.p0 = 0.5;
        p.p1 = 1.0;
        CHECK_FALSE(p.intersect({0, 0, -1}, {0, 0, 1}, 1e-12));
        CHECK(p.intersect({0.75, 0, -1}, {0, 0, 1}, 1e-12));
    }
    SECTION("cylinder from inside and outside") {
        Primitive p;
        p.kind = PrimitiveKind::cylinder;
        p.p0 = 1.0;
        p.p1 = 2.0;
        const auto outside = p.intersect({-5, 0, 1}, {1, 0, 0}, 1e-12);
        REQUIRE(outside);
        CHECK(outside->t == Catch::Approx(4.0));
        CHECK(outside->front_normal.x == Catch::Approx(-1.0));
        const auto inside = p.intersect({0, 0, 1}, {1, 0, 0}, 1e-12);
        REQUIRE(inside);
        CHECK(inside->t == Catch::Approx(1.0));
        CHECK(inside->front_normal.x == Catch::Approx(1.0));
        CHECK_FALSE(p.intersect({-5, 0, 5}, {1, 0, 0}, 1e-12));  // above the span
    }
    SECTION("cone frustum") {
        Primitive p;
        p.kind = PrimitiveKind::cone;
        p.p0 = 1.0;
        p.p1 = 0.5;
        p.p2 = 1.0;
        const auto hit = p.intersect({-5, 0, 0.5}, {1, 0, 0}, 1e-12);
        REQUIRE(hit);
        CHECK(hit->point.x == Catch::Approx(-0.75));  // r(0.5) = 0.75
        // normal tilts away from the axis
        CHECK(hit->front_normal.z > 0.0);
        CHECK(hit->front_normal.x < 0.0);
    }
    SECTION("transformed frame") {
        Primitive p;
        p.kind = PrimitiveKind::rectangle;
        p.p0 = 1.0;
        p.p1 = 1.0;
        p.frame = make_frame({1, 0, 0}, {1, 0, 0});  // facing +x
        const auto hit = p.intersect({3, 0.2, 0.1}, {-1, 0, 0}, 1e-12);
        REQUIRE(hit);
        CHECK(hit->t == Catch::Approx(2.0));
        CHECK(hit->front_normal.x == Catch::Approx(1.0));
    }
}

TEST_CASE("sample points land on the primitive and normals are unit") {
    for (PrimitiveKind kind : {PrimitiveKind::rectangle, PrimitiveKind::disc,
                               PrimitiveKind::annulus, PrimitiveKind::cylinder,
                               PrimitiveKind::cone}) {
        Primitive p;
        p.kind = kind;
        p.p0 = kind == PrimitiveKind::annulus ? 0.3 : 0.8;
        p.p1 = kind == PrimitiveKind::annulus ? 0.8 : (kind == PrimitiveKind::cone ? 0.4 : 1.2);
        p.p2 = 1.2;
        p.frame = make_frame({0.5, 0.5, 0.5}, {0, 1, 0}, {0, 0, 1});
        CounterRng rng(11);
        for (int i = 0; i < 200; ++i) {
            const auto s = p.sample(rng);
            CHECK(norm(s.front_normal) == Catch::Approx(1.0).epsilon(1e-12));
            // a ray fired against the sample from outside must hit near the point
            const Vec3 origin = s.point + s.front_normal * 0.5;
            const auto hit = p.intersect(origin, -s.front_normal, 1e-12);
            REQUIRE(hit);
            CHECK(norm(hit->point - s.point) < 1e-9);
        }
    }
}
