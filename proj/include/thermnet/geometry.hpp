#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>

#include "thermnet/rng.hpp"
#include "thermnet/vec3.hpp"

namespace thermnet {

enum class PrimitiveKind { rectangle, disc, annulus, cylinder, cone };

// Surface primitive in a rigid-body frame. Planar primitives lie in the local
// z=0 plane with geometric front normal +z; cylinder and cone have their axis
// along local +z spanning z in [0, height], front normal pointing outward.
//
//   rectangle: p0 = width (x extent), p1 = height (y extent)
//   disc:      p0 = radius
//   annulus:   p0 = inner radius, p1 = outer radius
//   cylinder:  p0 = radius, p1 = height
//   cone:      p0 = base radius (z=0), p1 = top radius (z=height), p2 = height
struct Primitive {
    PrimitiveKind kind = PrimitiveKind::rectangle;
    double p0 = 0.0;
    double p1 = 0.0;
    double p2 = 0.0;
    Frame frame;

    bool operator==(const Primitive&) const = default;

    double area() const {
        using std::numbers::pi;
        switch (kind) {
            case PrimitiveKind::rectangle: return p0 * p1;
            case PrimitiveKind::disc: return pi * p0 * p0;
            case PrimitiveKind::annulus: return pi * (p1 * p1 - p0 * p0);
            case PrimitiveKind::cylinder: return 2.0 * pi * p0 * p1;
            case PrimitiveKind::cone: {
                const double slant = std::sqrt(p2 * p2 + (p1 - p0) * (p1 - p0));
                return pi * (p0 + p1) * slant;
            }
        }
        return 0.0;
    }

    // Farthest extent of the primitive from its frame origin (bounding radius).
    double bounding_radius() const {
        switch (kind) {
            case PrimitiveKind::rectangle: return 0.5 * std::hypot(p0, p1);
            case PrimitiveKind::disc: return p0;
            case PrimitiveKind::annulus: return p1;
            case PrimitiveKind::cylinder: return std::hypot(p0, p1);
            case PrimitiveKind::cone: return std::hypot(std::max(p0, p1), p2);
        }
        return 0.0;
    }

    struct Sample {
        Vec3 point;         // world
        Vec3 front_normal;  // world, unit
    };

    // Uniform-by-area sample of the surface with its geometric front normal.
    Sample sample(CounterRng& rng) const {
        using std::numbers::pi;
        Vec3 p_local, n_local;
        switch (kind) {
            case PrimitiveKind::rectangle: {
                p_local = {(rng.next_double() - 0.5) * p0, (rng.next_double() - 0.5) * p1, 0.0};
                n_local = {0, 0, 1};
                break;
            }
            case PrimitiveKind::disc: {
                const double r = p0 * std::sqrt(rng.next_double());
                const double t = 2.0 * pi * rng.next_double();
                p_local = {r * std::cos(t), r * std::sin(t), 0.0};
                n_local = {0, 0, 1};
                break;
            }
            case PrimitiveKind::annulus: {
                const double r = std::sqrt(p0 * p0 + rng.next_double() * (p1 * p1 - p0 * p0));
                const double t = 2.0 * pi * rng.next_double();
                p_local = {r * std::cos(t), r * std::sin(t), 0.0};
                n_local = {0, 0, 1};
                break;
            }
            case PrimitiveKind::cylinder: {
                const double z = p1 * rng.next_double();
                const double t = 2.0 * pi * rng.next_double();
                p_local = {p0 * std::cos(t), p0 * std::sin(t), z};
                n_local = {std::cos(t), std::sin(t), 0.0};
                break;
            }
            case PrimitiveKind::cone: {
                // area density along z is proportional to the local radius
                const double s = (p1 - p0) / p2;
                double z;
                if (std::abs(s) < 1e-15) {
                    z = p2 * rng.next_double();
                } else {
                    const double total = p0 * p2 + 0.5 * s * p2 * p2;
                    const double u = rng.next_double() * total;
                    z = (-p0 + std::sqrt(p0 * p0 + 2.0 * s * u)) / s;
                }
                const double t = 2.0 * pi * rng.next_double();
                const double inv = 1.0 / std::sqrt(1.0 + s * s);
                p_local = {(p0 + s * z) * std::cos(t), (p0 + s * z) * std::sin(t), z};
                n_local = {std::cos(t) * inv, std::sin(t) * inv, -s * inv};
                break;
            }
        }
        return {frame.to_world(p_local), normalized(frame.dir_to_world(n_local))};
    }

    struct Hit {
        double t = 0.0;
        Vec3 point;         // world
        Vec3 front_normal;  // world, unit
    };

    // Nearest intersection with t > t_min, or nullopt. The caller decides
    // side semantics from the sign of dot(dir, front_normal).
    std::optional<Hit> intersect(const Vec3& origin, const Vec3& dir, double t_min) const {
        const Vec3 o = frame.to_local(origin);
        const Vec3 d = frame.dir_to_local(dir);
        switch (kind) {
            case PrimitiveKind::rectangle:
            case PrimitiveKind::disc:
            case PrimitiveKind::annulus: {
                if (std::abs(d.z) < 1e-300) return std::nullopt;
                const double t = -o.z / d.z;
                if (!(t > t_min)) return std::nullopt;
                const double px = o.x + t * d.x;
                const double py = o.y + t * d.y;
                const double slack = 1.0 + 1e-12;
                bool inside = false;
                if (kind == PrimitiveKind::rectangle) {
                    inside = std::abs(px) <= 0.5 * p0 * slack && std::abs(py) <= 0.5 * p1 * slack;
                } else {
                    const double r2 = px * px + py * py;
                    if (kind == PrimitiveKind::disc) {
                        inside = r2 <= p0 * p0 * slack;
                    } else {
                        inside = r2 >= p0 * p0 / slack && r2 <= p1 * p1 * slack;
                    }
                }
                if (!inside) return std::nullopt;
                return finish_hit(t, {px, py, 0.0}, {0, 0, 1});
            }
            case PrimitiveKind::cylinder: {
                const double a = d.x * d.x + d.y * d.y;
                if (a < 1e-300) return std::nullopt;
                const double b = o.x * d.x + o.y * d.y;
                const double c = o.x * o.x + o.y * o.y - p0 * p0;
                const double disc = b * b - a * c;
                if (disc < 0.0) return std::nullopt;
                const double sq = std::sqrt(disc);
                for (const double t : {(-b - sq) / a, (-b + sq) / a}) {
                    if (!(t > t_min)) continue;
                    const double z = o.z + t * d.z;
                    if (z < -1e-12 || z > p1 + 1e-12) continue;
                    const Vec3 p{o.x + t * d.x, o.y + t * d.y, z};
                    const double r = std::hypot(p.x, p.y);
                    return finish_hit(t, p, {p.x / r, p.y / r, 0.0});
                }
                return std::nullopt;
            }
            case PrimitiveKind::cone: {
                const double s = (p1 - p0) / p2;
                const double a = d.x * d.x + d.y * d.y - s * s * d.z * d.z;
                const double rz = p0 + s * o.z;
                const double b = o.x * d.x + o.y * d.y - s * rz * d.z;
                const double c = o.x * o.x + o.y * o.y - rz * rz;
                std::optional<Hit> best;
                if (std::abs(a) < 1e-14 * (d.x * d.x + d.y * d.y + s * s * d.z * d.z + 1e-300)) {
                    if (std::abs(b) < 1e-300) return std::nullopt;
                    best = cone_try(o, d, -0.5 * c / b, t_min, s);
                } else {
                    const double disc = b * b - a * c;
                    if (disc < 0.0) return std::nullopt;
                    const double sq = std::sqrt(disc);
                    double t1 = (-b - sq) / a;
                    double t2 = (-b + sq) / a;
                    if (t1 > t2) std::swap(t1, t2);
                    best = cone_try(o, d, t1, t_min, s);
                    if (!best) best = cone_try(o, d, t2, t_min, s);
                }
                return best;
            }
        }
        return std::nullopt;
    }

  private:
    Hit finish_hit(double t, const Vec3& p_local, const Vec3& n_local) const {
        return {t, frame.to_world(p_local), normalized(frame.dir_to_world(n_local))};
    }

    std::optional<Hit> cone_try(const Vec3& o, const Vec3& d, double t, double t_min,
                                double s) const {
        if (!(t > t_min)) return std::nullopt;
        const double z = o.z + t * d.z;
        if (z < -1e-12 || z > p2 + 1e-12) return std::nullopt;
        const Vec3 p{o.x + t * d.x, o.y + t * d.y, z};
        const double rho = std::hypot(p.x, p.y);
        if (rho < 1e-300) return std::nullopt;
        if (p0 + s * z < 0.0) return std::nullopt;  // beyond the apex
        const double inv = 1.0 / std::sqrt(1.0 + s * s);
        return finish_hit(t, p, {p.x / rho * inv, p.y / rho * inv, -s * inv});
    }
};

// Cosine-weighted direction about `normal` (Lambertian emission).
inline Vec3 sample_cosine_hemisphere(const Vec3& normal, CounterRng& rng) {
    using std::numbers::pi;
    const double u = rng.next_double();
    const double phi = 2.0 * pi * rng.next_double();
    const double st = std::sqrt(u);           // sin(theta)
    const double ct = std::sqrt(1.0 - u);     // cos(theta)
    const Frame f = make_frame({}, normal);
    return normalized(f.dir_to_world({st * std::cos(phi), st * std::sin(phi), ct}));
}

}  // namespace thermnet
