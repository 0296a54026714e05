#pragma once

#include <cmath>
#include <ostream>

namespace thermnet {

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    Vec3 operator-() const { return {-x, -y, -z}; }
    Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    bool operator==(const Vec3&) const = default;
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

inline Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

inline double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }

inline Vec3 normalized(const Vec3& v) {
    const double n = norm(v);
    return v / n;
}

inline std::ostream& operator<<(std::ostream& os, const Vec3& v) {
    return os << "(" << v.x << ", " << v.y << ", " << v.z << ")";
}

// Right-handed orthonormal frame: local coordinates -> world.
struct Frame {
    Vec3 origin;
    Vec3 ux{1, 0, 0};
    Vec3 uy{0, 1, 0};
    Vec3 uz{0, 0, 1};

    Vec3 to_world(const Vec3& p) const { return origin + ux * p.x + uy * p.y + uz * p.z; }
    Vec3 dir_to_world(const Vec3& d) const { return ux * d.x + uy * d.y + uz * d.z; }
    Vec3 to_local(const Vec3& p) const {
        const Vec3 q = p - origin;
        return {dot(q, ux), dot(q, uy), dot(q, uz)};
    }
    Vec3 dir_to_local(const Vec3& d) const { return {dot(d, ux), dot(d, uy), dot(d, uz)}; }

    bool operator==(const Frame&) const = default;
};

// Builds a frame whose local +z is `axis`. `ref` pins the local +x direction
// (projected onto the plane normal to axis); any non-parallel vector works.
inline Frame make_frame(const Vec3& origin, const Vec3& axis, const Vec3& ref = {1, 0, 0}) {
    Frame f;
    f.origin = origin;
    // already-orthonormal inputs pass through bit-exactly (serialization round-trip)
    if (std::abs(dot(axis, axis) - 1.0) < 1e-12 && std::abs(dot(ref, ref) - 1.0) < 1e-12 &&
        std::abs(dot(axis, ref)) < 1e-12) {
        f.uz = axis;
        f.ux = ref;
        f.uy = cross(axis, ref);
        return f;
    }
    f.uz = normalized(axis);
    Vec3 r = ref - f.uz * dot(ref, f.uz);
    if (dot(r, r) < 1e-24) {
        const Vec3 alt = std::abs(f.uz.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
        r = alt - f.uz * dot(alt, f.uz);
    }
    f.ux = normalized(r);
    f.uy = cross(f.uz, f.ux);
    return f;
}

// Rotation taking the unit vector `from` onto the unit vector `to` by the
// minimal arc; returns basis column vectors applied as R*v.
struct Rotation {
    Vec3 cx{1, 0, 0}, cy{0, 1, 0}, cz{0, 0, 1};
    Vec3 apply(const Vec3& v) const { return cx * v.x + cy * v.y + cz * v.z; }
};

inline Rotation rotation_between(const Vec3& from, const Vec3& to) {
    const Vec3 f = normalized(from);
    const Vec3 t = normalized(to);
    const double c = dot(f, t);
    Rotation r;
    if (c > 1.0 - 1e-14) return r;  // identity
    if (c < -1.0 + 1e-14) {
        // 180 degrees about any axis perpendicular to f
        const Frame fr = make_frame({}, f);
        const Vec3 a = fr.ux;
        r.cx = Vec3{2 * a.x * a.x - 1, 2 * a.x * a.y, 2 * a.x * a.z};
        r.cy = Vec3{2 * a.y * a.x, 2 * a.y * a.y - 1, 2 * a.y * a.z};
        r.cz = Vec3{2 * a.z * a.x, 2 * a.z * a.y, 2 * a.z * a.z - 1};
        return r;
    }
    const Vec3 v = cross(f, t);
    const double k = 1.0 / (1.0 + c);
    // Rodrigues formula, columns of R = I + [v]_x + [v]_x^2 * k
    r.cx = Vec3{1 - k * (v.y * v.y + v.z * v.z), v.z + k * v.x * v.y, -v.y + k * v.x * v.z};
    r.cy = Vec3{-v.z + k * v.x * v.y, 1 - k * (v.x * v.x + v.z * v.z), v.x + k * v.y * v.z};
    r.cz = Vec3{v.y + k * v.x * v.z, -v.x + k * v.y * v.z, 1 - k * (v.x * v.x + v.y * v.y)};
    return r;
}

}  // namespace thermnet
