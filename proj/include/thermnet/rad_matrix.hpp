#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace thermnet {

inline constexpr const char* space_node_id = "space";

// One radiative exchange-factor entry, GR in m^2. `a`/`b` name faces for
// traced matrices; prescribed entries may name nodes directly. `b` may be
// the space sink id. Raw (unsymmetrized) matrices are directed (a = emitter);
// symmetrized matrices carry one entry per unordered pair plus a space entry
// per face.
struct RadEntry {
    std::string a;
    std::string b;
    double gr = 0.0;
    double stderr_est = 0.0;

    bool operator==(const RadEntry&) const = default;
};

struct RadCouplingMatrix {
    std::vector<RadEntry> entries;
    std::map<std::string, std::int64_t> rays_used;   // per emitting face
    std::map<std::string, double> area_epsilon;      // A_i * eps_i per face [m^2]
    std::uint64_t seed = 0;
    bool symmetrized = false;
    std::string method = "prescribed";  // "montecarlo" | "prescribed"
    std::int64_t capped_rays = 0;

    bool operator==(const RadCouplingMatrix&) const = default;
};

}  // namespace thermnet
