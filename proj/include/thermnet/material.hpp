#pragma once

#include <algorithm>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace thermnet {

enum class MaterialProperty { conductivity, specific_heat };

// Temperature-tabulated material properties. Evaluation is piecewise-linear
// in T and clamps to the end values outside the tabulated range.
struct MaterialTable {
    std::string name;
    std::vector<std::pair<double, double>> conductivity;   // (T [K], k [W/(m K)])
    std::vector<std::pair<double, double>> specific_heat;  // (T [K], c [J/(kg K)])

    bool operator==(const MaterialTable&) const = default;
};

namespace detail {

inline double interp_clamped(const std::vector<std::pair<double, double>>& tab, double T) {
    if (tab.empty()) throw std::logic_error("material table is empty");
    if (T <= tab.front().first) return tab.front().second;
    if (T >= tab.back().first) return tab.back().second;
    auto hi = std::upper_bound(tab.begin(), tab.end(), T,
                               [](double t, const auto& p) { return t < p.first; });
    auto lo = hi - 1;
    const double w = (T - lo->first) / (hi->first - lo->first);
    return lo->second + w * (hi->second - lo->second);
}

// Slope of the clamped piecewise-linear interpolant (0 outside the range).
inline double interp_slope(const std::vector<std::pair<double, double>>& tab, double T) {
    if (tab.size() < 2 || T <= tab.front().first || T >= tab.back().first) return 0.0;
    auto hi = std::upper_bound(tab.begin(), tab.end(), T,
                               [](double t, const auto& p) { return t < p.first; });
    auto lo = hi - 1;
    return (hi->second - lo->second) / (hi->first - lo->first);
}

}  // namespace detail

inline double eval_material(const MaterialTable& table, MaterialProperty prop, double T) {
    return detail::interp_clamped(
        prop == MaterialProperty::conductivity ? table.conductivity : table.specific_heat, T);
}

inline double eval_material_slope(const MaterialTable& table, MaterialProperty prop, double T) {
    return detail::interp_slope(
        prop == MaterialProperty::conductivity ? table.conductivity : table.specific_heat, T);
}

}  // namespace thermnet
