#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string_view>

namespace gasguard {

enum class GasSpecies { LPG, Propane, Methane, Butane };

inline constexpr std::array<GasSpecies, 4> kAllGases{
    GasSpecies::LPG, GasSpecies::Propane, GasSpecies::Methane, GasSpecies::Butane};

constexpr std::size_t index_of(GasSpecies gas) noexcept { return static_cast<std::size_t>(gas); }

constexpr std::string_view to_string(GasSpecies gas) noexcept {
    switch (gas) {
        case GasSpecies::LPG: return "LPG";
        case GasSpecies::Propane: return "Propane";
        case GasSpecies::Methane: return "Methane";
        case GasSpecies::Butane: return "Butane";
    }
    return "?";
}

/// Exact, case-sensitive match on the canonical names above.
constexpr std::optional<GasSpecies> gas_from_string(std::string_view name) noexcept {
    for (GasSpecies gas : kAllGases) {
        if (to_string(gas) == name) return gas;
    }
    return std::nullopt;
}

}  // namespace gasguard
