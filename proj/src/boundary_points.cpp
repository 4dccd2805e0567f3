#include "boundshift/boundary_points.hpp"

#include <algorithm>
#include <stdexcept>

namespace boundshift {

std::string_view to_string(BoundaryInterface iface) {
    return iface == BoundaryInterface::Primary ? "primary" : "secondary";
}

BoundaryInterface parse_interface(std::string_view text) {
    if (text == "primary") return BoundaryInterface::Primary;
    if (text == "secondary") return BoundaryInterface::Secondary;
    throw std::invalid_argument("unknown boundary interface '" + std::string(text) + "' (expected primary|secondary)");
}

void BoundaryPointSet::normalize() {
    std::sort(points.begin(), points.end());
    points.erase(std::unique(points.begin(), points.end()), points.end());
}

}  // namespace boundshift
