#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace boundshift {

// Primary: arid / semi-arid interface. Secondary: semi-arid / non-arid.
enum class BoundaryInterface { Primary, Secondary };

std::string_view to_string(BoundaryInterface iface);
BoundaryInterface parse_interface(std::string_view text);

struct BoundaryPoint {
    double longitude = 0.0;
    double latitude = 0.0;

    friend bool operator==(const BoundaryPoint&, const BoundaryPoint&) = default;
    friend auto operator<=>(const BoundaryPoint&, const BoundaryPoint&) = default;
};

struct BoundaryPointSet {
    int year = 0;
    BoundaryInterface interface = BoundaryInterface::Primary;
    std::vector<BoundaryPoint> points;

    // Sort by (longitude, latitude) and drop exact duplicates.
    void normalize();
};

}  // namespace boundshift
