#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "poolsight/errors.hpp"

namespace poolsight {

/// Planar geometry primitives for buffer-based feature extraction.
///
/// Coordinates are projected easting/northing in meters. Geodetic
/// reprojection is an ingestion requirement, not handled here. All values
/// are immutable after construction; every operation is a pure function.

struct Point {
    double x = 0.0;
    double y = 0.0;

    constexpr bool operator==(const Point&) const = default;
};

inline double distance(const Point& a, const Point& b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    return std::sqrt(dx * dx + dy * dy);
}

/// Closed ring: first == last vertex, at least 4 vertices including the
/// closing repeat.
using Ring = std::vector<Point>;

/// Outer ring counter-clockwise (signed area > 0), holes clockwise.
struct Polygon {
    Ring outer;
    std::vector<Ring> holes;
};

struct Polyline {
    std::vector<Point> vertices;
};

/// Circular pool vicinity approximated by a regular 64-gon. The polygon
/// approximation keeps clipping deterministic; its area falls short of the
/// disc by a factor sin(2pi/64)/(2pi/64), about 0.16%.
class Buffer {
public:
    static constexpr int kSides = 64;

    Buffer(Point center, double radius_m);

    const Point& center() const noexcept { return center_; }
    double radius_m() const noexcept { return radius_m_; }
    const Polygon& ring() const noexcept { return ring_; }

    /// Exact area of the 64-gon (used as the density denominator).
    double area() const noexcept;

    /// 64-gon membership test. Cheap circumradius/inradius prefilter,
    /// full half-plane scan only within the thin annulus between them.
    bool contains(const Point& p) const noexcept;

private:
    Point center_;
    double radius_m_;
    Polygon ring_;
};

struct BoundingBox {
    double min_x = 0, min_y = 0, max_x = 0, max_y = 0;

    bool intersects(const BoundingBox& o) const noexcept {
        return min_x <= o.max_x && o.min_x <= max_x && min_y <= o.max_y && o.min_y <= max_y;
    }
};

BoundingBox bounding_box(const Ring& ring);
BoundingBox bounding_box(const Polygon& poly);
BoundingBox bounding_box(const Polyline& line);
BoundingBox bounding_box(const Buffer& buf);

/// Signed shoelace area; positive for counter-clockwise rings. Computed
/// relative to the first vertex so results are stable under translation.
double signed_ring_area(const Ring& ring);

void validate_ring(const Ring& ring, const std::string& context);
void validate_polygon(const Polygon& poly, const std::string& context);
void validate_polyline(const Polyline& line, const std::string& context);

/// Outer-ring area minus hole areas; never negative for a valid Polygon.
double polygon_area(const Polygon& poly);

/// Area of subject intersected with the convex buffer ring, via
/// Sutherland-Hodgman clipping of each subject ring. Subject may be
/// non-convex and carry holes (handled per-ring through signed areas).
double intersection_area(const Polygon& subject, const Buffer& clip);

/// Total length of the polyline's sub-segments inside the buffer.
double polyline_length_in(const Polyline& line, const Buffer& clip);

double polyline_length(const Polyline& line);

/// Minimum Euclidean distance from origin to any target.
double min_distance(const Point& origin, std::span<const Point> targets);

/// Distance from a point to a polyline (closest segment).
double point_polyline_distance(const Point& p, const Polyline& line);

struct Station {
    int64_t id = 0;
    Point position;
};

struct PoolGroup {
    int64_t representative_id = 0;
    Point location;                     // representative station position
    std::vector<int64_t> member_ids;    // includes the representative
};

/// Aggregate stations into pools: stations are processed in increasing id
/// order; each unassigned station becomes the representative of a new pool
/// and absorbs every still-unassigned station within radius_m of it. The
/// result is a partition, invariant to input order.
std::vector<PoolGroup> merge_pools(std::span<const Station> stations, double radius_m);

}  // namespace poolsight
