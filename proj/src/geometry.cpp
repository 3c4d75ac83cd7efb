#include "poolsight/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace poolsight {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Cross product of (b-a) x (c-a).
double cross(const Point& a, const Point& b, const Point& c) {
    return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

}  // namespace

Buffer::Buffer(Point center, double radius_m) : center_(center), radius_m_(radius_m) {
    if (!(radius_m > 0.0) || !std::isfinite(radius_m)) {
        throw DataError("buffer radius must be positive and finite");
    }
    if (!std::isfinite(center.x) || !std::isfinite(center.y)) {
        throw InvalidGeometryError("buffer center has non-finite coordinates");
    }
    ring_.outer.reserve(kSides + 1);
    for (int i = 0; i < kSides; ++i) {
        const double a = kTwoPi * static_cast<double>(i) / kSides;
        ring_.outer.push_back({center.x + radius_m * std::cos(a),
                               center.y + radius_m * std::sin(a)});
    }
    ring_.outer.push_back(ring_.outer.front());
}

double Buffer::area() const noexcept {
    // Regular n-gon with circumradius r: (n/2) r^2 sin(2pi/n).
    return 0.5 * kSides * radius_m_ * radius_m_ * std::sin(kTwoPi / kSides);
}

bool Buffer::contains(const Point& p) const noexcept {
    const double dx = p.x - center_.x;
    const double dy = p.y - center_.y;
    const double d2 = dx * dx + dy * dy;
    const double inradius = radius_m_ * std::cos(kTwoPi / (2.0 * kSides));
    if (d2 <= inradius * inradius) return true;
    if (d2 > radius_m_ * radius_m_) return false;
    // Annulus between inradius and circumradius: full edge scan in the
    // buffer-local frame.
    const Ring& ring = ring_.outer;
    for (size_t i = 0; i + 1 < ring.size(); ++i) {
        const double ax = ring[i].x - center_.x, ay = ring[i].y - center_.y;
        const double bx = ring[i + 1].x - center_.x, by = ring[i + 1].y - center_.y;
        if ((bx - ax) * (dy - ay) - (by - ay) * (dx - ax) < 0.0) return false;
    }
    return true;
}

BoundingBox bounding_box(const Ring& ring) {
    BoundingBox bb{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
                   -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (const Point& p : ring) {
        bb.min_x = std::min(bb.min_x, p.x);
        bb.min_y = std::min(bb.min_y, p.y);
        bb.max_x = std::max(bb.max_x, p.x);
        bb.max_y = std::max(bb.max_y, p.y);
    }
    return bb;
}

BoundingBox bounding_box(const Polygon& poly) { return bounding_box(poly.outer); }

BoundingBox bounding_box(const Polyline& line) {
    BoundingBox bb{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
                   -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (const Point& p : line.vertices) {
        bb.min_x = std::min(bb.min_x, p.x);
        bb.min_y = std::min(bb.min_y, p.y);
        bb.max_x = std::max(bb.max_x, p.x);
        bb.max_y = std::max(bb.max_y, p.y);
    }
    return bb;
}

BoundingBox bounding_box(const Buffer& buf) { return bounding_box(buf.ring().outer); }

double signed_ring_area(const Ring& ring) {
    if (ring.size() < 3) return 0.0;
    const Point o = ring.front();
    double acc = 0.0;
    for (size_t i = 1; i + 1 < ring.size(); ++i) {
        acc += cross(o, ring[i], ring[i + 1]);
    }
    return 0.5 * acc;
}

void validate_ring(const Ring& ring, const std::string& context) {
    if (ring.size() < 4) {
        throw InvalidGeometryError(context + ": ring has fewer than 4 vertices");
    }
    if (!(ring.front() == ring.back())) {
        throw InvalidGeometryError(context + ": ring is not closed");
    }
    for (const Point& p : ring) {
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
            throw InvalidGeometryError(context + ": non-finite vertex");
        }
    }
    if (signed_ring_area(ring) == 0.0) {
        throw InvalidGeometryError(context + ": degenerate ring (zero area)");
    }
}

void validate_polygon(const Polygon& poly, const std::string& context) {
    validate_ring(poly.outer, context + " outer ring");
    if (signed_ring_area(poly.outer) <= 0.0) {
        throw InvalidGeometryError(context + ": outer ring must be counter-clockwise");
    }
    for (size_t h = 0; h < poly.holes.size(); ++h) {
        const std::string hctx = context + " hole " + std::to_string(h);
        validate_ring(poly.holes[h], hctx);
        if (signed_ring_area(poly.holes[h]) >= 0.0) {
            throw InvalidGeometryError(hctx + ": holes must be clockwise");
        }
    }
}

void validate_polyline(const Polyline& line, const std::string& context) {
    if (line.vertices.size() < 2) {
        throw InvalidGeometryError(context + ": polyline needs at least 2 vertices");
    }
    for (size_t i = 0; i + 1 < line.vertices.size(); ++i) {
        if (line.vertices[i] == line.vertices[i + 1]) {
            throw InvalidGeometryError(context + ": consecutive duplicate vertices");
        }
    }
}

double polygon_area(const Polygon& poly) {
    validate_polygon(poly, "polygon_area");
    double area = signed_ring_area(poly.outer);
    for (const Ring& h : poly.holes) {
        area += signed_ring_area(h);  // holes are clockwise, so this subtracts
    }
    return std::max(area, 0.0);
}

namespace {

// Sutherland-Hodgman clip of one ring against the convex buffer, carried out
// in the buffer-local frame. Working in local coordinates makes the result
// translation-invariant: world translations cancel exactly in the initial
// subtraction (the operands stay close enough for the difference to be
// exact), so clipping sees bit-identical inputs.
double clipped_ring_area(const Ring& ring, const Buffer& clip) {
    const Point c = clip.center();
    std::vector<Point> poly;
    poly.reserve(ring.size());
    for (size_t i = 0; i + 1 < ring.size(); ++i) {  // drop closing repeat
        poly.push_back({ring[i].x - c.x, ring[i].y - c.y});
    }

    const Ring& edge_ring = clip.ring().outer;
    std::vector<Point> next;
    for (size_t e = 0; e + 1 < edge_ring.size(); ++e) {
        if (poly.size() < 3) return 0.0;
        const Point a{edge_ring[e].x - c.x, edge_ring[e].y - c.y};
        const Point b{edge_ring[e + 1].x - c.x, edge_ring[e + 1].y - c.y};
        const double ex = b.x - a.x, ey = b.y - a.y;

        next.clear();
        Point prev = poly.back();
        double prev_side = ex * (prev.y - a.y) - ey * (prev.x - a.x);
        for (const Point& cur : poly) {
            const double cur_side = ex * (cur.y - a.y) - ey * (cur.x - a.x);
            const bool cur_in = cur_side >= 0.0;
            const bool prev_in = prev_side >= 0.0;
            if (cur_in != prev_in) {
                const double t = prev_side / (prev_side - cur_side);
                next.push_back({prev.x + t * (cur.x - prev.x), prev.y + t * (cur.y - prev.y)});
            }
            if (cur_in) next.push_back(cur);
            prev = cur;
            prev_side = cur_side;
        }
        poly.swap(next);
    }
    if (poly.size() < 3) return 0.0;

    double acc = 0.0;
    const Point o = poly.front();
    for (size_t i = 1; i + 1 < poly.size(); ++i) {
        acc += cross(o, poly[i], poly[i + 1]);
    }
    return 0.5 * acc;
}

void require_convex_clip(const Buffer& clip) {
    const Ring& r = clip.ring().outer;
    for (size_t i = 0; i + 2 < r.size(); ++i) {
        if (cross(r[i], r[i + 1], r[i + 2]) < 0.0) {
            throw NumericError("intersection clip ring is not convex");
        }
    }
}

}  // namespace

double intersection_area(const Polygon& subject, const Buffer& clip) {
    validate_polygon(subject, "intersection_area subject");
    require_convex_clip(clip);
    double area = clipped_ring_area(subject.outer, clip);
    for (const Ring& h : subject.holes) {
        // Hole rings are clockwise; their clipped signed area is negative.
        area += clipped_ring_area(h, clip);
    }
    return std::max(area, 0.0);
}

double polyline_length(const Polyline& line) {
    double len = 0.0;
    for (size_t i = 0; i + 1 < line.vertices.size(); ++i) {
        len += distance(line.vertices[i], line.vertices[i + 1]);
    }
    return len;
}

double polyline_length_in(const Polyline& line, const Buffer& clip) {
    validate_polyline(line, "polyline_length_in");
    require_convex_clip(clip);

    // Per segment: intersect the parameter interval [0,1] with every
    // half-plane of the convex clip (Cyrus-Beck), in the buffer-local frame.
    const Point c = clip.center();
    const Ring& edge_ring = clip.ring().outer;
    double total = 0.0;
    for (size_t s = 0; s + 1 < line.vertices.size(); ++s) {
        const double px = line.vertices[s].x - c.x, py = line.vertices[s].y - c.y;
        const double qx = line.vertices[s + 1].x - c.x, qy = line.vertices[s + 1].y - c.y;
        const double dx = qx - px, dy = qy - py;
        double t0 = 0.0, t1 = 1.0;
        bool empty = false;
        for (size_t e = 0; e + 1 < edge_ring.size() && !empty; ++e) {
            const double ax = edge_ring[e].x - c.x, ay = edge_ring[e].y - c.y;
            const double bx = edge_ring[e + 1].x - c.x, by = edge_ring[e + 1].y - c.y;
            const double ex = bx - ax, ey = by - ay;
            // side(t) = ex*(p+t*d - a).y - ey*(p+t*d - a).x ; inside when >= 0
            const double f0 = ex * (py - ay) - ey * (px - ax);
            const double df = ex * dy - ey * dx;
            if (df == 0.0) {
                if (f0 < 0.0) empty = true;
            } else if (df > 0.0) {
                t0 = std::max(t0, -f0 / df);
            } else {
                t1 = std::min(t1, -f0 / df);
            }
            if (t0 >= t1) empty = true;
        }
        if (!empty && t1 > t0) {
            total += (t1 - t0) * std::sqrt(dx * dx + dy * dy);
        }
    }
    return total;
}

double min_distance(const Point& origin, std::span<const Point> targets) {
    if (targets.empty()) {
        throw DataError("min_distance: empty target set");
    }
    double best2 = std::numeric_limits<double>::infinity();
    for (const Point& t : targets) {
        const double dx = t.x - origin.x, dy = t.y - origin.y;
        best2 = std::min(best2, dx * dx + dy * dy);
    }
    return std::sqrt(best2);
}

double point_polyline_distance(const Point& p, const Polyline& line) {
    double best2 = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i + 1 < line.vertices.size(); ++i) {
        const Point& a = line.vertices[i];
        const Point& b = line.vertices[i + 1];
        const double abx = b.x - a.x, aby = b.y - a.y;
        const double apx = p.x - a.x, apy = p.y - a.y;
        const double len2 = abx * abx + aby * aby;
        double t = len2 > 0.0 ? (apx * abx + apy * aby) / len2 : 0.0;
        t = std::clamp(t, 0.0, 1.0);
        const double dx = apx - t * abx, dy = apy - t * aby;
        best2 = std::min(best2, dx * dx + dy * dy);
    }
    return std::sqrt(best2);
}

std::vector<PoolGroup> merge_pools(std::span<const Station> stations, double radius_m) {
    if (!(radius_m > 0.0)) {
        throw ConfigError("merge_pools: radius must be positive");
    }
    std::vector<Station> order(stations.begin(), stations.end());
    std::sort(order.begin(), order.end(),
              [](const Station& a, const Station& b) { return a.id < b.id; });
    for (size_t i = 0; i + 1 < order.size(); ++i) {
        if (order[i].id == order[i + 1].id) {
            throw DataError("merge_pools: duplicate station id " + std::to_string(order[i].id));
        }
    }

    std::vector<PoolGroup> groups;
    std::vector<bool> assigned(order.size(), false);
    for (size_t i = 0; i < order.size(); ++i) {
        if (assigned[i]) continue;
        PoolGroup g;
        g.representative_id = order[i].id;
        g.location = order[i].position;
        g.member_ids.push_back(order[i].id);
        assigned[i] = true;
        for (size_t j = i + 1; j < order.size(); ++j) {
            if (assigned[j]) continue;
            if (distance(order[i].position, order[j].position) <= radius_m) {
                g.member_ids.push_back(order[j].id);
                assigned[j] = true;
            }
        }
        groups.push_back(std::move(g));
    }
    return groups;
}

}  // namespace poolsight
