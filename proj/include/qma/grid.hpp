#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <span>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "qma/error.hpp"

namespace qma {

/// Bounded domain in R^{4n}: an open ball or an open axis-aligned box.
class Domain {
public:
    enum class Kind { Ball, Box };

    static Domain ball(std::vector<double> center, double radius) {
        if (!(radius > 0.0)) throw InputError("ball radius must be positive");
        if (center.empty() || center.size() % 4 != 0) throw InputError("ball center must have 4n coordinates");
        Domain d;
        d.kind_ = Kind::Ball;
        d.center_ = std::move(center);
        d.radius_ = radius;
        return d;
    }

    static Domain box(std::vector<double> lower, std::vector<double> upper) {
        if (lower.empty() || lower.size() % 4 != 0 || lower.size() != upper.size())
            throw InputError("box bounds must have 4n coordinates each");
        for (std::size_t a = 0; a < lower.size(); ++a)
            if (!(upper[a] > lower[a])) throw InputError("box upper bound must exceed lower bound on every axis");
        Domain d;
        d.kind_ = Kind::Box;
        d.lower_ = std::move(lower);
        d.upper_ = std::move(upper);
        return d;
    }

    Kind kind() const { return kind_; }
    std::size_t dim() const { return kind_ == Kind::Ball ? center_.size() : lower_.size(); }
    const std::vector<double>& center() const { return center_; }
    double radius() const { return radius_; }

    std::vector<double> bbox_lower() const {
        if (kind_ == Kind::Box) return lower_;
        std::vector<double> lo(center_);
        for (auto& v : lo) v -= radius_;
        return lo;
    }
    std::vector<double> bbox_upper() const {
        if (kind_ == Kind::Box) return upper_;
        std::vector<double> hi(center_);
        for (auto& v : hi) v += radius_;
        return hi;
    }

    /// Distance to the boundary for interior points (> 0), minus the distance
    /// to the closure for exterior points (< 0).
    double signed_distance(std::span<const double> x) const {
        if (kind_ == Kind::Ball) {
            double s = 0.0;
            for (std::size_t a = 0; a < center_.size(); ++a) s += (x[a] - center_[a]) * (x[a] - center_[a]);
            return radius_ - std::sqrt(s);
        }
        double inside = std::numeric_limits<double>::infinity();
        double outside2 = 0.0;
        for (std::size_t a = 0; a < lower_.size(); ++a) {
            inside = std::min({inside, x[a] - lower_[a], upper_[a] - x[a]});
            const double excess = std::max({lower_[a] - x[a], x[a] - upper_[a], 0.0});
            outside2 += excess * excess;
        }
        return outside2 > 0.0 ? -std::sqrt(outside2) : inside;
    }

    bool contains(std::span<const double> x) const { return signed_distance(x) > 0.0; }

private:
    Kind kind_ = Kind::Box;
    std::vector<double> center_;
    double radius_ = 0.0;
    std::vector<double> lower_, upper_;
};

enum class NodeKind : std::uint8_t { Interior, Boundary, Exterior };

inline std::string_view to_string(NodeKind k) {
    switch (k) {
        case NodeKind::Interior: return "interior";
        case NodeKind::Boundary: return "boundary";
        case NodeKind::Exterior: return "exterior";
    }
    return "exterior";
}

inline NodeKind node_kind_from_string(std::string_view s) {
    if (s == "interior") return NodeKind::Interior;
    if (s == "boundary") return NodeKind::Boundary;
    if (s == "exterior") return NodeKind::Exterior;
    throw InputError("unknown node kind: " + std::string(s));
}

/// Uniform Cartesian grid over a box in R^{4n}; linear index is row-major with
/// the last axis fastest.
struct Grid {
    std::vector<double> lower;
    std::vector<double> spacing;
    std::vector<std::size_t> shape;

    std::size_t dim() const { return shape.size(); }
    std::size_t n() const { return shape.size() / 4; }

    std::size_t size() const {
        std::size_t s = 1;
        for (auto e : shape) s *= e;
        return s;
    }

    std::vector<std::size_t> strides() const {
        std::vector<std::size_t> st(shape.size(), 1);
        for (std::size_t a = shape.size(); a-- > 1;) st[a - 1] = st[a] * shape[a];
        return st;
    }

    void unravel(std::size_t linear, std::span<std::size_t> idx) const {
        for (std::size_t a = shape.size(); a-- > 0;) {
            idx[a] = linear % shape[a];
            linear /= shape[a];
        }
    }

    std::size_t ravel(std::span<const std::size_t> idx) const {
        std::size_t lin = 0;
        for (std::size_t a = 0; a < shape.size(); ++a) lin = lin * shape[a] + idx[a];
        return lin;
    }

    double coord(std::size_t axis, std::size_t i) const {
        return lower[axis] + static_cast<double>(i) * spacing[axis];
    }

    void position(std::size_t linear, std::span<double> x) const {
        for (std::size_t a = shape.size(); a-- > 0;) {
            x[a] = coord(a, linear % shape[a]);
            linear /= shape[a];
        }
    }

    double max_spacing() const { return *std::max_element(spacing.begin(), spacing.end()); }
    double min_spacing() const { return *std::min_element(spacing.begin(), spacing.end()); }

    bool same_geometry(const Grid& o) const { return lower == o.lower && spacing == o.spacing && shape == o.shape; }
};

/// `points` nodes per axis spanning the domain's bounding box, plus `padding`
/// extra nodes beyond it on each side.
inline Grid make_grid(const Domain& domain, std::size_t points, std::size_t padding = 0) {
    if (points < 3) throw InputError("grid needs at least 3 points per axis");
    const auto lo = domain.bbox_lower();
    const auto hi = domain.bbox_upper();
    Grid g;
    for (std::size_t a = 0; a < lo.size(); ++a) {
        const double h = (hi[a] - lo[a]) / static_cast<double>(points - 1);
        g.spacing.push_back(h);
        g.lower.push_back(lo[a] - static_cast<double>(padding) * h);
        g.shape.push_back(points + 2 * padding);
    }
    return g;
}

/// Real scalar field sampled on a grid, with an interior / boundary / exterior
/// mask derived from a domain. Values are finite on interior and boundary nodes.
struct GridFunction {
    Grid grid;
    Domain domain;
    std::vector<double> values;
    std::vector<NodeKind> mask;

    std::size_t size() const { return values.size(); }
    bool in_closure(std::size_t i) const { return mask[i] != NodeKind::Exterior; }
    bool same_layout(const GridFunction& o) const { return grid.same_geometry(o.grid) && mask == o.mask; }
};

/// Interior: strictly inside the domain (by more than 1e-9 h, so nodes that sit
/// on the boundary up to rounding count as boundary). Boundary: outside, but within
/// `band` of the closure (nodes a stencil or interpolation can reach).
/// Exterior: everything else.
inline std::vector<NodeKind> build_mask(const Grid& grid, const Domain& domain, double band) {
    if (domain.dim() != grid.dim()) throw InputError("domain and grid dimensions differ");
    std::vector<NodeKind> mask(grid.size());
    std::vector<double> x(grid.dim());
    const double eps = 1e-9 * grid.min_spacing();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        grid.position(i, x);
        const double sd = domain.signed_distance(x);
        mask[i] = sd > eps ? NodeKind::Interior : (sd >= -band ? NodeKind::Boundary : NodeKind::Exterior);
    }
    return mask;
}

/// Default band: one grid cell diagonal.
inline double default_band(const Grid& grid) {
    return grid.max_spacing() * std::sqrt(static_cast<double>(grid.dim())) * (1.0 + 1e-12);
}

template <class Fn>
GridFunction sample(const Grid& grid, const Domain& domain, Fn&& fn, std::optional<double> band = std::nullopt) {
    GridFunction f{grid, domain, std::vector<double>(grid.size(), std::numeric_limits<double>::quiet_NaN()),
                   build_mask(grid, domain, band.value_or(default_band(grid)))};
    std::vector<double> x(grid.dim());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!f.in_closure(i)) continue;
        grid.position(i, x);
        f.values[i] = fn(std::span<const double>(x));
    }
    return f;
}

namespace detail {

inline void append_double(std::string& out, double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw InputError("grid CSV: bad number '" + std::string(s) + "'");
    return v;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

}  // namespace detail

/// CSV with header "i0,...,i{d-1},x0,...,x{d-1},value,mask", one row per node,
/// LF line endings. Doubles are written in shortest round-trip form.
inline void write_csv(std::ostream& out, const GridFunction& f) {
    const std::size_t d = f.grid.dim();
    std::string line;
    for (std::size_t a = 0; a < d; ++a) line += "i" + std::to_string(a) + ",";
    for (std::size_t a = 0; a < d; ++a) line += "x" + std::to_string(a) + ",";
    line += "value,mask\n";
    out << line;
    std::vector<std::size_t> idx(d);
    for (std::size_t i = 0; i < f.size(); ++i) {
        line.clear();
        f.grid.unravel(i, idx);
        for (std::size_t a = 0; a < d; ++a) {
            line += std::to_string(idx[a]);
            line += ',';
        }
        for (std::size_t a = 0; a < d; ++a) {
            detail::append_double(line, f.grid.coord(a, idx[a]));
            line += ',';
        }
        detail::append_double(line, f.values[i]);
        line += ',';
        line += to_string(f.mask[i]);
        line += '\n';
        out << line;
    }
}

inline void write_csv_file(const std::string& path, const GridFunction& f) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write grid CSV: " + path);
    write_csv(out, f);
}

/// Reads a grid CSV back. Values and mask are restored bit-exactly; grid
/// geometry is recovered from the indices and extreme coordinates (to rounding); the domain is taken from `domain` or, when absent, set to the
/// box spanned by the grid.
inline GridFunction read_csv(std::istream& in, std::optional<Domain> domain = std::nullopt) {
    std::string line;
    if (!std::getline(in, line)) throw InputError("grid CSV: missing header");
    const auto header = detail::split_commas(line);
    if (header.size() < 6 || (header.size() - 2) % 8 != 0 || header[header.size() - 2] != "value" ||
        header.back() != "mask")
        throw InputError("grid CSV: unexpected header");
    const std::size_t d = (header.size() - 2) / 2;

    struct Row {
        std::vector<std::size_t> idx;
        std::vector<double> x;
        double value;
        NodeKind kind;
    };
    std::vector<Row> rows;
    std::vector<std::size_t> shape(d, 0);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = detail::split_commas(line);
        if (cells.size() != header.size()) throw InputError("grid CSV: wrong number of columns");
        Row r{std::vector<std::size_t>(d), std::vector<double>(d), 0.0, NodeKind::Exterior};
        for (std::size_t a = 0; a < d; ++a) {
            const auto res = std::from_chars(cells[a].data(), cells[a].data() + cells[a].size(), r.idx[a]);
            if (res.ec != std::errc()) throw InputError("grid CSV: bad index");
            shape[a] = std::max(shape[a], r.idx[a] + 1);
            r.x[a] = detail::parse_double(cells[d + a]);
        }
        r.value = detail::parse_double(cells[2 * d]);
        r.kind = node_kind_from_string(cells[2 * d + 1]);
        rows.push_back(std::move(r));
    }
    Grid g;
    g.shape = shape;
    if (rows.size() != g.size()) throw InputError("grid CSV: row count does not match the index extent");
    g.lower.assign(d, std::numeric_limits<double>::quiet_NaN());
    g.spacing.assign(d, std::numeric_limits<double>::quiet_NaN());
    for (const auto& r : rows)
        for (std::size_t a = 0; a < d; ++a) {
            if (r.idx[a] == 0) g.lower[a] = r.x[a];
            if (r.idx[a] + 1 == g.shape[a]) g.spacing[a] = r.x[a];
        }
    for (std::size_t a = 0; a < d; ++a) {
        if (g.shape[a] < 2 || std::isnan(g.lower[a]) || std::isnan(g.spacing[a]))
            throw InputError("grid CSV: cannot infer geometry");
        g.spacing[a] = (g.spacing[a] - g.lower[a]) / static_cast<double>(g.shape[a] - 1);
    }
    GridFunction f{g, domain ? *domain : Domain::box(g.lower, [&] {
                                                std::vector<double> hi(d);
                                                for (std::size_t a = 0; a < d; ++a)
                                                    hi[a] = g.coord(a, g.shape[a] - 1);
                                                return hi;
                                            }()),
                   std::vector<double>(g.size()), std::vector<NodeKind>(g.size())};
    std::vector<char> seen(g.size(), 0);
    for (const auto& r : rows) {
        const std::size_t lin = g.ravel(r.idx);
        if (seen[lin]) throw InputError("grid CSV: duplicate node");
        seen[lin] = 1;
        f.values[lin] = r.value;
        f.mask[lin] = r.kind;
    }
    return f;
}

inline GridFunction read_csv_file(const std::string& path, std::optional<Domain> domain = std::nullopt) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open grid CSV: " + path);
    return read_csv(in, std::move(domain));
}

}  // namespace qma
