#include "vortexhom/grid.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <sstream>

#include "vortexhom/errors.hpp"

namespace vortexhom {

namespace {

// Cut fractions below this are clamped; the boundary point then moves by at
// most kMinTheta * h.
constexpr double kMinTheta = 1e-2;

// Neighbour offsets in (drow, dcol): east, west, north, south.
constexpr std::array<std::array<int, 2>, 4> kOffsets{{{0, 1}, {0, -1}, {1, 0}, {-1, 0}}};

}  // namespace

std::string to_string(Shape s) {
  switch (s) {
    case Shape::unit_square: return "unit_square";
    case Shape::unit_disk: return "unit_disk";
    case Shape::mask_file: return "mask_file";
  }
  return "unknown";
}

GridDomain GridDomain::from_kinds(Shape shape, int rows, int cols, double h, double x0, double y0,
                                  std::vector<NodeKind> kinds,
                                  std::vector<std::array<double, 4>> theta) {
  if (rows < 3 || cols < 3 || static_cast<int>(kinds.size()) != rows * cols) {
    throw ConstructionError("grid dimensions do not match the mask");
  }
  GridDomain d;
  d.shape_ = shape;
  d.rows_ = rows;
  d.cols_ = cols;
  d.h_ = h;
  d.x0_ = x0;
  d.y0_ = y0;
  d.kind_ = std::move(kinds);
  d.finalize(std::move(theta));
  d.validate();
  return d;
}

void GridDomain::finalize(std::vector<std::array<double, 4>> theta) {
  interior_.clear();
  unknown_.assign(size(), -1);
  for (int node = 0; node < size(); ++node) {
    if (kind_[node] == NodeKind::interior) {
      const int r = node / cols_;
      const int c = node % cols_;
      if (r == 0 || c == 0 || r == rows_ - 1 || c == cols_ - 1) {
        throw ConstructionError("interior node on the outer frame of the grid");
      }
      unknown_[node] = static_cast<int>(interior_.size());
      interior_.push_back(node);
    }
  }
  num_boundary_ = static_cast<int>(std::count(kind_.begin(), kind_.end(), NodeKind::boundary));
  if (!theta.empty() && theta.size() != interior_.size()) {
    throw ConstructionError("cut fractions do not match the interior");
  }

  links_.assign(interior_.size(), {});
  diag_.assign(interior_.size(), 0.0);
  for (std::size_t u = 0; u < interior_.size(); ++u) {
    const int node = interior_[u];
    const int r = node / cols_;
    const int c = node % cols_;
    double diag = h_ * h_;
    for (int k = 0; k < 4; ++k) {
      const int nb = (r + kOffsets[k][0]) * cols_ + (c + kOffsets[k][1]);
      Link link;
      link.node = nb;
      link.unknown = unknown_[nb];
      if (kind_[nb] == NodeKind::exterior) {
        throw ConstructionError("interior node adjacent to an exterior node");
      }
      if (link.unknown < 0 && !theta.empty()) {
        link.weight = 1.0 / std::clamp(theta[u][k], kMinTheta, 1.0);
      }
      diag += link.weight;
      links_[u][k] = link;
    }
    diag_[u] = diag;
  }
}

void GridDomain::validate() const {
  if (interior_.empty()) throw ConstructionError("domain has no interior nodes");
  if (num_boundary_ == 0) throw ConstructionError("domain has an empty boundary");

  // Interior must form one 4-connected component.
  std::vector<char> seen(size(), 0);
  std::queue<int> q;
  q.push(interior_.front());
  seen[interior_.front()] = 1;
  int reached = 0;
  while (!q.empty()) {
    const int node = q.front();
    q.pop();
    ++reached;
    for (const auto& link : links_[unknown_[node]]) {
      if (link.unknown >= 0 && !seen[link.node]) {
        seen[link.node] = 1;
        q.push(link.node);
      }
    }
  }
  if (reached != num_interior()) throw ConstructionError("interior is disconnected");

  // Simple connectivity: every non-interior node must reach the outer frame
  // through non-interior nodes (8-connectivity).
  std::fill(seen.begin(), seen.end(), 0);
  for (int node = 0; node < size(); ++node) {
    const int r = node / cols_;
    const int c = node % cols_;
    if ((r == 0 || c == 0 || r == rows_ - 1 || c == cols_ - 1) &&
        kind_[node] != NodeKind::interior) {
      seen[node] = 1;
      q.push(node);
    }
  }
  int outside = 0;
  while (!q.empty()) {
    const int node = q.front();
    q.pop();
    ++outside;
    const int r = node / cols_;
    const int c = node % cols_;
    for (int dr = -1; dr <= 1; ++dr) {
      for (int dc = -1; dc <= 1; ++dc) {
        const int rr = r + dr;
        const int cc = c + dc;
        if (rr < 0 || cc < 0 || rr >= rows_ || cc >= cols_) continue;
        const int nb = rr * cols_ + cc;
        if (!seen[nb] && kind_[nb] != NodeKind::interior) {
          seen[nb] = 1;
          q.push(nb);
        }
      }
    }
  }
  if (outside != size() - num_interior()) {
    throw ConstructionError("interior is not simply connected (mask has a hole)");
  }
}

DomainPtr build_domain(Shape shape, int n) {
  if (n < 17) throw PreconditionError("build_domain: n must be at least 17");
  std::vector<NodeKind> kinds(static_cast<std::size_t>(n) * n, NodeKind::exterior);
  switch (shape) {
    case Shape::unit_square: {
      const double h = 1.0 / (n - 1);
      for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
          const bool edge = (r == 0 || c == 0 || r == n - 1 || c == n - 1);
          const bool corner = (r == 0 || r == n - 1) && (c == 0 || c == n - 1);
          kinds[r * n + c] = edge ? (corner ? NodeKind::exterior : NodeKind::boundary)
                                  : NodeKind::interior;
        }
      }
      return std::make_shared<const GridDomain>(
          GridDomain::from_kinds(shape, n, n, h, 0.0, 0.0, std::move(kinds)));
    }
    case Shape::unit_disk: {
      const double h = 2.0 / (n - 1);
      auto px = [&](int c) { return -1.0 + c * h; };
      auto inside = [&](int r, int c) {
        const double x = px(c);
        const double y = px(r);
        return x * x + y * y < 1.0;
      };
      for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
          if (inside(r, c)) kinds[r * n + c] = NodeKind::interior;
        }
      }
      std::vector<std::array<double, 4>> theta;
      for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
          if (kinds[r * n + c] != NodeKind::interior) continue;
          std::array<double, 4> t{1.0, 1.0, 1.0, 1.0};
          const double x = px(c);
          const double y = px(r);
          for (int k = 0; k < 4; ++k) {
            const int rr = r + kOffsets[k][0];
            const int cc = c + kOffsets[k][1];
            if (inside(rr, cc)) continue;
            kinds[rr * n + cc] = NodeKind::boundary;
            // Solve |p + s*e| = 1 for the crossing distance s along the edge.
            const double pe = kOffsets[k][1] * x + kOffsets[k][0] * y;
            const double s = -pe + std::sqrt(pe * pe + 1.0 - (x * x + y * y));
            t[k] = s / h;
          }
          theta.push_back(t);
        }
      }
      return std::make_shared<const GridDomain>(GridDomain::from_kinds(
          shape, n, n, h, -1.0, -1.0, std::move(kinds), std::move(theta)));
    }
    case Shape::mask_file:
      throw PreconditionError("build_domain: mask domains are loaded with load_mask_file");
  }
  throw PreconditionError("build_domain: unknown shape");
}

DomainPtr parse_mask(const std::string& text) {
  std::istringstream in(text);
  int rows = 0;
  int cols = 0;
  if (!(in >> rows >> cols) || rows < 3 || cols < 3) {
    throw ConstructionError("mask: bad header, expected \"n_rows n_cols\"");
  }
  std::vector<NodeKind> kinds;
  kinds.reserve(static_cast<std::size_t>(rows) * cols);
  for (long i = 0; i < static_cast<long>(rows) * cols; ++i) {
    int v = -1;
    if (!(in >> v) || v < 0 || v > 2) throw ConstructionError("mask: expected values in {0,1,2}");
    kinds.push_back(static_cast<NodeKind>(v));
  }
  const double h = 1.0 / (std::max(rows, cols) - 1);
  return std::make_shared<const GridDomain>(
      GridDomain::from_kinds(Shape::mask_file, rows, cols, h, 0.0, 0.0, std::move(kinds)));
}

DomainPtr load_mask_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConstructionError("mask: cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_mask(buf.str());
}

ScalarField::ScalarField(DomainPtr domain, double fill)
    : domain_(std::move(domain)), values_(domain_->size(), fill) {
  for (int node = 0; node < domain_->size(); ++node) {
    if (domain_->kind(node) == NodeKind::exterior) values_[node] = kExteriorSentinel;
  }
}

ScalarField::ScalarField(DomainPtr domain, std::vector<double> values)
    : domain_(std::move(domain)), values_(std::move(values)) {
  if (static_cast<int>(values_.size()) != domain_->size()) {
    throw PreconditionError("ScalarField: value count does not match the grid");
  }
  for (int node = 0; node < domain_->size(); ++node) {
    if (domain_->kind(node) == NodeKind::exterior) values_[node] = kExteriorSentinel;
  }
}

std::vector<double> ScalarField::interior_values() const {
  std::vector<double> out;
  out.reserve(domain_->num_interior());
  for (int node : domain_->interior_nodes()) out.push_back(values_[node]);
  return out;
}

void ScalarField::set_interior_values(std::span<const double> v) {
  const auto nodes = domain_->interior_nodes();
  if (v.size() != nodes.size()) throw PreconditionError("interior vector has the wrong length");
  for (std::size_t i = 0; i < nodes.size(); ++i) values_[nodes[i]] = v[i];
}

void ScalarField::set_boundary(double value) {
  for (int node = 0; node < domain_->size(); ++node) {
    if (domain_->is_boundary(node)) values_[node] = value;
  }
}

double ScalarField::max_abs_interior() const {
  double m = 0.0;
  for (int node : domain_->interior_nodes()) m = std::max(m, std::abs(values_[node]));
  return m;
}

double ScalarField::min_interior() const {
  double m = std::numeric_limits<double>::infinity();
  for (int node : domain_->interior_nodes()) m = std::min(m, values_[node]);
  return m;
}

double ScalarField::max_interior() const {
  double m = -std::numeric_limits<double>::infinity();
  for (int node : domain_->interior_nodes()) m = std::max(m, values_[node]);
  return m;
}

}  // namespace vortexhom
