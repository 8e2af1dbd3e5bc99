#pragma once

// Uniform node grid over a square bounding box with interior/boundary masks.
//
// Curved boundaries are handled by cut edges: an interior node whose grid
// edge crosses the boundary at fraction theta of the spacing couples to the
// Dirichlet value placed at the crossing with weight 1/theta.  This keeps
// the five-point operator symmetric and the solution second-order accurate.

#include <array>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace vortexhom {

enum class Shape { unit_square, unit_disk, mask_file };

enum class NodeKind : std::uint8_t { exterior = 0, interior = 1, boundary = 2 };

std::string to_string(Shape s);

/// Immutable masked grid. Node (row, col) sits at (x0 + col*h, y0 + row*h).
class GridDomain {
 public:
  /// One of the four grid neighbours of an interior node.
  struct Link {
    int node = -1;         // linear node index of the neighbour
    int unknown = -1;      // interior index of the neighbour, -1 when boundary
    double weight = 1.0;   // 1/theta; 1 for uncut edges
  };

  Shape shape() const noexcept { return shape_; }
  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  int size() const noexcept { return rows_ * cols_; }
  double h() const noexcept { return h_; }
  double x(int node) const noexcept { return x0_ + (node % cols_) * h_; }
  double y(int node) const noexcept { return y0_ + (node / cols_) * h_; }
  double x0() const noexcept { return x0_; }
  double y0() const noexcept { return y0_; }
  /// Side length of the bounding box.
  double box_side() const noexcept { return h_ * (std::max(rows_, cols_) - 1); }

  NodeKind kind(int node) const { return kind_[node]; }
  bool is_interior(int node) const { return kind_[node] == NodeKind::interior; }
  bool is_boundary(int node) const { return kind_[node] == NodeKind::boundary; }

  /// Interior nodes in row-major order; position in this list is the unknown index.
  std::span<const int> interior_nodes() const noexcept { return interior_; }
  int num_interior() const noexcept { return static_cast<int>(interior_.size()); }
  int num_boundary() const noexcept { return num_boundary_; }
  /// Interior index of a node, or -1.
  int unknown_of(int node) const { return unknown_[node]; }

  std::span<const Link, 4> links(int unknown) const {
    return std::span<const Link, 4>(links_[unknown]);
  }
  /// Diagonal of h^2 * (-Delta_h + 1) at an interior unknown.
  double scaled_diagonal(int unknown) const { return diag_[unknown]; }

  double interior_area() const { return num_interior() * h_ * h_; }

  /// Builds a domain from raw node kinds; used by the named builders and by
  /// mask files. Cut fractions default to 1 for every edge.
  static GridDomain from_kinds(Shape shape, int rows, int cols, double h, double x0, double y0,
                               std::vector<NodeKind> kinds,
                               std::vector<std::array<double, 4>> theta = {});

 private:
  void finalize(std::vector<std::array<double, 4>> theta);
  void validate() const;

  Shape shape_ = Shape::unit_square;
  int rows_ = 0;
  int cols_ = 0;
  double h_ = 0.0;
  double x0_ = 0.0;
  double y0_ = 0.0;
  std::vector<NodeKind> kind_;
  std::vector<int> interior_;
  std::vector<int> unknown_;
  std::vector<std::array<Link, 4>> links_;
  std::vector<double> diag_;
  int num_boundary_ = 0;
};

using DomainPtr = std::shared_ptr<const GridDomain>;

/// unit_square is [0,1]^2; unit_disk is |x| < 1 inside the box [-1,1]^2.
/// Requires n >= 17 for the named shapes.
DomainPtr build_domain(Shape shape, int n);

/// Mask files: first line "n_rows n_cols", then n_rows rows of {0,1,2}
/// (exterior / interior / boundary). The box side is 1.
DomainPtr load_mask_file(const std::filesystem::path& path);
DomainPtr parse_mask(const std::string& text);

/// Nodal values on a domain. Exterior nodes hold NaN.
class ScalarField {
 public:
  ScalarField() = default;
  explicit ScalarField(DomainPtr domain, double fill = 0.0);
  ScalarField(DomainPtr domain, std::vector<double> values);

  const GridDomain& domain() const { return *domain_; }
  const DomainPtr& domain_ptr() const { return domain_; }

  double& operator[](int node) { return values_[node]; }
  double operator[](int node) const { return values_[node]; }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

  /// Values at interior nodes, in unknown order.
  std::vector<double> interior_values() const;
  void set_interior_values(std::span<const double> v);
  void set_boundary(double value);

  double max_abs_interior() const;
  double min_interior() const;
  double max_interior() const;

 private:
  DomainPtr domain_;
  std::vector<double> values_;
};

inline constexpr double kExteriorSentinel = std::numeric_limits<double>::quiet_NaN();

}  // namespace vortexhom
