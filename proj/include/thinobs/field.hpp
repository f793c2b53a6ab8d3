#pragma once

// Grid data model for the weighted half-space geometry.
//
// The box is axis-aligned and symmetric in the last coordinate x_d about 0.
// Fields are stored on the half grid x_d >= 0 only; every query at x_d < 0 is
// answered by even reflection, so u(x', x_d) = u(x', -x_d) holds by
// construction. Within the half grid the x_d index varies fastest.

#include <array>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace thinobs {

/// Function of a point given by its first `dim` coordinates.
using PointFunction = std::function<double(std::span<const double>)>;

struct GridSpec {
    int dim = 2;
    int n = 8;                      ///< cells per axis, power of two
    double side_length = 2.0;
    double s = 0.5;                 ///< fractional parameter in (0, 1)
    std::array<double, 3> origin{}; ///< box corner; origin[dim-1] == -side_length/2
    double h = 0.25;

    /// Index of the top node layer in x_d (the half grid has layers 0..half()).
    [[nodiscard]] int half() const { return n / 2; }
    [[nodiscard]] int layers() const { return n / 2 + 1; }
    /// Number of nodes on the thin plane, (n+1)^(dim-1).
    [[nodiscard]] std::size_t plane_size() const;
    [[nodiscard]] std::size_t size() const { return plane_size() * static_cast<std::size_t>(layers()); }
    /// Exponent of the weight |x_d|^(1-2s).
    [[nodiscard]] double exponent() const { return 1.0 - 2.0 * s; }
    [[nodiscard]] double lower(int axis) const { return origin[axis]; }
    [[nodiscard]] double upper(int axis) const { return origin[axis] + side_length; }
    /// Flat index of the half-grid node (i1, i2, j); i2 is ignored in 2D.
    [[nodiscard]] std::size_t index(int i1, int i2, int j) const
    {
        const std::size_t t = dim == 3 ? static_cast<std::size_t>(i1) * (n + 1) + i2
                                       : static_cast<std::size_t>(i1);
        return t * layers() + j;
    }
    /// Coordinate of node i along a tangential axis.
    [[nodiscard]] double node(int axis, int i) const { return origin[axis] + i * h; }
    /// True if the point lies in the closed box (with a round-off allowance).
    [[nodiscard]] bool contains(std::span<const double> x) const;
    /// True if the closed ball B_r(center) lies in the closed box.
    [[nodiscard]] bool contains_ball(std::span<const double> center, double r) const;

    friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Builds a grid on the box with the given side length, centered at the
/// origin. Rejects s outside (0,1), dim outside {2,3}, and n that is not a
/// power of two >= 8.
GridSpec make_grid(int dim, int n, double side_length, double s);

/// Same, with an explicit box corner. The x_d entry must equal -side_length/2.
GridSpec make_grid(int dim, int n, double side_length, double s, std::span<const double> origin);

/// Point value of the weight |x_d|^(1-2s). Rejects x_d == 0; intended for
/// cell centers, which never lie on the thin plane.
double weight_at(const GridSpec& spec, double cell_center_xd);

/// Average of |x_d|^(1-2s) over the cell layer [l h, (l+1) h]. Finite for
/// every s in (0,1), including the layer touching the thin plane.
double cell_weight(const GridSpec& spec, int layer);

/// Harmonic average of |x_d|^(1-2s) along an x_d-edge of the layer
/// [l h, (l+1) h]; the 1D flux through such an edge is exact for any
/// function of x_d alone that solves the weighted equation.
double normal_edge_weight(const GridSpec& spec, int layer);

class ScalarField {
public:
    ScalarField() = default;
    /// Takes ownership of half-grid values; rejects wrong sizes and
    /// non-finite entries.
    ScalarField(GridSpec spec, std::vector<double> values);

    /// Samples f at every half-grid node.
    static ScalarField sample(const GridSpec& spec, const PointFunction& f);

    [[nodiscard]] const GridSpec& spec() const { return spec_; }
    [[nodiscard]] std::span<const double> values() const { return values_; }
    /// Node value; negative j is reflected.
    [[nodiscard]] double at(int i1, int i2, int j) const
    {
        return values_[spec_.index(i1, i2, j < 0 ? -j : j)];
    }
    /// Fills the point coordinates of a half-grid node.
    [[nodiscard]] std::array<double, 3> position(int i1, int i2, int j) const;

    [[nodiscard]] ScalarField scaled(double c) const;
    [[nodiscard]] std::vector<double> release() && { return std::move(values_); }

private:
    GridSpec spec_{};
    std::vector<double> values_;
};

/// Multilinear interpolation of node values; points with x_d < 0 are
/// reflected. Throws GeometryError outside the box.
double interpolate(const ScalarField& field, std::span<const double> point);

/// Writes the FBX1 format: text header lines
///   FBX1
///   # <comment>            (zero or more)
///   dim <d>
///   n <n>
///   side_length <L>
///   s <s>
///   origin <o_1> ... <o_d>
/// followed by the half-grid values as little-endian 64-bit floats in
/// row-major order with the x_d index last. The file is written to a
/// temporary sibling and renamed into place.
void save_field(const ScalarField& field, const std::filesystem::path& path,
                std::span<const std::string> comments = {});

/// Reads an FBX1 file; throws IoError on malformed header, dimension
/// mismatch, truncated payload (reporting byte counts) or non-finite values.
ScalarField load_field(const std::filesystem::path& path);

/// Comment lines ("# ...") stored in an FBX1 header.
std::vector<std::string> load_field_comments(const std::filesystem::path& path);

/// CSV export of a 2D field over the full grid: x1,x_d,value per line.
void save_field_csv(const ScalarField& field, const std::filesystem::path& path,
                    std::span<const std::string> comments = {});

/// Writes bytes to `path` through a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);

}  // namespace thinobs
