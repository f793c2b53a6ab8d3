#include "thinobs/field.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "thinobs/error.hpp"

namespace thinobs {

namespace {

constexpr double kContainsSlack = 1e-12;

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

std::string format_double(double v)
{
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

}  // namespace

std::size_t GridSpec::plane_size() const
{
    return dim == 3 ? static_cast<std::size_t>(n + 1) * (n + 1) : static_cast<std::size_t>(n + 1);
}

bool GridSpec::contains(std::span<const double> x) const
{
    const double slack = kContainsSlack * side_length;
    for (int a = 0; a < dim; ++a) {
        if (x[a] < lower(a) - slack || x[a] > upper(a) + slack) {
            return false;
        }
    }
    return true;
}

bool GridSpec::contains_ball(std::span<const double> center, double r) const
{
    const double slack = kContainsSlack * side_length;
    for (int a = 0; a < dim; ++a) {
        if (center[a] - r < lower(a) - slack || center[a] + r > upper(a) + slack) {
            return false;
        }
    }
    return true;
}

GridSpec make_grid(int dim, int n, double side_length, double s)
{
    std::array<double, 3> origin{};
    for (int a = 0; a < 3; ++a) {
        origin[a] = -0.5 * side_length;
    }
    return make_grid(dim, n, side_length, s, std::span<const double>(origin.data(), 3));
}

GridSpec make_grid(int dim, int n, double side_length, double s, std::span<const double> origin)
{
    if (dim != 2 && dim != 3) {
        throw InvalidArgument("grid dimension must be 2 or 3, got " + std::to_string(dim));
    }
    if (n < 8 || !is_power_of_two(n)) {
        throw InvalidArgument("cells per axis must be a power of two >= 8 (unsupported refinement ladder), got " +
                              std::to_string(n));
    }
    if (!(s > 0.0 && s < 1.0)) {
        throw InvalidArgument("s must lie in (0,1), got " + format_double(s));
    }
    if (!(side_length > 0.0) || !std::isfinite(side_length)) {
        throw InvalidArgument("side length must be positive and finite");
    }
    if (origin.size() < static_cast<std::size_t>(dim)) {
        throw InvalidArgument("origin needs one coordinate per dimension");
    }
    GridSpec g;
    g.dim = dim;
    g.n = n;
    g.side_length = side_length;
    g.s = s;
    g.h = side_length / n;
    for (int a = 0; a < dim; ++a) {
        if (!std::isfinite(origin[a])) {
            throw InvalidArgument("origin must be finite");
        }
        g.origin[a] = origin[a];
    }
    if (g.origin[dim - 1] != -0.5 * side_length) {
        throw InvalidArgument("box must be symmetric in x_d: origin x_d must equal -side_length/2");
    }
    return g;
}

double weight_at(const GridSpec& spec, double cell_center_xd)
{
    if (cell_center_xd == 0.0 || !std::isfinite(cell_center_xd)) {
        throw InvalidArgument("weight is evaluated at cell centers only, never at x_d = 0");
    }
    return std::pow(std::abs(cell_center_xd), spec.exponent());
}

double cell_weight(const GridSpec& spec, int layer)
{
    const double p = spec.exponent();
    const double q = p + 1.0;
    const double l = static_cast<double>(layer < 0 ? -layer - 1 : layer);
    return std::pow(spec.h, p) * (std::pow(l + 1.0, q) - std::pow(l, q)) / q;
}

double normal_edge_weight(const GridSpec& spec, int layer)
{
    const double p = spec.exponent();
    const double q = 1.0 - p;
    const double l = static_cast<double>(layer < 0 ? -layer - 1 : layer);
    return std::pow(spec.h, p) * q / (std::pow(l + 1.0, q) - std::pow(l, q));
}

ScalarField::ScalarField(GridSpec spec, std::vector<double> values)
    : spec_(spec), values_(std::move(values))
{
    if (values_.size() != spec_.size()) {
        throw InvalidArgument("field size " + std::to_string(values_.size()) + " does not match grid size " +
                              std::to_string(spec_.size()));
    }
    for (double v : values_) {
        if (!std::isfinite(v)) {
            throw NumericalError("field values must be finite");
        }
    }
}

ScalarField ScalarField::sample(const GridSpec& spec, const PointFunction& f)
{
    std::vector<double> v(spec.size());
    std::array<double, 3> x{};
    const int n2 = spec.dim == 3 ? spec.n : 0;
    for (int i1 = 0; i1 <= spec.n; ++i1) {
        x[0] = spec.node(0, i1);
        for (int i2 = 0; i2 <= n2; ++i2) {
            if (spec.dim == 3) {
                x[1] = spec.node(1, i2);
            }
            for (int j = 0; j <= spec.half(); ++j) {
                x[spec.dim - 1] = j * spec.h;
                v[spec.index(i1, i2, j)] = f(std::span<const double>(x.data(), spec.dim));
            }
        }
    }
    return {spec, std::move(v)};
}

std::array<double, 3> ScalarField::position(int i1, int i2, int j) const
{
    std::array<double, 3> x{};
    x[0] = spec_.node(0, i1);
    if (spec_.dim == 3) {
        x[1] = spec_.node(1, i2);
    }
    x[spec_.dim - 1] = j * spec_.h;
    return x;
}

ScalarField ScalarField::scaled(double c) const
{
    std::vector<double> v(values_);
    for (double& x : v) {
        x *= c;
    }
    return {spec_, std::move(v)};
}

double interpolate(const ScalarField& field, std::span<const double> point)
{
    const GridSpec& g = field.spec();
    if (point.size() < static_cast<std::size_t>(g.dim)) {
        throw InvalidArgument("point has fewer coordinates than the grid dimension");
    }
    if (!g.contains(point)) {
        throw GeometryError("interpolation point outside the grid box");
    }
    std::array<int, 3> idx{};
    std::array<double, 3> frac{};
    for (int a = 0; a < g.dim; ++a) {
        const bool normal = a == g.dim - 1;
        const double x = normal ? std::abs(point[a]) : point[a] - g.origin[a];
        const int cells = normal ? g.half() : g.n;
        const double t = x / g.h;
        int i = static_cast<int>(std::floor(t));
        i = std::clamp(i, 0, cells - 1);
        idx[a] = i;
        frac[a] = std::clamp(t - i, 0.0, 1.0);
    }
    if (g.dim == 2) {
        const int i = idx[0];
        const int j = idx[1];
        const double fx = frac[0];
        const double fy = frac[1];
        const double lo = (1.0 - fy) * field.at(i, 0, j) + fy * field.at(i, 0, j + 1);
        const double hi = (1.0 - fy) * field.at(i + 1, 0, j) + fy * field.at(i + 1, 0, j + 1);
        return (1.0 - fx) * lo + fx * hi;
    }
    const int i = idx[0];
    const int k = idx[1];
    const int j = idx[2];
    const double fx = frac[0];
    const double fy = frac[1];
    const double fz = frac[2];
    auto edge = [&](int a, int b) {
        return (1.0 - fz) * field.at(a, b, j) + fz * field.at(a, b, j + 1);
    };
    const double lo = (1.0 - fy) * edge(i, k) + fy * edge(i, k + 1);
    const double hi = (1.0 - fy) * edge(i + 1, k) + fy * edge(i + 1, k + 1);
    return (1.0 - fx) * lo + fx * hi;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& bytes)
{
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw IoError("cannot open " + tmp.string() + " for writing");
        }
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) {
            throw IoError("write failed: " + tmp.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw IoError("cannot rename into " + path.string());
    }
}

void save_field(const ScalarField& field, const std::filesystem::path& path, std::span<const std::string> comments)
{
    const GridSpec& g = field.spec();
    std::ostringstream os;
    os << "FBX1\n";
    for (const auto& c : comments) {
        os << "# " << c << '\n';
    }
    os << "dim " << g.dim << '\n'
       << "n " << g.n << '\n'
       << "side_length " << format_double(g.side_length) << '\n'
       << "s " << format_double(g.s) << '\n'
       << "origin";
    for (int a = 0; a < g.dim; ++a) {
        os << ' ' << format_double(g.origin[a]);
    }
    os << '\n';
    std::string bytes = os.str();
    const std::size_t header = bytes.size();
    const auto values = field.values();
    bytes.resize(header + values.size() * sizeof(double));
    for (std::size_t i = 0; i < values.size(); ++i) {
        auto bits = std::bit_cast<std::uint64_t>(values[i]);
        if constexpr (std::endian::native == std::endian::big) {
            bits = __builtin_bswap64(bits);
        }
        std::memcpy(bytes.data() + header + i * sizeof(double), &bits, sizeof(bits));
    }
    write_file_atomic(path, bytes);
}

namespace {

struct ParsedField {
    ScalarField field;
    std::vector<std::string> comments;
};

ParsedField parse_fbx1(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::size_t pos = 0;
    auto next_line = [&]() -> std::string {
        const std::size_t end = bytes.find('\n', pos);
        if (end == std::string::npos) {
            throw IoError("malformed FBX1 header in " + path.string() + ": unexpected end of header");
        }
        std::string line = bytes.substr(pos, end - pos);
        pos = end + 1;
        return line;
    };
    if (next_line() != "FBX1") {
        throw IoError("malformed FBX1 header in " + path.string() + ": missing magic");
    }
    ParsedField out;
    std::string line = next_line();
    while (!line.empty() && line[0] == '#') {
        out.comments.push_back(line.size() > 2 ? line.substr(2) : std::string());
        line = next_line();
    }
    auto expect_key = [&](const std::string& l, const std::string& key) {
        std::istringstream is(l);
        std::string k;
        is >> k;
        if (k != key) {
            throw IoError("malformed FBX1 header in " + path.string() + ": expected '" + key + "', found '" + l + "'");
        }
        std::string rest;
        std::getline(is, rest);
        return rest;
    };
    auto parse_number = [&](const std::string& text, const std::string& key) {
        std::istringstream is(text);
        double v = 0.0;
        if (!(is >> v)) {
            throw IoError("malformed FBX1 header in " + path.string() + ": bad value for '" + key + "'");
        }
        return v;
    };
    const double dim_v = parse_number(expect_key(line, "dim"), "dim");
    const double n_v = parse_number(expect_key(next_line(), "n"), "n");
    const double side = parse_number(expect_key(next_line(), "side_length"), "side_length");
    const double s = parse_number(expect_key(next_line(), "s"), "s");
    const std::string origin_text = expect_key(next_line(), "origin");
    std::vector<double> origin;
    {
        std::istringstream is(origin_text);
        double v = 0.0;
        while (is >> v) {
            origin.push_back(v);
        }
    }
    const int dim = static_cast<int>(dim_v);
    if (static_cast<double>(dim) != dim_v) {
        throw IoError("malformed FBX1 header in " + path.string() + ": non-integer dim");
    }
    if (origin.size() != static_cast<std::size_t>(dim)) {
        throw IoError("dimension mismatch in " + path.string() + ": dim " + std::to_string(dim) + " but " +
                      std::to_string(origin.size()) + " origin coordinates");
    }
    GridSpec g;
    try {
        g = make_grid(dim, static_cast<int>(n_v), side, s, origin);
    } catch (const InvalidArgument& e) {
        throw IoError("invalid FBX1 header in " + path.string() + ": " + e.what());
    }
    const std::size_t expected = g.size() * sizeof(double);
    const std::size_t actual = bytes.size() - pos;
    if (actual < expected) {
        throw IoError("truncated FBX1 payload in " + path.string() + ": expected " + std::to_string(expected) +
                      " bytes, got " + std::to_string(actual));
    }
    if (actual > expected) {
        throw IoError("FBX1 payload in " + path.string() + " has " + std::to_string(actual - expected) +
                      " trailing bytes");
    }
    std::vector<double> values(g.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        std::uint64_t bits = 0;
        std::memcpy(&bits, bytes.data() + pos + i * sizeof(double), sizeof(bits));
        if constexpr (std::endian::native == std::endian::big) {
            bits = __builtin_bswap64(bits);
        }
        values[i] = std::bit_cast<double>(bits);
        if (!std::isfinite(values[i])) {
            throw IoError("non-finite value at index " + std::to_string(i) + " in " + path.string());
        }
    }
    out.field = ScalarField(g, std::move(values));
    return out;
}

}  // namespace

ScalarField load_field(const std::filesystem::path& path) { return parse_fbx1(path).field; }

std::vector<std::string> load_field_comments(const std::filesystem::path& path)
{
    return parse_fbx1(path).comments;
}

void save_field_csv(const ScalarField& field, const std::filesystem::path& path, std::span<const std::string> comments)
{
    const GridSpec& g = field.spec();
    if (g.dim != 2) {
        throw InvalidArgument("CSV export is available for 2D fields only");
    }
    std::ostringstream os;
    os << std::setprecision(17);
    for (const auto& c : comments) {
        os << "# " << c << '\n';
    }
    os << "x1,x_d,value\n";
    for (int i = 0; i <= g.n; ++i) {
        for (int j = -g.half(); j <= g.half(); ++j) {
            os << g.node(0, i) << ',' << j * g.h << ',' << field.at(i, 0, j) << '\n';
        }
    }
    write_file_atomic(path, os.str());
}

}  // namespace thinobs
