#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <iomanip>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace vvlab {

class Grid1D {
public:
    Grid1D() = default;
    Grid1D(double x_min, double x_max, std::size_t n)
        : x_min_(x_min), x_max_(x_max), n_(n), dx_((x_max - x_min) / static_cast<double>(n)) {
        if (!(x_max > x_min)) throw std::invalid_argument("Grid1D: x_max must exceed x_min");
        if (n < 8) throw std::invalid_argument("Grid1D: need at least 8 cells");
    }

    double x_min() const { return x_min_; }
    double x_max() const { return x_max_; }
    std::size_t n() const { return n_; }
    double dx() const { return dx_; }
    // cell centre
    double x(std::size_t i) const { return x_min_ + (static_cast<double>(i) + 0.5) * dx_; }

    friend bool operator==(const Grid1D& a, const Grid1D& b) {
        return a.n_ == b.n_ && a.x_min_ == b.x_min_ && a.x_max_ == b.x_max_;
    }

private:
    double x_min_ = 0.0;
    double x_max_ = 1.0;
    std::size_t n_ = 0;
    double dx_ = 0.0;
};

class Field {
public:
    Field() = default;
    explicit Field(const Grid1D& g, double fill = 0.0) : grid_(g), v_(g.n(), fill) {}
    Field(const Grid1D& g, std::vector<double> values) : grid_(g), v_(std::move(values)) {
        if (v_.size() != g.n()) throw std::invalid_argument("Field: length does not match grid");
    }

    static Field sample(const Grid1D& g, const std::function<double(double)>& fn) {
        Field f(g);
        for (std::size_t i = 0; i < g.n(); ++i) f.v_[i] = fn(g.x(i));
        return f;
    }

    const Grid1D& grid() const { return grid_; }
    std::size_t size() const { return v_.size(); }
    double& operator[](std::size_t i) { return v_[i]; }
    double operator[](std::size_t i) const { return v_[i]; }
    const std::vector<double>& values() const { return v_; }
    std::vector<double>& values() { return v_; }

    bool finite() const {
        for (double x : v_)
            if (!std::isfinite(x)) return false;
        return true;
    }

    Field& operator+=(const Field& o) { check(o); for (std::size_t i = 0; i < v_.size(); ++i) v_[i] += o.v_[i]; return *this; }
    Field& operator-=(const Field& o) { check(o); for (std::size_t i = 0; i < v_.size(); ++i) v_[i] -= o.v_[i]; return *this; }
    Field& operator*=(double a) { for (double& x : v_) x *= a; return *this; }

    friend Field operator+(Field a, const Field& b) { return a += b; }
    friend Field operator-(Field a, const Field& b) { return a -= b; }
    friend Field operator*(double s, Field a) { return a *= s; }
    friend Field operator*(Field a, double s) { return a *= s; }

    void check(const Field& o) const {
        if (!(grid_ == o.grid_)) throw std::invalid_argument("Field: grid mismatch");
    }

private:
    Grid1D grid_;
    std::vector<double> v_;
};

// pointwise combination of any number of same-grid fields
template <class Fn, class... Fs>
Field zip(Fn&& fn, const Field& a, const Fs&... rest) {
    (a.check(rest), ...);
    Field out(a.grid());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = fn(a[i], rest[i]...);
    return out;
}

struct FieldPair {
    Field u1;
    Field u2;

    FieldPair() = default;
    FieldPair(Field a, Field b) : u1(std::move(a)), u2(std::move(b)) { u1.check(u2); }
    explicit FieldPair(const Grid1D& g) : u1(g), u2(g) {}

    const Grid1D& grid() const { return u1.grid(); }
    std::size_t size() const { return u1.size(); }
    bool finite() const { return u1.finite() && u2.finite(); }

    FieldPair& operator+=(const FieldPair& o) { u1 += o.u1; u2 += o.u2; return *this; }
    FieldPair& operator-=(const FieldPair& o) { u1 -= o.u1; u2 -= o.u2; return *this; }
    FieldPair& operator*=(double a) { u1 *= a; u2 *= a; return *this; }
    friend FieldPair operator+(FieldPair a, const FieldPair& b) { return a += b; }
    friend FieldPair operator-(FieldPair a, const FieldPair& b) { return a -= b; }
    friend FieldPair operator*(double s, FieldPair a) { return a *= s; }
};

// Second-order central difference inside, second-order one-sided at the two end cells.
inline Field d_dx(const Field& f) {
    const std::size_t n = f.size();
    const double h = f.grid().dx();
    Field d(f.grid());
    for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (f[i + 1] - f[i - 1]) / (2.0 * h);
    // written in differences so that constants differentiate to exactly zero
    d[0] = (4.0 * (f[1] - f[0]) - (f[2] - f[0])) / (2.0 * h);
    d[n - 1] = (4.0 * (f[n - 1] - f[n - 2]) - (f[n - 1] - f[n - 3])) / (2.0 * h);
    return d;
}

inline Field d2_dx2(const Field& f) { return d_dx(d_dx(f)); }

inline double integral_l1(const Field& f) {
    double s = 0.0;
    for (double x : f.values()) s += std::abs(x);
    return s * f.grid().dx();
}

inline double integral(const Field& f) {
    double s = 0.0;
    for (double x : f.values()) s += x;
    return s * f.grid().dx();
}

inline double sup_norm(const Field& f) {
    double m = 0.0;
    for (double x : f.values()) m = std::max(m, std::abs(x));
    return m;
}

inline double total_variation(const Field& f) {
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < f.size(); ++i) s += std::abs(f[i + 1] - f[i]);
    return s;
}

inline double integral_l1(const FieldPair& u) { return integral_l1(u.u1) + integral_l1(u.u2); }
inline double total_variation(const FieldPair& u) { return total_variation(u.u1) + total_variation(u.u2); }

inline std::size_t default_wedge_stride(std::size_t n) { return n <= 2048 ? 1 : 2; }

// 1/2 sum_{i<j} |z1_i z2_j - z1_j z2_i| dx^2. With stride s only every s-th cell
// enters and the sum is rescaled by s^2.
inline double double_integral_wedge(const Field& z1, const Field& z2, std::size_t stride = 0) {
    z1.check(z2);
    const std::size_t n = z1.size();
    if (stride == 0) stride = default_wedge_stride(n);
    const double h = z1.grid().dx() * static_cast<double>(stride);
    double total = 0.0;
    for (std::size_t i = 0; i < n; i += stride) {
        const double a1 = z1[i], a2 = z2[i];
        if (a1 == 0.0 && a2 == 0.0) continue;
        double row = 0.0;
        for (std::size_t j = i + stride; j < n; j += stride) row += std::abs(a1 * z2[j] - z1[j] * a2);
        total += row;
    }
    return 0.5 * total * h * h;
}

inline void write_csv(std::ostream& os, const Field& f, const std::string& header = "x,value") {
    os << header << '\n' << std::setprecision(17);
    for (std::size_t i = 0; i < f.size(); ++i) os << f.grid().x(i) << ',' << f[i] << '\n';
}

} // namespace vvlab
