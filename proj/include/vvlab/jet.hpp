#pragma once

#include <array>
#include <cstddef>

namespace vvlab {

// Truncated Taylor series in one variable: c[k] = f^(k)(x0) / k!.
// Products and polynomial compositions are exact up to order N, so identities
// built from them hold to rounding error.
template <std::size_t N>
struct Jet {
    std::array<double, N + 1> c{};

    Jet() = default;
    explicit Jet(double value) { c[0] = value; }

    static Jet variable(double x0) {
        Jet j(x0);
        if constexpr (N >= 1) j.c[1] = 1.0;
        return j;
    }

    // builds a jet from derivative values f, f', f'', ...
    static Jet from_derivatives(const std::array<double, N + 1>& d) {
        Jet j;
        double fact = 1.0;
        for (std::size_t k = 0; k <= N; ++k) {
            if (k > 0) fact *= static_cast<double>(k);
            j.c[k] = d[k] / fact;
        }
        return j;
    }

    double value() const { return c[0]; }

    double derivative(std::size_t k) const {
        double fact = 1.0;
        for (std::size_t i = 2; i <= k; ++i) fact *= static_cast<double>(i);
        return c[k] * fact;
    }

    // d/dx, losing the top coefficient
    Jet<N> dx() const {
        Jet<N> out;
        for (std::size_t k = 0; k < N; ++k) out.c[k] = c[k + 1] * static_cast<double>(k + 1);
        return out;
    }

    Jet& operator+=(const Jet& o) { for (std::size_t k = 0; k <= N; ++k) c[k] += o.c[k]; return *this; }
    Jet& operator-=(const Jet& o) { for (std::size_t k = 0; k <= N; ++k) c[k] -= o.c[k]; return *this; }
    Jet& operator*=(double s) { for (double& x : c) x *= s; return *this; }
    Jet& operator*=(const Jet& o) {
        Jet r;
        for (std::size_t i = 0; i <= N; ++i)
            for (std::size_t j = 0; i + j <= N; ++j) r.c[i + j] += c[i] * o.c[j];
        return *this = r;
    }

    friend Jet operator+(Jet a, const Jet& b) { return a += b; }
    friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
    friend Jet operator*(Jet a, const Jet& b) { return a *= b; }
    friend Jet operator*(double s, Jet a) { return a *= s; }
    friend Jet operator*(Jet a, double s) { return a *= s; }
    friend Jet operator+(double s, Jet a) { a.c[0] += s; return a; }
    friend Jet operator-(Jet a, double s) { a.c[0] -= s; return a; }
    friend Jet operator-(Jet a) { return a *= -1.0; }
};

} // namespace vvlab
