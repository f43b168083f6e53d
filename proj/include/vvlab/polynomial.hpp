#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include "jet.hpp"

namespace vvlab {

// Bivariate polynomial sum_{i,j} c[i][j] u1^i u2^j with exact partial derivatives
// of any order.  This is the concrete ScalarMap2 of the built-in model families.
class Poly2 {
public:
    Poly2() = default;
    explicit Poly2(std::vector<std::vector<double>> c) : c_(std::move(c)) { trim(); }
    Poly2(std::initializer_list<std::vector<double>> rows) : Poly2(std::vector<std::vector<double>>(rows)) {}

    static Poly2 constant(double a) { return Poly2({{a}}); }
    // polynomial in u1 only: a[0] + a[1] u1 + ...
    static Poly2 in_u1(const std::vector<double>& a) {
        std::vector<std::vector<double>> c;
        for (double x : a) c.push_back({x});
        return Poly2(c);
    }
    // polynomial in u2 only
    static Poly2 in_u2(const std::vector<double>& a) { return Poly2({a}); }

    const std::vector<std::vector<double>>& coefficients() const { return c_; }

    double coeff(std::size_t i, std::size_t j) const {
        if (i >= c_.size() || j >= c_[i].size()) return 0.0;
        return c_[i][j];
    }

    std::size_t degree_u1() const { return c_.empty() ? 0 : c_.size() - 1; }
    std::size_t degree_u2() const {
        std::size_t d = 0;
        for (const auto& row : c_)
            for (std::size_t j = 0; j < row.size(); ++j)
                if (row[j] != 0.0) d = std::max(d, j);
        return d;
    }
    bool depends_on_u2() const { return degree_u2() > 0; }

    // partial derivative d^a/du1^a d^b/du2^b
    double deriv(std::size_t a, std::size_t b, double u1, double u2) const {
        double total = 0.0;
        double p1 = 1.0;
        for (std::size_t i = a; i < c_.size(); ++i) {
            const auto& row = c_[i];
            double p2 = 1.0;
            double inner = 0.0;
            for (std::size_t j = b; j < row.size(); ++j) {
                inner += row[j] * falling(j, b) * p2;
                p2 *= u2;
            }
            total += falling(i, a) * inner * p1;
            p1 *= u1;
        }
        return total;
    }

    // the partial derivative as a polynomial
    Poly2 derivative(std::size_t a, std::size_t b) const {
        std::vector<std::vector<double>> c;
        for (std::size_t i = a; i < c_.size(); ++i) {
            std::vector<double> row;
            for (std::size_t j = b; j < c_[i].size(); ++j) row.push_back(c_[i][j] * falling(i, a) * falling(j, b));
            c.push_back(row);
        }
        return Poly2(c);
    }

    double operator()(double u1, double u2) const { return deriv(0, 0, u1, u2); }
    double d1(double u1, double u2) const { return deriv(1, 0, u1, u2); }
    double d2(double u1, double u2) const { return deriv(0, 1, u1, u2); }
    double d11(double u1, double u2) const { return deriv(2, 0, u1, u2); }
    double d12(double u1, double u2) const { return deriv(1, 1, u1, u2); }
    double d22(double u1, double u2) const { return deriv(0, 2, u1, u2); }

    // composition with jets of the arguments
    template <std::size_t N>
    Jet<N> operator()(const Jet<N>& u1, const Jet<N>& u2) const {
        Jet<N> out;
        Jet<N> p1(1.0);
        for (const auto& row : c_) {
            Jet<N> inner;
            Jet<N> p2(1.0);
            for (double cij : row) {
                if (cij != 0.0) inner += cij * p2;
                p2 *= u2;
            }
            out += inner * p1;
            p1 *= u1;
        }
        return out;
    }

    std::string to_string() const {
        std::ostringstream os;
        os.precision(12);
        bool first = true;
        for (std::size_t i = 0; i < c_.size(); ++i)
            for (std::size_t j = 0; j < c_[i].size(); ++j) {
                if (c_[i][j] == 0.0) continue;
                if (!first) os << " + ";
                first = false;
                os << c_[i][j];
                if (i > 0) os << "*u1" << (i > 1 ? "^" + std::to_string(i) : "");
                if (j > 0) os << "*u2" << (j > 1 ? "^" + std::to_string(j) : "");
            }
        if (first) os << "0";
        return os.str();
    }

private:
    static double falling(std::size_t n, std::size_t k) {
        double r = 1.0;
        for (std::size_t m = 0; m < k; ++m) r *= static_cast<double>(n - m);
        return r;
    }

    void trim() {
        for (auto& row : c_)
            while (!row.empty() && row.back() == 0.0) row.pop_back();
        while (!c_.empty() && c_.back().empty()) c_.pop_back();
    }

    std::vector<std::vector<double>> c_;
};

} // namespace vvlab
