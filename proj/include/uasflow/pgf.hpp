#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

namespace uasflow {

/**
 * @brief Probability generating function stored as dense coefficients.
 *
 * Coefficient i is P[X = i]. Arithmetic keeps coefficients nonnegative;
 * normalized() rescales so that the value at z = 1 is one.
 */
class Pgf {
public:
    Pgf() : c_{1.0} {}
    Pgf(std::initializer_list<double> c) : c_(c) { trim(); }
    explicit Pgf(std::vector<double> c) : c_(std::move(c)) { trim(); }

    static Pgf unit() { return Pgf(); }
    static Pgf bernoulli(double p);

    const std::vector<double>& coeffs() const { return c_; }
    std::size_t degree() const { return c_.size() - 1; }
    double operator[](std::size_t i) const { return i < c_.size() ? c_[i] : 0.0; }

    double at0() const { return c_[0]; }
    double at1() const;
    double mean() const;

    Pgf normalized() const;

    Pgf operator*(const Pgf& o) const;
    Pgf operator+(const Pgf& o) const;
    Pgf operator*(double s) const;

private:
    void trim();

    std::vector<double> c_;
};

inline Pgf operator*(double s, const Pgf& p) { return p * s; }

// (v(z) - v(0)) / z computed by dropping c0 and shifting down.
Pgf pgf_shift_div(const Pgf& v);

double clamp01(double x);

}  // namespace uasflow
