#include "uasflow/pgf.hpp"

#include <algorithm>
#include <cmath>

namespace uasflow {

double clamp01(double x) {
    if (!(x > 0.0)) return 0.0;
    return x > 1.0 ? 1.0 : x;
}

Pgf Pgf::bernoulli(double p) {
    p = clamp01(p);
    return Pgf{1.0 - p, p};
}

void Pgf::trim() {
    if (c_.empty()) c_.push_back(0.0);
    for (auto& x : c_)
        if (x < 0.0) x = 0.0;
    while (c_.size() > 1 && c_.back() == 0.0) c_.pop_back();
}

double Pgf::at1() const {
    double s = 0.0;
    for (double x : c_) s += x;
    return s;
}

double Pgf::mean() const {
    double s = 0.0;
    for (std::size_t i = 1; i < c_.size(); ++i) s += static_cast<double>(i) * c_[i];
    return s;
}

Pgf Pgf::normalized() const {
    double s = at1();
    if (s <= 0.0) return Pgf::unit();
    std::vector<double> out(c_);
    for (auto& x : out) x /= s;
    return Pgf(std::move(out));
}

Pgf Pgf::operator*(const Pgf& o) const {
    std::vector<double> out(c_.size() + o.c_.size() - 1, 0.0);
    for (std::size_t i = 0; i < c_.size(); ++i) {
        if (c_[i] == 0.0) continue;
        for (std::size_t j = 0; j < o.c_.size(); ++j) out[i + j] += c_[i] * o.c_[j];
    }
    return Pgf(std::move(out));
}

Pgf Pgf::operator+(const Pgf& o) const {
    std::vector<double> out(std::max(c_.size(), o.c_.size()), 0.0);
    for (std::size_t i = 0; i < c_.size(); ++i) out[i] += c_[i];
    for (std::size_t i = 0; i < o.c_.size(); ++i) out[i] += o.c_[i];
    return Pgf(std::move(out));
}

Pgf Pgf::operator*(double s) const {
    std::vector<double> out(c_);
    for (auto& x : out) x *= s;
    return Pgf(std::move(out));
}

Pgf pgf_shift_div(const Pgf& v) {
    const auto& c = v.coeffs();
    if (c.size() <= 1) return Pgf{0.0};
    return Pgf(std::vector<double>(c.begin() + 1, c.end()));
}

}  // namespace uasflow
