#include "divbar/interp.hpp"

#include <algorithm>
#include <cmath>

#include "divbar/errors.hpp"

namespace divbar {

namespace {

std::size_t find_cell(const std::vector<double>& x, double q) {
    if (q <= x.front()) return 0;
    if (q >= x[x.size() - 2]) return x.size() - 2;
    auto it = std::upper_bound(x.begin(), x.end(), q);
    return static_cast<std::size_t>(it - x.begin()) - 1;
}

} // namespace

PchipInterpolant::PchipInterpolant(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 2 || y_.size() != n) throw ParameterError("pchip: need >= 2 nodes");
    for (std::size_t i = 0; i + 1 < n; ++i)
        if (!(x_[i] < x_[i + 1])) throw ParameterError("pchip: abscissae not increasing");

    std::vector<double> h(n - 1), d(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        h[i] = x_[i + 1] - x_[i];
        d[i] = (y_[i + 1] - y_[i]) / h[i];
    }
    m_.assign(n, 0.0);
    // interior slopes: weighted harmonic mean when secants agree in sign
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (d[i - 1] * d[i] > 0.0) {
            const double w1 = 2.0 * h[i] + h[i - 1];
            const double w2 = h[i] + 2.0 * h[i - 1];
            m_[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
        }
    }
    // one-sided end slopes, limited to preserve shape
    auto end_slope = [](double h0, double h1, double d0, double d1) {
        double m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if (m * d0 <= 0.0)
            m = 0.0;
        else if (d0 * d1 < 0.0 && std::abs(m) > 3.0 * std::abs(d0))
            m = 3.0 * d0;
        return m;
    };
    if (n == 2) {
        m_[0] = m_[1] = d[0];
    } else {
        m_[0] = end_slope(h[0], h[1], d[0], d[1]);
        m_[n - 1] = end_slope(h[n - 2], h[n - 3], d[n - 2], d[n - 3]);
    }
}

std::size_t PchipInterpolant::cell(double x) const { return find_cell(x_, x); }

double PchipInterpolant::operator()(double x) const {
    if (x < x_.front()) return y_.front() + m_.front() * (x - x_.front());
    if (x > x_.back()) return y_.back() + m_.back() * (x - x_.back());
    const std::size_t i = cell(x);
    const double h = x_[i + 1] - x_[i];
    const double t = (x - x_[i]) / h;
    const double t2 = t * t, t3 = t2 * t;
    const double h00 = 2 * t3 - 3 * t2 + 1;
    const double h10 = t3 - 2 * t2 + t;
    const double h01 = -2 * t3 + 3 * t2;
    const double h11 = t3 - t2;
    return h00 * y_[i] + h10 * h * m_[i] + h01 * y_[i + 1] + h11 * h * m_[i + 1];
}

double PchipInterpolant::derivative(double x) const {
    if (x < x_.front()) return m_.front();
    if (x > x_.back()) return m_.back();
    const std::size_t i = cell(x);
    const double h = x_[i + 1] - x_[i];
    const double t = (x - x_[i]) / h;
    const double t2 = t * t;
    const double dh00 = (6 * t2 - 6 * t) / h;
    const double dh10 = 3 * t2 - 4 * t + 1;
    const double dh01 = (-6 * t2 + 6 * t) / h;
    const double dh11 = 3 * t2 - 2 * t;
    return dh00 * y_[i] + dh10 * m_[i] + dh01 * y_[i + 1] + dh11 * m_[i + 1];
}

HermiteTable::HermiteTable(std::vector<double> x, std::vector<double> y, std::vector<double> dy)
    : x_(std::move(x)), y_(std::move(y)), dy_(std::move(dy)) {
    if (x_.size() < 2 || y_.size() != x_.size() || dy_.size() != x_.size())
        throw ParameterError("hermite: inconsistent table sizes");
    for (std::size_t i = 0; i + 1 < x_.size(); ++i)
        if (!(x_[i] < x_[i + 1])) throw ParameterError("hermite: abscissae not increasing");
}

std::size_t HermiteTable::cell(double x) const { return find_cell(x_, x); }

double HermiteTable::operator()(double x) const {
    const std::size_t i = cell(x);
    const double h = x_[i + 1] - x_[i];
    const double t = (x - x_[i]) / h;
    const double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * y_[i] + (t3 - 2 * t2 + t) * h * dy_[i] +
           (-2 * t3 + 3 * t2) * y_[i + 1] + (t3 - t2) * h * dy_[i + 1];
}

double HermiteTable::derivative(double x) const {
    const std::size_t i = cell(x);
    const double h = x_[i + 1] - x_[i];
    const double t = (x - x_[i]) / h;
    const double t2 = t * t;
    return (6 * t2 - 6 * t) / h * y_[i] + (3 * t2 - 4 * t + 1) * dy_[i] +
           (-6 * t2 + 6 * t) / h * y_[i + 1] + (3 * t2 - 2 * t) * dy_[i + 1];
}

} // namespace divbar
