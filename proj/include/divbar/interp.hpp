#pragma once

#include <cstddef>
#include <vector>

namespace divbar {

/// Shape-preserving monotone cubic interpolant (Fritsch-Carlson slope
/// limiting). Strictly monotone data yields a strictly monotone interpolant,
/// which keeps inverses well defined. Evaluation outside the abscissae is
/// linear extrapolation with the end slope.
class PchipInterpolant {
public:
    PchipInterpolant() = default;
    PchipInterpolant(std::vector<double> x, std::vector<double> y);

    double operator()(double x) const;
    double derivative(double x) const;

    double x_front() const { return x_.front(); }
    double x_back() const { return x_.back(); }
    const std::vector<double>& abscissae() const { return x_; }
    const std::vector<double>& ordinates() const { return y_; }
    bool empty() const { return x_.empty(); }

private:
    std::size_t cell(double x) const;

    std::vector<double> x_, y_, m_;
};

/// Piecewise cubic Hermite table with prescribed node derivatives. Used for
/// dense output of ODE solutions where both value and slope are known at the
/// nodes.
class HermiteTable {
public:
    HermiteTable() = default;
    HermiteTable(std::vector<double> x, std::vector<double> y, std::vector<double> dy);

    double operator()(double x) const;
    double derivative(double x) const;

    double x_front() const { return x_.front(); }
    double x_back() const { return x_.back(); }

private:
    std::size_t cell(double x) const;

    std::vector<double> x_, y_, dy_;
};

} // namespace divbar
