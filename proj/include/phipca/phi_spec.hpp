#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>

#include "phipca/common.hpp"

namespace phipca {

// Scalar aggregation function phi applied spectrally to covariance matrices.
// Three flavours: the power family u^beta (beta != 0), the beta -> 0
// log-limit (geometric mean), and a user-supplied monotone callable.
class PhiSpec {
public:
    using Fn = std::function<double(double)>;

    static PhiSpec power(double beta);
    static PhiSpec log_limit();
    // phi, its inverse, and first/second derivatives. phi must be positive
    // and strictly monotone on (0, inf); spot-checked on a log-spaced grid.
    static PhiSpec custom(Fn phi, Fn phi_inv, Fn d1, Fn d2);

    double value(double u) const { return phi_(u); }
    double inverse(double u) const { return inv_(u); }
    double deriv(double u) const { return d1_(u); }
    double deriv2(double u) const { return d2_(u); }

    // True when the transform is only defined for strictly positive
    // eigenvalues (beta <= 0, log-limit, and all custom callables).
    bool requires_positive() const { return requires_positive_; }

    bool is_power() const { return mode_ == Mode::Power; }
    bool is_log_limit() const { return mode_ == Mode::LogLimit; }
    bool is_custom() const { return mode_ == Mode::Custom; }

    // Power exponent; 0 for the log-limit member. Throws for custom specs.
    double beta() const;

    std::string name() const;

private:
    enum class Mode { Power, LogLimit, Custom };

    PhiSpec(Mode mode, double beta, Fn phi, Fn inv, Fn d1, Fn d2, bool pos)
        : mode_(mode), beta_(beta), phi_(std::move(phi)), inv_(std::move(inv)),
          d1_(std::move(d1)), d2_(std::move(d2)), requires_positive_(pos) {}

    Mode mode_;
    double beta_ = 0.0;
    Fn phi_, inv_, d1_, d2_;
    bool requires_positive_ = true;
};

}  // namespace phipca
