#include "phipca/phi_spec.hpp"

#include <sstream>

namespace phipca {

PhiSpec PhiSpec::power(double beta) {
    if (beta == 0.0)
        throw ConfigError("PhiSpec::power: beta must be nonzero; use log_limit() for the beta -> 0 case");
    Fn phi = [beta](double u) { return std::pow(u, beta); };
    Fn inv = [beta](double u) { return std::pow(u, 1.0 / beta); };
    Fn d1 = [beta](double u) { return beta * std::pow(u, beta - 1.0); };
    Fn d2 = [beta](double u) { return beta * (beta - 1.0) * std::pow(u, beta - 2.0); };
    return PhiSpec(Mode::Power, beta, std::move(phi), std::move(inv), std::move(d1), std::move(d2),
                   /*pos=*/beta <= 0.0);
}

PhiSpec PhiSpec::log_limit() {
    Fn phi = [](double u) { return std::log(u); };
    Fn inv = [](double u) { return std::exp(u); };
    Fn d1 = [](double u) { return 1.0 / u; };
    Fn d2 = [](double u) { return -1.0 / (u * u); };
    return PhiSpec(Mode::LogLimit, 0.0, std::move(phi), std::move(inv), std::move(d1), std::move(d2),
                   /*pos=*/true);
}

PhiSpec PhiSpec::custom(Fn phi, Fn phi_inv, Fn d1, Fn d2) {
    // Spot-check positivity, strict monotonicity and inverse consistency on
    // a log-spaced grid over (1e-3, 1e3).
    double prev = 0.0;
    int sign = 0;
    for (int i = 0; i <= 12; ++i) {
        double u = std::pow(10.0, -3.0 + 0.5 * i);
        double v = phi(u);
        if (!std::isfinite(v) || v <= 0.0) {
            std::ostringstream os;
            os << "PhiSpec::custom: phi(" << u << ") = " << v << " is not positive";
            throw DomainError(os.str());
        }
        if (i > 0) {
            int s = (v > prev) ? 1 : (v < prev ? -1 : 0);
            if (s == 0 || (sign != 0 && s != sign)) {
                std::ostringstream os;
                os << "PhiSpec::custom: phi is not strictly monotone near u = " << u;
                throw DomainError(os.str());
            }
            sign = s;
        }
        double back = phi_inv(v);
        if (std::abs(back - u) > 1e-6 * std::max(1.0, std::abs(u))) {
            std::ostringstream os;
            os << "PhiSpec::custom: phi_inv(phi(" << u << ")) = " << back << " deviates from u";
            throw DomainError(os.str());
        }
        prev = v;
    }
    return PhiSpec(Mode::Custom, 0.0, std::move(phi), std::move(phi_inv), std::move(d1),
                   std::move(d2), /*pos=*/true);
}

double PhiSpec::beta() const {
    if (mode_ == Mode::Custom)
        throw ConfigError("PhiSpec::beta: custom phi has no power exponent");
    return beta_;
}

std::string PhiSpec::name() const {
    switch (mode_) {
        case Mode::LogLimit: return "log";
        case Mode::Custom: return "custom";
        case Mode::Power: {
            std::ostringstream os;
            os << "power(" << beta_ << ")";
            return os.str();
        }
    }
    return "?";
}

}  // namespace phipca
