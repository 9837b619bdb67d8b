#pragma once

// Surgery parameter schedule: the decreasing positive functions
// epsilon, r(t), kappa(t), delta(t), rho(t) = delta r, h(t) < delta^2 r
// that govern canonical neighborhoods, component discarding and surgery.

#include "rflab/numerics.hpp"

namespace rflab {

struct SurgerySchedule {
    double epsilon = 0.05;   // canonical-neighborhood closeness parameter
    double r0 = 0.05;        // r(0), must stay below 1/10
    double kappa0 = 0.01;    // kappa(0)
    double delta0 = 0.1;     // delta(0), the surgery-quality parameter
    double h_factor = 0.5;   // h = h_factor * delta^2 * r, keeps h < delta^2 r
    double eta = 10.0;       // gradient-estimate constant cap (fitted per run)

    double r(double t) const { return r0 / std::sqrt(1.0 + t); }
    double kappa(double t) const { return kappa0 / (1.0 + t); }
    double delta(double t) const { return delta0 / std::sqrt(1.0 + t); }
    double rho(double t) const { return delta(t) * r(t); }
    double h(double t) const { return h_factor * sq(delta(t)) * r(t); }

    void validate() const {
        if (!(epsilon > 0.0 && r0 > 0.0 && kappa0 > 0.0 && delta0 > 0.0))
            throw Error("invalid-parameters", "schedule functions must be positive");
        if (!(r0 < 0.1)) throw Error("invalid-parameters", "r(0) must be below 1/10");
        if (!(h_factor > 0.0 && h_factor < 1.0))
            throw Error("invalid-parameters", "h_factor must lie in (0,1) so h < delta^2 r");
    }

    SurgerySchedule with_delta0(double d0) const {
        SurgerySchedule s = *this;
        s.delta0 = d0;
        return s;
    }
};

}  // namespace rflab
