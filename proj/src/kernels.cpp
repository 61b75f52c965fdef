#include "qmode/kernels.hpp"

#include <cmath>
#include <string>

#include "qmode/errors.hpp"

namespace qmode::kernels {

double biweight(double t, int order) {
    if (order < 0 || order > 3) {
        throw ArgumentError("biweight: order must be in {0,1,2,3}, got " + std::to_string(order));
    }
    if (!(std::abs(t) < 1.0)) {
        return 0.0;
    }
    const double t2 = t * t;
    const double w = 1.0 - t2;
    switch (order) {
        case 0: return 0.9375 * w * w;
        case 1: return -3.75 * t * w;
        case 2: return -3.75 * (1.0 - 3.0 * t2);
        default: return 22.5 * t;
    }
}

KernelConstants kernel_constants() { return {1.0 / 7.0, 15.0 / 7.0}; }

}  // namespace qmode::kernels
