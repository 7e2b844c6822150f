#include "deepsic/special.hpp"

#include <cmath>
#include <stdexcept>

namespace deepsic {

double bessel_j0(double x) {
    x = std::fabs(x);
    if (x >= 50.0) throw std::domain_error("bessel_j0: |x| must be < 50");
    return std::cyl_bessel_j(0.0, x);
}

}  // namespace deepsic
