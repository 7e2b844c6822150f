#pragma once

namespace deepsic {

/// Bessel function of the first kind, order zero. Domain |x| < 50.
double bessel_j0(double x);

}  // namespace deepsic
