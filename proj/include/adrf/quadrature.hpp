#pragma once

#include "adrf/types.hpp"

namespace adrf {

//! Gauss-Legendre nodes and weights on an interval.
struct GaussLegendre
{
  Vector nodes;
  Vector weights;
};

//! n-point Gauss-Legendre rule on [a, b], computed by Newton iteration on the
//! Legendre recurrence.
GaussLegendre gauss_legendre(int n, double a = -1.0, double b = 1.0);

//! Composite rule: [a, b] split into `panels` equal pieces of order n each.
GaussLegendre gauss_legendre_composite(int n, int panels, double a, double b);

} // namespace adrf
