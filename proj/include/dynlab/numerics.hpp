#pragma once

#include "dynlab/errors.hpp"
#include "dynlab/numerics/finite_diff.hpp"
#include "dynlab/numerics/linalg.hpp"
#include "dynlab/numerics/matrix.hpp"
#include "dynlab/numerics/measure.hpp"
#include "dynlab/numerics/quadrature.hpp"
#include "dynlab/numerics/rng.hpp"
