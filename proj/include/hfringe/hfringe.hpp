#pragma once

// Two-level (2S-2P hydrogen) beam interferometry in fields of small
// overlapping perturbations: forward simulation, curve fitting, and
// parameter inversion.

#include "hfringe/core.hpp"
#include "hfringe/diagnose.hpp"
#include "hfringe/errors.hpp"
#include "hfringe/fitting.hpp"
#include "hfringe/interferogram.hpp"
#include "hfringe/models.hpp"
#include "hfringe/ode.hpp"
#include "hfringe/profile.hpp"
#include "hfringe/quadrature.hpp"
#include "hfringe/solver.hpp"
#include "hfringe/version.hpp"
