#pragma once

// Umbrella header: stage-coupled implicit Runge-Kutta systems, the block
// lower-triangular preconditioner, per-mode spectral reductions, GMRES, and
// the spectral convergence bound.

#include "stagekron/dense.hpp"
#include "stagekron/full_system.hpp"
#include "stagekron/gmres_bound.hpp"
#include "stagekron/krylov.hpp"
#include "stagekron/mode_spectrum.hpp"
#include "stagekron/model_problems.hpp"
#include "stagekron/pencil.hpp"
#include "stagekron/tableau.hpp"
