#pragma once

// Schatten-regularized discrete optimal transport: measures and
// generators, the transport polytope, Schatten-norm machinery, affine
// coupling maps, the KL mirror-descent solver, exact LP and certificate
// oracles, Gaussian closed forms, quality metrics, and the experiment
// runners behind the CLI.

#include "sot/common.hpp"
#include "sot/csv.hpp"
#include "sot/measures.hpp"
#include "sot/polytope.hpp"
#include "sot/schatten.hpp"
#include "sot/regmaps.hpp"
#include "sot/solver.hpp"
#include "sot/oracle.hpp"
#include "sot/gaussian.hpp"
#include "sot/metrics.hpp"
#include "sot/experiments.hpp"
