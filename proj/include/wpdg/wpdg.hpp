/// @file wpdg.hpp
/// @brief Umbrella header for the weighted, preconditioned, deflated
/// GMRES laboratory.

#pragma once

#include "wpdg/assemble.hpp"
#include "wpdg/cholesky.hpp"
#include "wpdg/core.hpp"
#include "wpdg/deflation.hpp"
#include "wpdg/dense.hpp"
#include "wpdg/diagnostics.hpp"
#include "wpdg/experiment.hpp"
#include "wpdg/gmres.hpp"
#include "wpdg/io.hpp"
#include "wpdg/mesh.hpp"
#include "wpdg/operators.hpp"
#include "wpdg/pencil.hpp"
#include "wpdg/schwarz.hpp"
#include "wpdg/sparse.hpp"
#include "wpdg/vector_ops.hpp"
