#pragma once

// Umbrella header.

#include "feinn/dual.hpp"
#include "feinn/fespace.hpp"
#include "feinn/geometry.hpp"
#include "feinn/linalg.hpp"
#include "feinn/mesh.hpp"
#include "feinn/nn.hpp"
#include "feinn/optimize.hpp"
#include "feinn/problems.hpp"
#include "feinn/quadrature.hpp"
#include "feinn/training.hpp"
#include "feinn/weakforms.hpp"
