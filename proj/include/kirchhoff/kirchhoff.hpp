#pragma once

#include "kirchhoff/error.hpp"
#include "kirchhoff/grid.hpp"
#include "kirchhoff/quadrature.hpp"
#include "kirchhoff/random.hpp"
#include "kirchhoff/branch.hpp"
#include "kirchhoff/sublinear.hpp"
#include "kirchhoff/fixpoint.hpp"
#include "kirchhoff/verify.hpp"
#include "kirchhoff/oracle.hpp"
#include "kirchhoff/config.hpp"
#include "kirchhoff/pipeline.hpp"
