#pragma once

#include "ccch/characteristics.hpp"
#include "ccch/diagnostics.hpp"
#include "ccch/errors.hpp"
#include "ccch/field.hpp"
#include "ccch/green.hpp"
#include "ccch/grid.hpp"
#include "ccch/peakon.hpp"
#include "ccch/scenario.hpp"
#include "ccch/solver.hpp"
#include "ccch/spectral.hpp"
