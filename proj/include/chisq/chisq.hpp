#pragma once

#include "chisq/errors.hpp"
#include "chisq/point.hpp"
#include "chisq/quadrature.hpp"
#include "chisq/kernel.hpp"
#include "chisq/model.hpp"
#include "chisq/catalog.hpp"
#include "chisq/expression.hpp"
#include "chisq/admissibility.hpp"
#include "chisq/asymptotics.hpp"
#include "chisq/rng.hpp"
#include "chisq/grid.hpp"
#include "chisq/simulate.hpp"
#include "chisq/montecarlo.hpp"
#include "chisq/pickands.hpp"
#include "chisq/gof.hpp"
#include "chisq/io.hpp"
#include "chisq/registry.hpp"
#include "chisq/version.hpp"
