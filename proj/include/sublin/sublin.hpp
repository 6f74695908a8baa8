#pragma once

// Umbrella header.

#include "sublin/calculus.hpp"
#include "sublin/cli.hpp"
#include "sublin/core.hpp"
#include "sublin/doob.hpp"
#include "sublin/feynman_kac.hpp"
#include "sublin/generator.hpp"
#include "sublin/io.hpp"
#include "sublin/nonlinearity.hpp"
#include "sublin/report.hpp"
#include "sublin/solver.hpp"
#include "sublin/spectral.hpp"
#include "sublin/stochastic.hpp"
#include "sublin/suites.hpp"
