#pragma once

#include "fret/analytic.hpp"
#include "fret/chain.hpp"
#include "fret/conditions.hpp"
#include "fret/dist.hpp"
#include "fret/error.hpp"
#include "fret/expr.hpp"
#include "fret/json_io.hpp"
#include "fret/levy.hpp"
#include "fret/parallel.hpp"
#include "fret/rng.hpp"
#include "fret/scenarios.hpp"
#include "fret/smp.hpp"
#include "fret/verify.hpp"
