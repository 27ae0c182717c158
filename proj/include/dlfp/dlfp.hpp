#pragma once

#include "dlfp/bench.hpp"
#include "dlfp/controls.hpp"
#include "dlfp/core.hpp"
#include "dlfp/io.hpp"
#include "dlfp/problem.hpp"
#include "dlfp/rates.hpp"
#include "dlfp/reference.hpp"
#include "dlfp/rng.hpp"
#include "dlfp/sets.hpp"
#include "dlfp/solver.hpp"
