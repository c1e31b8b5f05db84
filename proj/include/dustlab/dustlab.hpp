#pragma once

#include "dustlab/bench.hpp"
#include "dustlab/errors.hpp"
#include "dustlab/estimators.hpp"
#include "dustlab/geometry.hpp"
#include "dustlab/graph.hpp"
#include "dustlab/grid.hpp"
#include "dustlab/io.hpp"
#include "dustlab/measure.hpp"
#include "dustlab/mollifier.hpp"
#include "dustlab/numerics.hpp"
#include "dustlab/parallel.hpp"
#include "dustlab/patternscan.hpp"
#include "dustlab/rng.hpp"
#include "dustlab/sampler.hpp"
#include "dustlab/simplex.hpp"
#include "dustlab/spatial.hpp"
#include "dustlab/spectral.hpp"
#include "dustlab/variety.hpp"
