#pragma once

#include "adaptivity.hpp"
#include "assembly.hpp"
#include "error_metrics.hpp"
#include "experiments.hpp"
#include "generators.hpp"
#include "geometry.hpp"
#include "mesh.hpp"
#include "postprocess.hpp"
#include "problem.hpp"
#include "quadrature.hpp"
#include "refine.hpp"
#include "sparse.hpp"
#include "spaces.hpp"
