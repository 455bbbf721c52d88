#pragma once

#include "monofem/core.hpp"
#include "monofem/mesh.hpp"
#include "monofem/mesh_io.hpp"
#include "monofem/quadrature.hpp"
#include "monofem/basis.hpp"
#include "monofem/space.hpp"
#include "monofem/problems.hpp"
#include "monofem/assembly.hpp"
#include "monofem/solver.hpp"
#include "monofem/estimator.hpp"
#include "monofem/adapt.hpp"
#include "monofem/config.hpp"
#include "monofem/experiments.hpp"
