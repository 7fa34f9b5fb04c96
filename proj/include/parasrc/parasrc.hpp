#pragma once

#include "assembly.hpp"
#include "coefficients.hpp"
#include "config.hpp"
#include "experiments.hpp"
#include "expression.hpp"
#include "fields.hpp"
#include "inverse.hpp"
#include "linsolve.hpp"
#include "mesh.hpp"
#include "observation.hpp"
#include "pde.hpp"
#include "report.hpp"
#include "version.hpp"
