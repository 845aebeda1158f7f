#pragma once

#include "davi/analysis.hpp"
#include "davi/errors.hpp"
#include "davi/evaluation.hpp"
#include "davi/generators.hpp"
#include "davi/harness.hpp"
#include "davi/mdp.hpp"
#include "davi/mdp_io.hpp"
#include "davi/samplers.hpp"
#include "davi/solvers.hpp"
#include "davi/trace_io.hpp"
