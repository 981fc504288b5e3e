#pragma once

#include "optent/types.hpp"
#include "optent/rk4.hpp"
#include "optent/hyperbolic.hpp"
#include "optent/pmp.hpp"
#include "optent/transcription.hpp"
#include "optent/lbfgs.hpp"
#include "optent/result.hpp"
#include "optent/direct.hpp"
#include "optent/switching.hpp"
#include "optent/solvers.hpp"
#include "optent/fock.hpp"
#include "optent/io.hpp"
