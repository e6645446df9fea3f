#pragma once

#include "dlyap/diagnostics.hpp"
#include "dlyap/dlyap_operator.hpp"
#include "dlyap/error.hpp"
#include "dlyap/krylov.hpp"
#include "dlyap/linalg.hpp"
#include "dlyap/matrix_market.hpp"
#include "dlyap/precond.hpp"
#include "dlyap/problems.hpp"
#include "dlyap/propagation.hpp"
#include "dlyap/solver.hpp"
#include "dlyap/tsylv.hpp"
