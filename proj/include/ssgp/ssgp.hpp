#pragma once

#include "ssgp/error.hpp"
#include "ssgp/linalg.hpp"
#include "ssgp/kernels.hpp"
#include "ssgp/kernel_expr.hpp"
#include "ssgp/kalman.hpp"
#include "ssgp/optimize.hpp"
#include "ssgp/factor_model.hpp"
#include "ssgp/explain.hpp"
#include "ssgp/scoring.hpp"
#include "ssgp/eval.hpp"
#include "ssgp/data.hpp"
#include "ssgp/serialization.hpp"
