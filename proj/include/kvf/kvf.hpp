#pragma once

#include "kvf/catalog.hpp"
#include "kvf/curvature.hpp"
#include "kvf/dsl.hpp"
#include "kvf/error.hpp"
#include "kvf/expr.hpp"
#include "kvf/holonomy.hpp"
#include "kvf/jet.hpp"
#include "kvf/killing.hpp"
#include "kvf/linalg.hpp"
#include "kvf/product.hpp"
#include "kvf/tensor.hpp"
