#pragma once

// Umbrella header: the whole library.

#include "ice/base_generation.hpp"
#include "ice/chi_square.hpp"
#include "ice/contingency.hpp"
#include "ice/dataset.hpp"
#include "ice/ensemble.hpp"
#include "ice/error.hpp"
#include "ice/io.hpp"
#include "ice/metrics.hpp"
#include "ice/parallel.hpp"
#include "ice/rng.hpp"
#include "ice/split_search.hpp"
#include "ice/tree.hpp"
#include "ice/tree_builder.hpp"
