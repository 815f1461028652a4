#pragma once

#include "manifoldnorm/config.hpp"
#include "manifoldnorm/dataset.hpp"
#include "manifoldnorm/error.hpp"
#include "manifoldnorm/experiment.hpp"
#include "manifoldnorm/geometry.hpp"
#include "manifoldnorm/grid.hpp"
#include "manifoldnorm/keyvalue.hpp"
#include "manifoldnorm/layers.hpp"
#include "manifoldnorm/lie_group.hpp"
#include "manifoldnorm/linalg.hpp"
#include "manifoldnorm/manifold.hpp"
#include "manifoldnorm/model.hpp"
#include "manifoldnorm/normalization.hpp"
#include "manifoldnorm/random.hpp"
#include "manifoldnorm/selftest.hpp"
#include "manifoldnorm/stats.hpp"
#include "manifoldnorm/tensor_io.hpp"
