#pragma once

#include "tpgc/error.hpp"
#include "tpgc/dense.hpp"
#include "tpgc/random.hpp"
#include "tpgc/graph.hpp"
#include "tpgc/edge_tensor.hpp"
#include "tpgc/autodiff.hpp"
#include "tpgc/ops.hpp"
#include "tpgc/layers.hpp"
#include "tpgc/optim.hpp"
#include "tpgc/features.hpp"
#include "tpgc/metrics.hpp"
#include "tpgc/splits.hpp"
#include "tpgc/model.hpp"
#include "tpgc/train.hpp"
#include "tpgc/tasks.hpp"
#include "tpgc/gradcheck.hpp"
#include "tpgc/io.hpp"
#include "tpgc/experiment.hpp"
