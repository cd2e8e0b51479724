#pragma once

#include "gnflow/certificate.hpp"
#include "gnflow/errors.hpp"
#include "gnflow/experiment.hpp"
#include "gnflow/flow_solver.hpp"
#include "gnflow/gravimetry.hpp"
#include "gnflow/grid.hpp"
#include "gnflow/linear_model.hpp"
#include "gnflow/regularization.hpp"
