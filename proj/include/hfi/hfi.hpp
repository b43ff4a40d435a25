#pragma once

// Umbrella header for the mixed-frequency imputation toolkit.

#include "hfi/aggregation.hpp"
#include "hfi/common.hpp"
#include "hfi/eval/counterfactual.hpp"
#include "hfi/factor/gls.hpp"
#include "hfi/factor/pc.hpp"
#include "hfi/factor/pc_ks.hpp"
#include "hfi/factor/qmle.hpp"
#include "hfi/factor/var.hpp"
#include "hfi/impute/chow_lin.hpp"
#include "hfi/impute/em.hpp"
#include "hfi/impute/ks.hpp"
#include "hfi/impute/tp.hpp"
#include "hfi/impute/tp_star.hpp"
#include "hfi/io/csv.hpp"
#include "hfi/io/json.hpp"
#include "hfi/linalg.hpp"
#include "hfi/panel.hpp"
#include "hfi/parallel.hpp"
#include "hfi/prepare.hpp"
#include "hfi/rng.hpp"
#include "hfi/sim/comparison.hpp"
#include "hfi/sim/dgp.hpp"
#include "hfi/sim/metrics.hpp"
#include "hfi/ssm/builders.hpp"
#include "hfi/ssm/em.hpp"
#include "hfi/ssm/kalman.hpp"
#include "hfi/time_grid.hpp"
