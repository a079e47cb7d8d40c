#pragma once

// Two-step model-based clustering of functional data: OLS projection of noisy
// series onto a basis, then EM fitting of a Gaussian mixture over the
// coefficients, with allocation, ARI scoring, and mixture-order selection.

#include "funcclust/basis.hpp"
#include "funcclust/cluster.hpp"
#include "funcclust/errors.hpp"
#include "funcclust/gmm.hpp"
#include "funcclust/io.hpp"
#include "funcclust/model_select.hpp"
#include "funcclust/projection.hpp"
#include "funcclust/rng.hpp"
#include "funcclust/simgen.hpp"
#include "funcclust/threads.hpp"
#include "funcclust/version.hpp"
