#pragma once

#include "afkmc2.hpp"
#include "coreset.hpp"
#include "dgmm.hpp"
#include "distance.hpp"
#include "errors.hpp"
#include "estimators.hpp"
#include "exact_em.hpp"
#include "experiment.hpp"
#include "fit_trace.hpp"
#include "io.hpp"
#include "kmeans.hpp"
#include "matrix.hpp"
#include "metrics.hpp"
#include "parallel.hpp"
#include "posterior.hpp"
#include "rng.hpp"
#include "sampler.hpp"
#include "synthetic.hpp"
#include "truncation_state.hpp"
