#pragma once

#include "gibbslab/core.hpp"
#include "gibbslab/sequences.hpp"
#include "gibbslab/funcmodel.hpp"
#include "gibbslab/masks.hpp"
#include "gibbslab/quasiproj.hpp"
#include "gibbslab/gibbs.hpp"
#include "gibbslab/construct.hpp"
#include "gibbslab/framelet.hpp"
#include "gibbslab/json_io.hpp"
