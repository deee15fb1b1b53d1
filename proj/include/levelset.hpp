#pragma once

#include "levelset/box_counting.hpp"
#include "levelset/config.hpp"
#include "levelset/errors.hpp"
#include "levelset/experiment.hpp"
#include "levelset/fft.hpp"
#include "levelset/galerkin.hpp"
#include "levelset/io.hpp"
#include "levelset/level_set.hpp"
#include "levelset/linear.hpp"
#include "levelset/noise.hpp"
#include "levelset/plot.hpp"
#include "levelset/spectral.hpp"
#include "levelset/statistics.hpp"
