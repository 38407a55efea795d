#pragma once

#include "orfseg/errors.hpp"
#include "orfseg/manifest.hpp"
#include "orfseg/metrics.hpp"
#include "orfseg/orf.hpp"
#include "orfseg/patching.hpp"
#include "orfseg/png_io.hpp"
#include "orfseg/postproc.hpp"
#include "orfseg/predictor.hpp"
#include "orfseg/preprocess.hpp"
#include "orfseg/raster.hpp"
#include "orfseg/relearn.hpp"
#include "orfseg/rng.hpp"
#include "orfseg/synthgen.hpp"
