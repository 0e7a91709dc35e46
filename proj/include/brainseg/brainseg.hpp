#pragma once

#include "brainseg/error.hpp"
#include "brainseg/tissue.hpp"
#include "brainseg/rng.hpp"
#include "brainseg/image.hpp"
#include "brainseg/image_io.hpp"
#include "brainseg/feature_grid.hpp"
#include "brainseg/dataset.hpp"
#include "brainseg/gabor.hpp"
#include "brainseg/classifiers/model.hpp"
#include "brainseg/serialization.hpp"
#include "brainseg/evaluation.hpp"
#include "brainseg/hybrid.hpp"
#include "brainseg/overlay.hpp"
#include "brainseg/run_config.hpp"
