#pragma once

#include "mush/detection.hpp"
#include "mush/errors.hpp"
#include "mush/evaluation.hpp"
#include "mush/features.hpp"
#include "mush/geometry.hpp"
#include "mush/image.hpp"
#include "mush/io/json.hpp"
#include "mush/io/ply.hpp"
#include "mush/io/png.hpp"
#include "mush/localization.hpp"
#include "mush/pipeline.hpp"
#include "mush/pointcloud.hpp"
#include "mush/registration.hpp"
#include "mush/segmentation.hpp"
#include "mush/synthetic.hpp"
