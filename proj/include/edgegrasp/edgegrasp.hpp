#pragma once

#include "edgegrasp/binary_image.hpp"
#include "edgegrasp/config.hpp"
#include "edgegrasp/depth_image.hpp"
#include "edgegrasp/edge_detect.hpp"
#include "edgegrasp/features.hpp"
#include "edgegrasp/force_closure.hpp"
#include "edgegrasp/geometry.hpp"
#include "edgegrasp/grasp3d.hpp"
#include "edgegrasp/keyval.hpp"
#include "edgegrasp/overlays.hpp"
#include "edgegrasp/pairing.hpp"
#include "edgegrasp/pipeline.hpp"
#include "edgegrasp/scenegen.hpp"
#include "edgegrasp/segments.hpp"
