#pragma once

#include "symmetria/common.hpp"
#include "symmetria/mesh.hpp"
#include "symmetria/cloud.hpp"
#include "symmetria/kdtree.hpp"
#include "symmetria/chamfer.hpp"
#include "symmetria/viewpoints.hpp"
#include "symmetria/raster.hpp"
#include "symmetria/features.hpp"
#include "symmetria/symfeat.hpp"
#include "symmetria/net.hpp"
#include "symmetria/adamw.hpp"
#include "symmetria/model_io.hpp"
#include "symmetria/detector.hpp"
#include "symmetria/metrics.hpp"
#include "symmetria/bundle.hpp"
#include "symmetria/report.hpp"
#include "symmetria/evaluation.hpp"
#include "symmetria/shapes.hpp"
