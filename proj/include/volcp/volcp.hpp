#pragma once

#include "volcp/changepoints.hpp"
#include "volcp/distributions.hpp"
#include "volcp/error.hpp"
#include "volcp/estimators.hpp"
#include "volcp/kde.hpp"
#include "volcp/model.hpp"
#include "volcp/optimizer.hpp"
#include "volcp/prices.hpp"
#include "volcp/segmentation.hpp"
#include "volcp/simbench.hpp"
#include "volcp/simulate.hpp"
#include "volcp/stats.hpp"
