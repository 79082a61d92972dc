#pragma once

#include "rvrec/bin.hpp"
#include "rvrec/chart.hpp"
#include "rvrec/color.hpp"
#include "rvrec/dataset.hpp"
#include "rvrec/enumerate.hpp"
#include "rvrec/error.hpp"
#include "rvrec/loess.hpp"
#include "rvrec/measures.hpp"
#include "rvrec/pipeline.hpp"
#include "rvrec/rank.hpp"
#include "rvrec/render.hpp"
#include "rvrec/report.hpp"
#include "rvrec/trend.hpp"
#include "rvrec/triangulation.hpp"
