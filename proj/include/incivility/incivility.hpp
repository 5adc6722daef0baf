#pragma once
// Everything at once. Individual headers can be included on their own.

#include "incivility/analytics.hpp"
#include "incivility/behavior.hpp"
#include "incivility/corpus.hpp"
#include "incivility/error.hpp"
#include "incivility/http_server.hpp"
#include "incivility/labeler.hpp"
#include "incivility/metric.hpp"
#include "incivility/pipeline.hpp"
#include "incivility/service.hpp"
#include "incivility/stats.hpp"
#include "incivility/synth.hpp"
#include "incivility/tuner.hpp"
#include "incivility/util.hpp"
