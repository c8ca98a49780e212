#pragma once

// Everything except the HTTP binding (reqlens/http.hpp pulls in httplib).
#include "reqlens/analysis.hpp"
#include "reqlens/corpus.hpp"
#include "reqlens/csv.hpp"
#include "reqlens/error.hpp"
#include "reqlens/experiment.hpp"
#include "reqlens/forest.hpp"
#include "reqlens/lime.hpp"
#include "reqlens/pipeline.hpp"
#include "reqlens/porter.hpp"
#include "reqlens/preprocess.hpp"
#include "reqlens/random.hpp"
#include "reqlens/service.hpp"
#include "reqlens/session.hpp"
#include "reqlens/stats.hpp"
#include "reqlens/vectorize.hpp"
