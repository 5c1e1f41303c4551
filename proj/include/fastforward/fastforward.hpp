#pragma once

#include "fastforward/bench.hpp"
#include "fastforward/error.hpp"
#include "fastforward/forward_index.hpp"
#include "fastforward/index_io.hpp"
#include "fastforward/metrics.hpp"
#include "fastforward/query_encoding.hpp"
#include "fastforward/reranker.hpp"
#include "fastforward/run.hpp"
#include "fastforward/selective_filter.hpp"
#include "fastforward/vector.hpp"
