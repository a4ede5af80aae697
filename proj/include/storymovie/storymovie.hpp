#pragma once

// Everything except the HTTP judge client (storymovie/judge.hpp).

#include "storymovie/align.hpp"
#include "storymovie/config.hpp"
#include "storymovie/error.hpp"
#include "storymovie/eval.hpp"
#include "storymovie/grounding.hpp"
#include "storymovie/screenplay.hpp"
#include "storymovie/segment.hpp"
#include "storymovie/serialization.hpp"
#include "storymovie/subtitle.hpp"
#include "storymovie/text.hpp"
#include "storymovie/timecode.hpp"
