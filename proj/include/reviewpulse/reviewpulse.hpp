#pragma once

#include "reviewpulse/common.hpp"
#include "reviewpulse/text.hpp"
#include "reviewpulse/corpus.hpp"
#include "reviewpulse/bst.hpp"
#include "reviewpulse/online.hpp"
#include "reviewpulse/emerging.hpp"
#include "reviewpulse/embed.hpp"
#include "reviewpulse/labeling.hpp"
#include "reviewpulse/report.hpp"
#include "reviewpulse/eval.hpp"
#include "reviewpulse/serialize.hpp"
#include "reviewpulse/pipeline.hpp"
