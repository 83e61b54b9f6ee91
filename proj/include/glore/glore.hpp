#pragma once

#include "glore/adam.hpp"
#include "glore/checksum.hpp"
#include "glore/config.hpp"
#include "glore/error.hpp"
#include "glore/eval.hpp"
#include "glore/graph.hpp"
#include "glore/gru.hpp"
#include "glore/io.hpp"
#include "glore/merge.hpp"
#include "glore/model.hpp"
#include "glore/objective.hpp"
#include "glore/pipeline.hpp"
#include "glore/random.hpp"
#include "glore/report.hpp"
#include "glore/synth.hpp"
#include "glore/tensor.hpp"
#include "glore/token.hpp"
#include "glore/train.hpp"
#include "glore/tsv.hpp"
