// wavecnn/wavecnn.hpp
//
// Umbrella header.

#pragma once

#include "wavecnn/binary_io.hpp"
#include "wavecnn/corpus.hpp"
#include "wavecnn/decoder.hpp"
#include "wavecnn/error.hpp"
#include "wavecnn/eval.hpp"
#include "wavecnn/experiment.hpp"
#include "wavecnn/features.hpp"
#include "wavecnn/net/checkpoint.hpp"
#include "wavecnn/net/config.hpp"
#include "wavecnn/net/grid_search.hpp"
#include "wavecnn/net/layers.hpp"
#include "wavecnn/net/network.hpp"
#include "wavecnn/net/shape.hpp"
#include "wavecnn/net/train.hpp"
#include "wavecnn/random.hpp"
#include "wavecnn/signal.hpp"
#include "wavecnn/tensor.hpp"
