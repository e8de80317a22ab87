#pragma once

// Umbrella header.

#include "srlkit/config.hpp"
#include "srlkit/conll.hpp"
#include "srlkit/data.hpp"
#include "srlkit/dep_parser.hpp"
#include "srlkit/dropout.hpp"
#include "srlkit/embeddings.hpp"
#include "srlkit/encoder.hpp"
#include "srlkit/error.hpp"
#include "srlkit/eval.hpp"
#include "srlkit/graph.hpp"
#include "srlkit/mtl.hpp"
#include "srlkit/params.hpp"
#include "srlkit/rnn.hpp"
#include "srlkit/srl_model.hpp"
#include "srlkit/synthetic.hpp"
#include "srlkit/tensor.hpp"
#include "srlkit/trainer.hpp"
