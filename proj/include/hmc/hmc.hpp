// Copyright 2026 The hmc Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Umbrella header for the library (the CLI layer is not included).

#ifndef HMC_HMC_HPP_
#define HMC_HMC_HPP_

#include "hmc/ad/adam.hpp"
#include "hmc/ad/checkpoint.hpp"
#include "hmc/ad/grad_check.hpp"
#include "hmc/ad/nn.hpp"
#include "hmc/ad/ops.hpp"
#include "hmc/ad/tape.hpp"
#include "hmc/ad/tensor.hpp"
#include "hmc/corpus.hpp"
#include "hmc/encoder.hpp"
#include "hmc/error.hpp"
#include "hmc/hash.hpp"
#include "hmc/hmcl/contrastive.hpp"
#include "hmc/hmcl/sampling.hpp"
#include "hmc/hmcn.hpp"
#include "hmc/metrics.hpp"
#include "hmc/synthetic.hpp"
#include "hmc/taxonomy.hpp"

#endif  // HMC_HMC_HPP_
