#pragma once

// Umbrella header.

#include "maxshapley/config.hpp"
#include "maxshapley/errors.hpp"
#include "maxshapley/eval/dataset.hpp"
#include "maxshapley/eval/experiment.hpp"
#include "maxshapley/eval/metrics.hpp"
#include "maxshapley/judge/backend.hpp"
#include "maxshapley/judge/cache.hpp"
#include "maxshapley/judge/endpoint.hpp"
#include "maxshapley/judge/http.hpp"
#include "maxshapley/judge/judge_oracle.hpp"
#include "maxshapley/judge/ledger.hpp"
#include "maxshapley/judge/mock.hpp"
#include "maxshapley/judge/planted.hpp"
#include "maxshapley/judge/prompts.hpp"
#include "maxshapley/judge/record_replay.hpp"
#include "maxshapley/judge/score_parse.hpp"
#include "maxshapley/kernel_shap.hpp"
#include "maxshapley/max_game.hpp"
#include "maxshapley/oracle.hpp"
#include "maxshapley/pair_table.hpp"
#include "maxshapley/pipeline.hpp"
#include "maxshapley/rng.hpp"
#include "maxshapley/solvers.hpp"
#include "maxshapley/source.hpp"
#include "maxshapley/types.hpp"
#include "maxshapley/value_matrix.hpp"
