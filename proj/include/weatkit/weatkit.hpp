#pragma once

#include "weatkit/bias.hpp"
#include "weatkit/config.hpp"
#include "weatkit/corpus.hpp"
#include "weatkit/covariates.hpp"
#include "weatkit/embedding.hpp"
#include "weatkit/error.hpp"
#include "weatkit/numfmt.hpp"
#include "weatkit/pipeline.hpp"
#include "weatkit/reports.hpp"
#include "weatkit/rng.hpp"
#include "weatkit/stats.hpp"
#include "weatkit/synth.hpp"
