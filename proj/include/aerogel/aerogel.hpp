#pragma once

#include "aerogel/chain.hpp"
#include "aerogel/csv.hpp"
#include "aerogel/errors.hpp"
#include "aerogel/io.hpp"
#include "aerogel/mft.hpp"
#include "aerogel/model.hpp"
#include "aerogel/parallel.hpp"
#include "aerogel/rate_function.hpp"
#include "aerogel/renewal.hpp"
#include "aerogel/rng.hpp"
#include "aerogel/stats.hpp"
#include "aerogel/tracer.hpp"
