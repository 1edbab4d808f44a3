#pragma once

#include "error.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "algebra.hpp"
#include "primes.hpp"
#include "sieve.hpp"
#include "transference.hpp"
#include "harmonic.hpp"
#include "thresholds.hpp"
#include "config.hpp"
#include "report.hpp"
#include "pipeline.hpp"
#include "verify.hpp"
#include "scan.hpp"
