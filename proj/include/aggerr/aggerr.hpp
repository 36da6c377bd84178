#pragma once

#include <aggerr/config.hpp>
#include <aggerr/csv.hpp>
#include <aggerr/error.hpp>
#include <aggerr/experiment.hpp>
#include <aggerr/io.hpp>
#include <aggerr/network.hpp>
#include <aggerr/overlap.hpp>
#include <aggerr/parallel.hpp>
#include <aggerr/propagation.hpp>
#include <aggerr/rng.hpp>
#include <aggerr/sampler.hpp>
#include <aggerr/shock.hpp>
#include <aggerr/stats.hpp>
#include <aggerr/synthetic.hpp>
