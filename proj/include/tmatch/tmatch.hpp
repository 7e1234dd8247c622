#pragma once

#include "tmatch/errors.hpp"
#include "tmatch/field.hpp"
#include "tmatch/pgm.hpp"
#include "tmatch/encode.hpp"
#include "tmatch/ode.hpp"
#include "tmatch/adapt.hpp"
#include "tmatch/detect.hpp"
#include "tmatch/trajectory.hpp"
#include "tmatch/engine.hpp"
#include "tmatch/patterns.hpp"
#include "tmatch/experiments.hpp"
#include "tmatch/toml.hpp"
#include "tmatch/config.hpp"
