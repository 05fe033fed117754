#pragma once

#include "solar/grid.hpp"
#include "solar/env.hpp"
#include "solar/rng.hpp"
#include "solar/grid_maker.hpp"
#include "solar/generator.hpp"
#include "solar/codec.hpp"
#include "solar/dataset_io.hpp"
#include "solar/protocol.hpp"
#include "solar/transport.hpp"
#include "solar/agents.hpp"
#include "solar/harness.hpp"
#include "solar/render.hpp"
