#ifndef MMCOOL_MMCOOL_HPP
#define MMCOOL_MMCOOL_HPP

#include "accumulate.hpp"
#include "analysis.hpp"
#include "config.hpp"
#include "constants.hpp"
#include "core_physics.hpp"
#include "ensemble.hpp"
#include "error.hpp"
#include "field_model.hpp"
#include "io.hpp"
#include "params.hpp"
#include "pipeline.hpp"
#include "random.hpp"
#include "sde_engine.hpp"

#endif // MMCOOL_MMCOOL_HPP
