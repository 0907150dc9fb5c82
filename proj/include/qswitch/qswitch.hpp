#pragma once

#include "qswitch/circuit.hpp"
#include "qswitch/config.hpp"
#include "qswitch/dressed.hpp"
#include "qswitch/dynamics.hpp"
#include "qswitch/effective.hpp"
#include "qswitch/errors.hpp"
#include "qswitch/experiment.hpp"
#include "qswitch/fit.hpp"
#include "qswitch/io.hpp"
#include "qswitch/tomography.hpp"
#include "qswitch/transistor.hpp"
