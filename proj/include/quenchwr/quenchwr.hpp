#pragma once

#include "quenchwr/errors.hpp"
#include "quenchwr/waveform.hpp"
#include "quenchwr/fem1d.hpp"
#include "quenchwr/magnet_field.hpp"
#include "quenchwr/magnet_thermal.hpp"
#include "quenchwr/magnet_elastic.hpp"
#include "quenchwr/magnet_operator.hpp"
#include "quenchwr/circuit.hpp"
#include "quenchwr/scenario.hpp"
#include "quenchwr/scenario_io.hpp"
#include "quenchwr/wr.hpp"
#include "quenchwr/output.hpp"
