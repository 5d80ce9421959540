#pragma once

#include "nuh/certificates.hpp"
#include "nuh/config.hpp"
#include "nuh/endo.hpp"
#include "nuh/error.hpp"
#include "nuh/exponent_lab.hpp"
#include "nuh/integer_linear.hpp"
#include "nuh/invariants.hpp"
#include "nuh/linalg.hpp"
#include "nuh/parallel.hpp"
#include "nuh/runner.hpp"
#include "nuh/shear.hpp"
#include "nuh/torus.hpp"
#include "nuh/trig_poly.hpp"
