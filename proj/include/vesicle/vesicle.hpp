#ifndef VESICLE_VESICLE_HPP
#define VESICLE_VESICLE_HPP

#include "assembly.hpp"
#include "barrier.hpp"
#include "curve_mesh.hpp"
#include "derivcheck.hpp"
#include "distance.hpp"
#include "errors.hpp"
#include "functionals.hpp"
#include "io.hpp"
#include "orchestrator.hpp"
#include "reference_element.hpp"
#include "shapes.hpp"
#include "stepper.hpp"

#endif
