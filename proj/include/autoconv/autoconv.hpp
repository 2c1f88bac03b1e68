#pragma once

// Umbrella header for the deautoconvolution / phase retrieval library.

#include "autoconv/datagen.hpp"
#include "autoconv/functionals.hpp"
#include "autoconv/io.hpp"
#include "autoconv/kernel.hpp"
#include "autoconv/nurbs.hpp"
#include "autoconv/operator.hpp"
#include "autoconv/optimizer.hpp"
#include "autoconv/signal.hpp"
