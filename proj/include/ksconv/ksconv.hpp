#pragma once

#include "ksconv/analysis.hpp"
#include "ksconv/bench.hpp"
#include "ksconv/engines.hpp"
#include "ksconv/error.hpp"
#include "ksconv/io.hpp"
#include "ksconv/parallel.hpp"
#include "ksconv/probe.hpp"
#include "ksconv/segregation.hpp"
#include "ksconv/spatial.hpp"
#include "ksconv/synthetic.hpp"
#include "ksconv/tensor.hpp"
