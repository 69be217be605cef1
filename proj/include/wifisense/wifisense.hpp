#pragma once

#include "wifisense/error.hpp"
#include "wifisense/core.hpp"
#include "wifisense/random.hpp"
#include "wifisense/preprocess.hpp"
#include "wifisense/cluster.hpp"
#include "wifisense/hac.hpp"
#include "wifisense/spatial.hpp"
#include "wifisense/shape.hpp"
#include "wifisense/temporal.hpp"
#include "wifisense/flow.hpp"
#include "wifisense/synthgen.hpp"
#include "wifisense/io.hpp"
#include "wifisense/pipeline.hpp"
