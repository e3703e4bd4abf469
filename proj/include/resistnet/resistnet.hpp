#ifndef RESISTNET_RESISTNET_HPP
#define RESISTNET_RESISTNET_HPP

#include "distribution.hpp"
#include "errors.hpp"
#include "experiments.hpp"
#include "flowsolve.hpp"
#include "graph_io.hpp"
#include "json_writer.hpp"
#include "netgraph.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "sensitivity.hpp"
#include "stats.hpp"
#include "walsh.hpp"

#endif // RESISTNET_RESISTNET_HPP
