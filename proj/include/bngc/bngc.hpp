#pragma once

#include "bngc/consensus.hpp"
#include "bngc/core.hpp"
#include "bngc/dpcluster.hpp"
#include "bngc/enrich.hpp"
#include "bngc/graph_clustering.hpp"
#include "bngc/io.hpp"
#include "bngc/metrics.hpp"
#include "bngc/neighborhood.hpp"
#include "bngc/parallel.hpp"
#include "bngc/pipeline.hpp"
#include "bngc/random.hpp"
#include "bngc/simbench.hpp"
#include "bngc/spectral.hpp"
#include "bngc/theorycheck.hpp"
