#ifndef UNMIXER_UNMIXER_HPP
#define UNMIXER_UNMIXER_HPP

#include "unmixer/error.hpp"
#include "unmixer/numerics.hpp"
#include "unmixer/spectral_matrix.hpp"
#include "unmixer/preprocess.hpp"
#include "unmixer/pcca.hpp"
#include "unmixer/objective.hpp"
#include "unmixer/optimizer.hpp"
#include "unmixer/pipeline.hpp"
#include "unmixer/synth.hpp"
#include "unmixer/metrics.hpp"
#include "unmixer/io.hpp"
#include "unmixer/dataset.hpp"

#endif // UNMIXER_UNMIXER_HPP
