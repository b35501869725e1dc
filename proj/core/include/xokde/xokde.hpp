#pragma once

// Convenience umbrella for the whole library.

#include "xokde/bandwidth.hpp"
#include "xokde/classifier.hpp"
#include "xokde/clustering.hpp"
#include "xokde/covariance.hpp"
#include "xokde/dataset.hpp"
#include "xokde/distance.hpp"
#include "xokde/errors.hpp"
#include "xokde/experiment.hpp"
#include "xokde/gaussian.hpp"
#include "xokde/mixture.hpp"
#include "xokde/sample_model.hpp"
#include "xokde/sigma_points.hpp"
#include "xokde/whitening.hpp"
