#pragma once

#include "patchgauss/augment.hpp"
#include "patchgauss/classifier.hpp"
#include "patchgauss/corrupt.hpp"
#include "patchgauss/error.hpp"
#include "patchgauss/fourier.hpp"
#include "patchgauss/io.hpp"
#include "patchgauss/metrics.hpp"
#include "patchgauss/model.hpp"
#include "patchgauss/parallel.hpp"
#include "patchgauss/rng.hpp"
#include "patchgauss/tensor.hpp"
