#pragma once

#include "tnoodl/config.hpp"
#include "tnoodl/dict_update.hpp"
#include "tnoodl/error.hpp"
#include "tnoodl/io.hpp"
#include "tnoodl/linalg.hpp"
#include "tnoodl/metrics.hpp"
#include "tnoodl/parallel.hpp"
#include "tnoodl/preprocess.hpp"
#include "tnoodl/rng.hpp"
#include "tnoodl/runner.hpp"
#include "tnoodl/sparse_coding.hpp"
#include "tnoodl/synth.hpp"
#include "tnoodl/tensor.hpp"
#include "tnoodl/untangle.hpp"
