#pragma once

#include "tvff/adf.hpp"
#include "tvff/block_tridiag.hpp"
#include "tvff/bootstrap.hpp"
#include "tvff/dataset.hpp"
#include "tvff/error.hpp"
#include "tvff/factor_model.hpp"
#include "tvff/french_csv.hpp"
#include "tvff/io.hpp"
#include "tvff/kalman.hpp"
#include "tvff/lambda_select.hpp"
#include "tvff/month.hpp"
#include "tvff/panel.hpp"
#include "tvff/pipeline.hpp"
#include "tvff/rng.hpp"
#include "tvff/tv_estimator.hpp"
#include "tvff/zip.hpp"
