#pragma once

#include "foldsimplex/analysis.hpp"
#include "foldsimplex/geometry.hpp"

namespace foldsimplex::presets {

/// Bivariate mean used for the D = 3 contour and outside-mass examples (alpha = 1).
Vector contour_mu();
Matrix contour_sigma_narrow();
/// 5 x contour_sigma_narrow().
Matrix contour_sigma_wide();

/// 4 x 4 base covariance of the D = 5 simulation design, scaled by kappa.
Matrix study_sigma();
/// Mean paired with alpha = -0.5; also the mean of the alpha-recovery design.
Vector study_mu_negative();
/// Mean paired with alpha = 0.5.
Vector study_mu_positive();

/// alpha = 0.5, kappa in {0.5, 1, 5}, n in {100, 500, 2000}, 50 replications.
StudyConfig desk_study();

} // namespace foldsimplex::presets
