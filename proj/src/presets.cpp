#include "foldsimplex/presets.hpp"

namespace foldsimplex::presets {

Vector contour_mu() {
    Vector mu(2);
    mu << 0.561, 0.547;
    return mu;
}

Matrix contour_sigma_narrow() {
    Matrix s(2, 2);
    s << 0.5, 0.25, 0.25, 0.35;
    return s;
}

Matrix contour_sigma_wide() { return 5.0 * contour_sigma_narrow(); }

Matrix study_sigma() {
    Matrix s(4, 4);
    s << 0.149, -0.458, 0.002, -0.005,
        -0.458, 1.523, 0.000, 0.007,
         0.002, 0.000, 0.037, -0.047,
        -0.005, 0.007, -0.047, 0.061;
    return s;
}

Vector study_mu_negative() {
    Vector mu(4);
    mu << 1.715, 0.914, 0.115, 0.167;
    return mu;
}

Vector study_mu_positive() {
    Vector mu(4);
    mu << -0.566, -0.979, -0.648, -0.651;
    return mu;
}

StudyConfig desk_study() {
    StudyConfig cfg;
    cfg.alphas = {0.5};
    cfg.kappas = {0.5, 1.0, 5.0};
    cfg.ns = {100, 500, 2000};
    cfg.replications = 50;
    cfg.base_mu = study_mu_positive();
    cfg.base_sigma = study_sigma();
    cfg.seed = 20160101;
    return cfg;
}

} // namespace foldsimplex::presets
