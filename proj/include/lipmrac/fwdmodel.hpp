#pragma once

#include "lipmrac/sysmodel.hpp"

#include <deque>

namespace lipmrac {

struct BlrConfig {
    int window = 50;                // N latest samples kept
    double prior_precision = 1e-6;  // alpha
    double noise_precision = 1.0;   // beta
    int min_samples = 3;            // below this, predictions are low-confidence
};

struct BlrPrediction {
    double y_hat = 0.0;
    double h = 0.0;  // d y_hat / d u, the u-feature coefficient
    bool low_confidence = true;
};

/// Sliding-window Bayesian linear regression over features [y, u, 1] that
/// locally approximates the plant's input-output map. The posterior is
/// recomputed exactly from the window on every update; the mean coincides
/// with the ridge solution (X^T X + (alpha/beta) I)^{-1} X^T t.
class BlrModel {
   public:
    explicit BlrModel(BlrConfig config = {});

    // Push ((y_prev, u_prev) -> y_now), evicting the oldest sample beyond
    // the window, and refresh the posterior.
    void update(double y_prev, double u_prev, double y_now);

    BlrPrediction predict(double y, double u) const;

    const Vector& posterior_mean() const { return mean_; }
    const Matrix& posterior_covariance() const { return covariance_; }
    int sample_count() const { return static_cast<int>(window_.size()); }
    const BlrConfig& config() const { return config_; }

   private:
    void refresh_posterior();

    struct Sample {
        Vector features;
        double target;
    };

    BlrConfig config_;
    std::deque<Sample> window_;
    Vector mean_;
    Matrix covariance_;
};

}  // namespace lipmrac
