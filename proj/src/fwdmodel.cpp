#include "lipmrac/fwdmodel.hpp"

#include <cmath>
#include <stdexcept>

namespace lipmrac {

namespace {

Vector features_of(double y, double u) {
    Vector phi(3);
    phi << y, u, 1.0;
    return phi;
}

}  // namespace

BlrModel::BlrModel(BlrConfig config) : config_(config) {
    if (config_.window < 1 || config_.prior_precision <= 0.0 || config_.noise_precision <= 0.0) {
        throw std::invalid_argument("BlrModel: window must be >= 1 and precisions > 0");
    }
    mean_ = Vector::Zero(3);
    covariance_ = Matrix::Identity(3, 3) / config_.prior_precision;
}

void BlrModel::update(double y_prev, double u_prev, double y_now) {
    if (!std::isfinite(y_prev) || !std::isfinite(u_prev) || !std::isfinite(y_now)) {
        throw std::invalid_argument("BlrModel::update: non-finite sample");
    }
    window_.push_back(Sample{features_of(y_prev, u_prev), y_now});
    while (static_cast<int>(window_.size()) > config_.window) {
        window_.pop_front();
    }
    refresh_posterior();
}

void BlrModel::refresh_posterior() {
    // Precision alpha*I + beta*X^T X, mean beta*S*X^T t; exact recomputation
    // keeps the posterior order-invariant over the window contents.
    Matrix precision = config_.prior_precision * Matrix::Identity(3, 3);
    Vector moment = Vector::Zero(3);
    for (const Sample& sample : window_) {
        precision.noalias() += config_.noise_precision * sample.features * sample.features.transpose();
        moment.noalias() += config_.noise_precision * sample.features * sample.target;
    }
    const auto solver = precision.ldlt();
    covariance_ = solver.solve(Matrix::Identity(3, 3));
    mean_ = solver.solve(moment);
}

BlrPrediction BlrModel::predict(double y, double u) const {
    BlrPrediction prediction;
    prediction.y_hat = mean_.dot(features_of(y, u));
    prediction.h = mean_[1];
    prediction.low_confidence = sample_count() < config_.min_samples;
    return prediction;
}

}  // namespace lipmrac
