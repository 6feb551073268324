#pragma once

#include "lipmrac/sysmodel.hpp"

#include <iosfwd>
#include <memory>
#include <random>
#include <vector>

namespace lipmrac {

// Sorts each contiguous group of `group_size` entries ascending
// (group_size == 0 sorts the whole vector). Norm- and multiset-preserving.
Vector group_sort(const Vector& v, int group_size);

// Nearest semi-orthogonal matrix (all singular values 1, enforced on the
// thin Gram side). Bjorck iteration W <- W(I + (I - W^T W)/2) while it is
// contractive, otherwise an exact polar factor via SVD. Throws on
// rank-deficient input.
Matrix orthonormalize(const Matrix& W, double tol = 1e-7, int max_iters = 50);

struct NetworkLayout {
    int input_dim = 0;
    int hidden_width = 20;
    int depth = 3;       // number of linear layers
    int group_size = 0;  // 0 = full sort (GroupSort only)
    bool with_biases = false;
};

/// Scalar-output feedforward network interface shared by the Lipschitz
/// network and the unconstrained baseline. Parameters are a flat vector:
/// all weight matrices in layer order, row-major, then biases if present.
class Network {
   public:
    virtual ~Network() = default;

    virtual double forward(const Vector& xi) const = 0;

    // d(output)/d(theta) by reverse accumulation at the current parameters.
    virtual Vector parameter_gradient(const Vector& xi) const = 0;

    // theta += delta; Lipschitz networks re-project every weight matrix.
    virtual void apply_update(const Vector& delta) = 0;

    // Output at theta + delta without touching stored parameters or
    // projecting; used by finite-difference checks.
    virtual double forward_perturbed(const Vector& xi, const Vector& delta) const = 0;

    virtual int parameter_count() const = 0;
    virtual int input_dim() const = 0;
    virtual const NetworkLayout& layout() const = 0;

    // True when the network carries an exact Lipschitz certificate.
    virtual bool lipschitz_certified() const = 0;
    virtual double lipschitz() const = 0;

    virtual std::unique_ptr<Network> clone() const = 0;
    virtual void save(std::ostream& out) const = 0;
};

/// GroupSort network with semi-orthogonal weights and exact output scaling:
///   T(xi) = L * W^M sort(W^{M-1} sort(... sort(W^1 xi + b^1)) + b^{M-1}) + L b^M.
/// Bias-free by default so T(0) = 0. The Lipschitz constant L is fixed at
/// construction and never learned; weights are re-projected after every
/// update so the certificate holds at all times.
class LipNet final : public Network {
   public:
    LipNet(NetworkLayout layout, double lipschitz, std::mt19937_64& rng);

    double forward(const Vector& xi) const override;
    Vector parameter_gradient(const Vector& xi) const override;
    void apply_update(const Vector& delta) override;
    double forward_perturbed(const Vector& xi, const Vector& delta) const override;
    int parameter_count() const override;
    int input_dim() const override { return layout_.input_dim; }
    const NetworkLayout& layout() const override { return layout_; }
    bool lipschitz_certified() const override { return true; }
    double lipschitz() const override { return lipschitz_; }
    std::unique_ptr<Network> clone() const override;
    void save(std::ostream& out) const override;

    const std::vector<Matrix>& weights() const { return weights_; }
    const std::vector<Vector>& biases() const { return biases_; }

    // Projection tolerance used for online maintenance; tighter than the
    // orthonormalize default so singular values stay within 1e-6 of 1.
    static constexpr double kProjectionTol = 1e-9;

   private:
    LipNet() = default;
    friend std::unique_ptr<Network> load_network(std::istream& in);

    NetworkLayout layout_;
    double lipschitz_ = 1.0;
    std::vector<Matrix> weights_;
    std::vector<Vector> biases_;  // empty unless layout_.with_biases
};

/// Conventional tanh network of the same shape, unconstrained weights,
/// plain additive updates. No Lipschitz certificate.
class BaselineNet final : public Network {
   public:
    BaselineNet(NetworkLayout layout, std::mt19937_64& rng);

    double forward(const Vector& xi) const override;
    Vector parameter_gradient(const Vector& xi) const override;
    void apply_update(const Vector& delta) override;
    double forward_perturbed(const Vector& xi, const Vector& delta) const override;
    int parameter_count() const override;
    int input_dim() const override { return layout_.input_dim; }
    const NetworkLayout& layout() const override { return layout_; }
    bool lipschitz_certified() const override { return false; }
    double lipschitz() const override { return std::numeric_limits<double>::infinity(); }
    std::unique_ptr<Network> clone() const override;
    void save(std::ostream& out) const override;

    const std::vector<Matrix>& weights() const { return weights_; }

   private:
    BaselineNet() = default;
    friend std::unique_ptr<Network> load_network(std::istream& in);

    NetworkLayout layout_;
    std::vector<Matrix> weights_;
    std::vector<Vector> biases_;
};

// Text snapshot round-trip (CSV of layer shapes + row-major entries).
std::unique_ptr<Network> load_network(std::istream& in);

}  // namespace lipmrac
