#include "lipmrac/lipnet.hpp"

#include "lipmrac/random.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace lipmrac {

namespace {

void check_group_size(int length, int group_size) {
    if (group_size < 0 || (group_size > 0 && length % group_size != 0)) {
        throw std::invalid_argument("group_sort: length " + std::to_string(length) +
                                    " not divisible by group size " + std::to_string(group_size));
    }
}

// Stable sort permutation per group, ties broken by original index. The
// recorded permutation is what gradients are routed through.
std::vector<int> group_sort_permutation(const Vector& v, int group_size) {
    const int n = static_cast<int>(v.size());
    check_group_size(n, group_size);
    const int gs = group_size == 0 ? n : group_size;
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    for (int start = 0; start < n; start += gs) {
        std::stable_sort(perm.begin() + start, perm.begin() + start + gs,
                         [&v](int a, int b) { return v[a] < v[b]; });
    }
    return perm;
}

Vector apply_permutation(const Vector& v, const std::vector<int>& perm) {
    Vector out(v.size());
    for (int i = 0; i < v.size(); ++i) {
        out[i] = v[perm[i]];
    }
    return out;
}

std::vector<Matrix> initial_shapes(const NetworkLayout& layout) {
    if (layout.input_dim < 1 || layout.depth < 1 || layout.hidden_width < 1) {
        throw std::invalid_argument("network layout: input_dim, depth and width must be >= 1");
    }
    if (layout.depth >= 2) {
        check_group_size(layout.hidden_width, layout.group_size);
    }
    std::vector<Matrix> weights;
    weights.reserve(static_cast<std::size_t>(layout.depth));
    if (layout.depth == 1) {
        weights.emplace_back(1, layout.input_dim);
        return weights;
    }
    weights.emplace_back(layout.hidden_width, layout.input_dim);
    for (int l = 1; l < layout.depth - 1; ++l) {
        weights.emplace_back(layout.hidden_width, layout.hidden_width);
    }
    weights.emplace_back(1, layout.hidden_width);
    return weights;
}

void fill_standard_normal(Matrix& m, std::mt19937_64& rng) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            m(r, c) = standard_normal(rng);
        }
    }
}

int total_parameters(const std::vector<Matrix>& weights, const std::vector<Vector>& biases) {
    int count = 0;
    for (const Matrix& w : weights) {
        count += static_cast<int>(w.size());
    }
    for (const Vector& b : biases) {
        count += static_cast<int>(b.size());
    }
    return count;
}

// Slices a flat row-major parameter vector back into weight/bias deltas.
struct ParamView {
    std::vector<Matrix> dw;
    std::vector<Vector> db;
};

ParamView split_parameters(const Vector& flat, const std::vector<Matrix>& weights,
                           const std::vector<Vector>& biases) {
    ParamView view;
    int pos = 0;
    for (const Matrix& w : weights) {
        Matrix d(w.rows(), w.cols());
        for (Eigen::Index r = 0; r < w.rows(); ++r) {
            for (Eigen::Index c = 0; c < w.cols(); ++c) {
                d(r, c) = flat[pos++];
            }
        }
        view.dw.push_back(std::move(d));
    }
    for (const Vector& b : biases) {
        view.db.push_back(flat.segment(pos, b.size()));
        pos += static_cast<int>(b.size());
    }
    if (pos != flat.size()) {
        throw std::invalid_argument("parameter vector has wrong length");
    }
    return view;
}

void flatten_into(const Matrix& m, Vector& flat, int& pos) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            flat[pos++] = m(r, c);
        }
    }
}

enum class Act { Sort, Tanh };

double net_forward(const std::vector<Matrix>& weights, const std::vector<Vector>& biases,
                   const Vector& xi, Act act, int group_size, double out_scale) {
    Vector z = xi;
    const int depth = static_cast<int>(weights.size());
    for (int l = 0; l < depth - 1; ++l) {
        Vector a = weights[l] * z;
        if (!biases.empty()) {
            a += biases[l];
        }
        if (act == Act::Sort) {
            z = apply_permutation(a, group_sort_permutation(a, group_size));
        } else {
            z = a.array().tanh();
        }
    }
    Vector out = weights[depth - 1] * z;
    if (!biases.empty()) {
        out += biases[depth - 1];
    }
    return out_scale * out[0];
}

Vector net_gradient(const std::vector<Matrix>& weights, const std::vector<Vector>& biases,
                    const Vector& xi, Act act, int group_size, double out_scale) {
    const int depth = static_cast<int>(weights.size());
    std::vector<Vector> acts(static_cast<std::size_t>(depth));  // layer inputs z_0..z_{M-1}
    std::vector<std::vector<int>> perms(static_cast<std::size_t>(depth - 1));

    Vector z = xi;
    for (int l = 0; l < depth - 1; ++l) {
        acts[static_cast<std::size_t>(l)] = z;
        Vector a = weights[l] * z;
        if (!biases.empty()) {
            a += biases[l];
        }
        if (act == Act::Sort) {
            perms[static_cast<std::size_t>(l)] = group_sort_permutation(a, group_size);
            z = apply_permutation(a, perms[static_cast<std::size_t>(l)]);
        } else {
            z = a.array().tanh();
        }
    }
    acts[static_cast<std::size_t>(depth - 1)] = z;

    std::vector<Matrix> grad_w(static_cast<std::size_t>(depth));
    std::vector<Vector> grad_b;
    if (!biases.empty()) {
        grad_b.resize(static_cast<std::size_t>(depth));
    }

    // d(output)/d(final preactivation) = out_scale
    grad_w[static_cast<std::size_t>(depth - 1)] =
        out_scale * acts[static_cast<std::size_t>(depth - 1)].transpose();
    if (!biases.empty()) {
        grad_b[static_cast<std::size_t>(depth - 1)] = Vector::Constant(1, out_scale);
    }
    Vector gz = out_scale * weights[depth - 1].transpose().col(0);

    for (int l = depth - 2; l >= 0; --l) {
        Vector ga(gz.size());
        if (act == Act::Sort) {
            const std::vector<int>& perm = perms[static_cast<std::size_t>(l)];
            for (int i = 0; i < gz.size(); ++i) {
                ga[perm[static_cast<std::size_t>(i)]] = gz[i];
            }
        } else {
            // z = tanh(a), dz/da = 1 - z^2; recompute z from the next input
            const Vector& znext = acts[static_cast<std::size_t>(l + 1)];
            ga = gz.array() * (1.0 - znext.array().square());
        }
        grad_w[static_cast<std::size_t>(l)] = ga * acts[static_cast<std::size_t>(l)].transpose();
        if (!biases.empty()) {
            grad_b[static_cast<std::size_t>(l)] = ga;
        }
        if (l > 0) {
            gz = weights[l].transpose() * ga;
        }
    }

    Vector flat(total_parameters(weights, biases));
    int pos = 0;
    for (const Matrix& gw : grad_w) {
        flatten_into(gw, flat, pos);
    }
    for (const Vector& gb : grad_b) {
        flat.segment(pos, gb.size()) = gb;
        pos += static_cast<int>(gb.size());
    }
    return flat;
}

void check_input(const Vector& xi, int expected) {
    if (xi.size() != expected) {
        throw std::invalid_argument("network input has " + std::to_string(xi.size()) +
                                    " entries, expected " + std::to_string(expected));
    }
}

void save_matrix_rows(std::ostream& out, const Matrix& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            out << (c == 0 ? "" : ",") << m(r, c);
        }
        out << "\n";
    }
}

}  // namespace

Vector group_sort(const Vector& v, int group_size) {
    return apply_permutation(v, group_sort_permutation(v, group_size));
}

Matrix orthonormalize(const Matrix& W, double tol, int max_iters) {
    if (!W.allFinite()) {
        throw std::invalid_argument("orthonormalize: non-finite weight matrix");
    }
    if (tol <= 0.0) {
        throw std::invalid_argument("orthonormalize: tol must be > 0");
    }
    const bool tall = W.rows() >= W.cols();
    const Eigen::Index n = tall ? W.cols() : W.rows();
    const Matrix identity = Matrix::Identity(n, n);

    Matrix m = W;
    for (int it = 0; it < max_iters; ++it) {
        const Matrix gram = tall ? Matrix(m.transpose() * m) : Matrix(m * m.transpose());
        const Matrix residual = gram - identity;
        const double err = residual.cwiseAbs().maxCoeff();
        if (err < tol) {
            return m;
        }
        // The iteration only contracts while every singular value is below
        // sqrt(3); outside that ball it can flip signs, so go straight to
        // the exact polar factor.
        if (!std::isfinite(err) || residual.norm() >= 2.0) {
            break;
        }
        if (tall) {
            m = m + 0.5 * (m - m * gram);
        } else {
            m = m + 0.5 * (m - gram * m);
        }
    }

    Eigen::JacobiSVD<Matrix> svd(W, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.singularValues().minCoeff() < 1e-12) {
        throw std::runtime_error("orthonormalize: non-projectable weight matrix (rank-deficient)");
    }
    return svd.matrixU() * svd.matrixV().transpose();
}

LipNet::LipNet(NetworkLayout layout, double lipschitz, std::mt19937_64& rng)
    : layout_(layout), lipschitz_(lipschitz) {
    if (!(lipschitz > 0.0)) {
        throw std::invalid_argument("LipNet: Lipschitz constant must be > 0");
    }
    weights_ = initial_shapes(layout_);
    for (Matrix& w : weights_) {
        fill_standard_normal(w, rng);
        w = orthonormalize(w, kProjectionTol);
    }
    if (layout_.with_biases) {
        for (const Matrix& w : weights_) {
            biases_.emplace_back(Vector::Zero(w.rows()));
        }
    }
}

double LipNet::forward(const Vector& xi) const {
    check_input(xi, layout_.input_dim);
    return net_forward(weights_, biases_, xi, Act::Sort, layout_.group_size, lipschitz_);
}

Vector LipNet::parameter_gradient(const Vector& xi) const {
    check_input(xi, layout_.input_dim);
    return net_gradient(weights_, biases_, xi, Act::Sort, layout_.group_size, lipschitz_);
}

void LipNet::apply_update(const Vector& delta) {
    if (!delta.allFinite()) {
        throw std::invalid_argument("LipNet::apply_update: non-finite update");
    }
    const ParamView view = split_parameters(delta, weights_, biases_);
    for (std::size_t i = 0; i < weights_.size(); ++i) {
        weights_[i] += view.dw[i];
        weights_[i] = orthonormalize(weights_[i], kProjectionTol);
    }
    for (std::size_t i = 0; i < biases_.size(); ++i) {
        biases_[i] += view.db[i];
    }
}

double LipNet::forward_perturbed(const Vector& xi, const Vector& delta) const {
    const ParamView view = split_parameters(delta, weights_, biases_);
    std::vector<Matrix> w = weights_;
    std::vector<Vector> b = biases_;
    for (std::size_t i = 0; i < w.size(); ++i) {
        w[i] += view.dw[i];
    }
    for (std::size_t i = 0; i < b.size(); ++i) {
        b[i] += view.db[i];
    }
    return net_forward(w, b, xi, Act::Sort, layout_.group_size, lipschitz_);
}

int LipNet::parameter_count() const { return total_parameters(weights_, biases_); }

std::unique_ptr<Network> LipNet::clone() const { return std::make_unique<LipNet>(*this); }

void LipNet::save(std::ostream& out) const {
    out << std::setprecision(17);
    out << "net,lipnet," << layout_.depth << "," << layout_.input_dim << ","
        << layout_.hidden_width << "," << layout_.group_size << "," << (layout_.with_biases ? 1 : 0)
        << "," << lipschitz_ << "\n";
    for (const Matrix& w : weights_) {
        out << "W," << w.rows() << "," << w.cols() << "\n";
        save_matrix_rows(out, w);
    }
    for (const Vector& b : biases_) {
        out << "b," << b.size() << "\n";
        save_matrix_rows(out, b.transpose());
    }
}

BaselineNet::BaselineNet(NetworkLayout layout, std::mt19937_64& rng) : layout_(layout) {
    weights_ = initial_shapes(layout_);
    for (Matrix& w : weights_) {
        fill_standard_normal(w, rng);
    }
    if (layout_.with_biases) {
        for (const Matrix& w : weights_) {
            biases_.emplace_back(Vector::Zero(w.rows()));
        }
    }
}

double BaselineNet::forward(const Vector& xi) const {
    check_input(xi, layout_.input_dim);
    return net_forward(weights_, biases_, xi, Act::Tanh, 0, 1.0);
}

Vector BaselineNet::parameter_gradient(const Vector& xi) const {
    check_input(xi, layout_.input_dim);
    return net_gradient(weights_, biases_, xi, Act::Tanh, 0, 1.0);
}

void BaselineNet::apply_update(const Vector& delta) {
    if (!delta.allFinite()) {
        throw std::invalid_argument("BaselineNet::apply_update: non-finite update");
    }
    const ParamView view = split_parameters(delta, weights_, biases_);
    for (std::size_t i = 0; i < weights_.size(); ++i) {
        weights_[i] += view.dw[i];
    }
    for (std::size_t i = 0; i < biases_.size(); ++i) {
        biases_[i] += view.db[i];
    }
}

double BaselineNet::forward_perturbed(const Vector& xi, const Vector& delta) const {
    const ParamView view = split_parameters(delta, weights_, biases_);
    std::vector<Matrix> w = weights_;
    std::vector<Vector> b = biases_;
    for (std::size_t i = 0; i < w.size(); ++i) {
        w[i] += view.dw[i];
    }
    for (std::size_t i = 0; i < b.size(); ++i) {
        b[i] += view.db[i];
    }
    return net_forward(w, b, xi, Act::Tanh, 0, 1.0);
}

int BaselineNet::parameter_count() const { return total_parameters(weights_, biases_); }

std::unique_ptr<Network> BaselineNet::clone() const { return std::make_unique<BaselineNet>(*this); }

void BaselineNet::save(std::ostream& out) const {
    out << std::setprecision(17);
    out << "net,baseline," << layout_.depth << "," << layout_.input_dim << ","
        << layout_.hidden_width << "," << layout_.group_size << "," << (layout_.with_biases ? 1 : 0)
        << ",1\n";
    for (const Matrix& w : weights_) {
        out << "W," << w.rows() << "," << w.cols() << "\n";
        save_matrix_rows(out, w);
    }
    for (const Vector& b : biases_) {
        out << "b," << b.size() << "\n";
        save_matrix_rows(out, b.transpose());
    }
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::stringstream stream(line);
    std::string field;
    while (std::getline(stream, field, ',')) {
        fields.push_back(field);
    }
    return fields;
}

Matrix read_matrix(std::istream& in, Eigen::Index rows, Eigen::Index cols) {
    Matrix m(rows, cols);
    std::string line;
    for (Eigen::Index r = 0; r < rows; ++r) {
        if (!std::getline(in, line)) {
            throw std::runtime_error("load_network: truncated matrix block");
        }
        const auto fields = split_csv(line);
        if (static_cast<Eigen::Index>(fields.size()) != cols) {
            throw std::runtime_error("load_network: matrix row has wrong width");
        }
        for (Eigen::Index c = 0; c < cols; ++c) {
            m(r, c) = std::stod(fields[static_cast<std::size_t>(c)]);
        }
    }
    return m;
}

}  // namespace

std::unique_ptr<Network> load_network(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
        throw std::runtime_error("load_network: empty stream");
    }
    const auto header = split_csv(line);
    if (header.size() != 8 || header[0] != "net") {
        throw std::runtime_error("load_network: malformed header");
    }
    NetworkLayout layout;
    layout.depth = std::stoi(header[2]);
    layout.input_dim = std::stoi(header[3]);
    layout.hidden_width = std::stoi(header[4]);
    layout.group_size = std::stoi(header[5]);
    layout.with_biases = std::stoi(header[6]) != 0;
    const double lipschitz = std::stod(header[7]);

    std::vector<Matrix> weights;
    std::vector<Vector> biases;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        const auto fields = split_csv(line);
        if (fields[0] == "W" && fields.size() == 3) {
            weights.push_back(read_matrix(in, std::stoi(fields[1]), std::stoi(fields[2])));
        } else if (fields[0] == "b" && fields.size() == 2) {
            biases.push_back(read_matrix(in, 1, std::stoi(fields[1])).transpose());
        } else {
            throw std::runtime_error("load_network: unexpected block '" + line + "'");
        }
    }
    if (static_cast<int>(weights.size()) != layout.depth) {
        throw std::runtime_error("load_network: layer count mismatch");
    }

    if (header[1] == "lipnet") {
        auto net = std::unique_ptr<LipNet>(new LipNet());
        net->layout_ = layout;
        net->lipschitz_ = lipschitz;
        net->weights_ = std::move(weights);
        net->biases_ = std::move(biases);
        return net;
    }
    if (header[1] == "baseline") {
        auto net = std::unique_ptr<BaselineNet>(new BaselineNet());
        net->layout_ = layout;
        net->weights_ = std::move(weights);
        net->biases_ = std::move(biases);
        return net;
    }
    throw std::runtime_error("load_network: unknown network kind '" + header[1] + "'");
}

}  // namespace lipmrac
