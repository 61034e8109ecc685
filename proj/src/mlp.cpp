#include "mpclab/mlp.hpp"

#include "mpclab/seed.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mpclab {

Mlp::Mlp(std::vector<int> sizes) : sizes_(std::move(sizes)) {
    if (sizes_.size() < 2) throw std::invalid_argument("Mlp needs at least input and output sizes");
    for (int s : sizes_)
        if (s < 1) throw std::invalid_argument("Mlp layer sizes must be positive");
    for (std::size_t i = 0; i + 1 < sizes_.size(); ++i)
        layers_.push_back({Eigen::MatrixXd::Zero(sizes_[i + 1], sizes_[i]),
                           Eigen::VectorXd::Zero(sizes_[i + 1])});
}

Mlp Mlp::initialized(std::vector<int> sizes, std::uint64_t init_seed) {
    Mlp net(std::move(sizes));
    Rng rng = make_rng(init_seed, "nn-init");
    for (DenseLayer& layer : net.layers_) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(layer.W.cols()));
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (Eigen::Index r = 0; r < layer.W.rows(); ++r)
            for (Eigen::Index c = 0; c < layer.W.cols(); ++c) layer.W(r, c) = dist(rng);
        for (Eigen::Index r = 0; r < layer.b.size(); ++r) layer.b[r] = dist(rng);
    }
    return net;
}

Eigen::Index Mlp::parameter_count() const {
    Eigen::Index n = 0;
    for (const DenseLayer& l : layers_) n += l.W.size() + l.b.size();
    return n;
}

Eigen::MatrixXd Mlp::forward_batch(const Eigen::MatrixXd& inputs) const {
    if (inputs.rows() != sizes_.front())
        throw DimensionMismatch("Mlp input has " + std::to_string(inputs.rows()) +
                                " rows, expected " + std::to_string(sizes_.front()));
    Eigen::MatrixXd a = inputs;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        Eigen::MatrixXd z = layers_[i].W * a;
        z.colwise() += layers_[i].b;
        if (i + 1 < layers_.size()) z = z.cwiseMax(0.0);
        a = std::move(z);
    }
    return a;
}

Eigen::VectorXd Mlp::forward(double t_tilde) const {
    Eigen::MatrixXd in(1, 1);
    in(0, 0) = t_tilde;
    return forward_batch(in).col(0);
}

double mse_loss(const Mlp& net, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                std::vector<DenseLayer>* grad) {
    const auto& layers = net.layers();
    const std::size_t L = layers.size();
    if (inputs.rows() != net.sizes().front() || targets.rows() != net.sizes().back() ||
        inputs.cols() != targets.cols())
        throw DimensionMismatch("mse_loss: batch shapes do not match the network");

    // activations[0] = inputs, activations[i] = output of layer i-1
    std::vector<Eigen::MatrixXd> activations;
    activations.reserve(L + 1);
    activations.push_back(inputs);
    for (std::size_t i = 0; i < L; ++i) {
        Eigen::MatrixXd z = layers[i].W * activations.back();
        z.colwise() += layers[i].b;
        if (i + 1 < L) z = z.cwiseMax(0.0);
        activations.push_back(std::move(z));
    }
    const Eigen::MatrixXd diff = activations.back() - targets;
    const double count = static_cast<double>(diff.size());
    const double loss = diff.squaredNorm() / count;
    if (!grad) return loss;

    grad->resize(L);
    Eigen::MatrixXd delta = (2.0 / count) * diff;
    for (std::size_t i = L; i-- > 0;) {
        (*grad)[i].W.noalias() = delta * activations[i].transpose();
        (*grad)[i].b = delta.rowwise().sum();
        if (i == 0) break;
        Eigen::MatrixXd back = layers[i].W.transpose() * delta;
        // activations[i] is a ReLU output; its derivative is 1 where positive
        delta = back.cwiseProduct((activations[i].array() > 0.0).cast<double>().matrix());
    }
    return loss;
}

AdamOptimizer::AdamOptimizer(const Mlp& net, double learning_rate, double beta1, double beta2,
                             double eps)
    : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (const DenseLayer& l : net.layers()) {
        m_.push_back({Eigen::MatrixXd::Zero(l.W.rows(), l.W.cols()), Eigen::VectorXd::Zero(l.b.size())});
        v_.push_back(m_.back());
    }
}

void AdamOptimizer::step(Mlp& net, const std::vector<DenseLayer>& grad) {
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    const double step = lr_ / c1;
    const double sqrt_c2 = std::sqrt(c2);
    auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
        m = beta1_ * m + (1.0 - beta1_) * g;
        v = beta2_ * v + (1.0 - beta2_) * g.cwiseAbs2();
        param.array() -= step * m.array() / (v.array().sqrt() / sqrt_c2 + eps_);
    };
    auto& layers = net.layers();
    for (std::size_t i = 0; i < layers.size(); ++i) {
        update(layers[i].W, m_[i].W, v_[i].W, grad[i].W);
        update(layers[i].b, m_[i].b, v_[i].b, grad[i].b);
    }
}

void TrainConfig::validate() const {
    if (total_steps < 1) throw std::invalid_argument("total_steps must be >= 1");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
    if (checkpoint_steps.empty()) throw std::invalid_argument("checkpoint_steps must be non-empty");
    for (std::size_t i = 0; i < checkpoint_steps.size(); ++i) {
        if (checkpoint_steps[i] < 1)
            throw std::invalid_argument("checkpoint steps must be >= 1");
        if (i > 0 && checkpoint_steps[i] <= checkpoint_steps[i - 1])
            throw std::invalid_argument("checkpoint_steps must be strictly increasing");
    }
    if (checkpoint_steps.back() != total_steps)
        throw std::invalid_argument("last checkpoint must equal total_steps");
    if (layer_sizes.size() < 2 || layer_sizes.front() != 1 || layer_sizes.back() != kFlatStageSize)
        throw std::invalid_argument("layer sizes must map 1 input to 20 outputs");
}

TrainingSet make_training_set(const GroundTruth& truth) {
    const auto T = static_cast<Eigen::Index>(truth.stages.size());
    TrainingSet set{Eigen::MatrixXd(1, T), Eigen::MatrixXd(kFlatStageSize, T)};
    for (Eigen::Index t = 0; t < T; ++t) {
        set.inputs(0, t) = static_cast<double>(t) * truth.spec.dt;
        set.targets.col(t) = flatten_stage(truth.stages[static_cast<std::size_t>(t)]);
    }
    return set;
}

double mean_prediction_error(const Mlp& net, const TrainingSet& data) {
    const Eigen::MatrixXd out = net.forward_batch(data.inputs);
    return (out - data.targets).colwise().norm().mean();
}

TrainResult train(const GroundTruth& truth, const TrainConfig& cfg) {
    cfg.validate();
    const TrainingSet data = make_training_set(truth);
    Mlp net = Mlp::initialized(cfg.layer_sizes, cfg.init_seed);
    AdamOptimizer adam(net, cfg.learning_rate);

    TrainResult result;
    result.initial_loss = mse_loss(net, data.inputs, data.targets);
    result.initial_mean_error = mean_prediction_error(net, data);

    std::vector<DenseLayer> grad;
    auto next_ckpt = cfg.checkpoint_steps.begin();
    for (long step = 1; step <= cfg.total_steps; ++step) {
        const double loss = mse_loss(net, data.inputs, data.targets, &grad);
        if (!std::isfinite(loss)) throw NonFiniteLoss(step);
        adam.step(net, grad);
        if (next_ckpt != cfg.checkpoint_steps.end() && *next_ckpt == step) {
            const double after = mse_loss(net, data.inputs, data.targets);
            if (!std::isfinite(after)) throw NonFiniteLoss(step);
            result.checkpoints.push_back({step, net, mean_prediction_error(net, data), after});
            ++next_ckpt;
        }
    }
    return result;
}

PredictedData predict_problem_data(const StagePredictor& predictor, const SystemSpec& spec) {
    spec.validate();
    PredictedData pred;
    pred.epsilon = std::numeric_limits<double>::quiet_NaN();
    pred.setting = std::nullopt;
    pred.stages.reserve(static_cast<std::size_t>(spec.T));
    for (int t = 0; t < spec.T; ++t) pred.stages.push_back(unflatten_stage(predictor(t * spec.dt)));
    const StageData terminal = unflatten_stage(predictor(spec.T * spec.dt));
    pred.P_terminal = terminal.Q;
    pred.xbar_terminal = terminal.xbar;
    return pred;
}

PredictedData predict_problem_data(const Mlp& net, const SystemSpec& spec) {
    if (net.sizes().front() != 1 || net.sizes().back() != kFlatStageSize)
        throw DimensionMismatch("predictor network must map 1 input to 20 outputs");
    return predict_problem_data([&net](double t_tilde) { return net.forward(t_tilde); }, spec);
}

} // namespace mpclab
