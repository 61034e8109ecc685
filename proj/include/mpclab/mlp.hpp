#pragma once

#include "mpclab/prediction_noise.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace mpclab {

struct DenseLayer {
    Eigen::MatrixXd W;  // out x in
    Eigen::VectorXd b;  // out

    bool operator==(const DenseLayer& o) const { return W == o.W && b == o.b; }
};

/// Fully connected network with ReLU on hidden layers and an affine output
/// layer. Inputs are batched as columns.
class Mlp {
public:
    static inline const std::vector<int> kDefaultSizes{1, 256, 256, kFlatStageSize};

    /// Zero-initialized network with the given layer sizes (input first).
    explicit Mlp(std::vector<int> sizes = kDefaultSizes);

    /// Uniform fan-in initialization U(-1/sqrt(fan_in), 1/sqrt(fan_in)) for
    /// weights and biases, drawn layer by layer (W row-major, then b) from the
    /// "nn-init" substream of init_seed.
    static Mlp initialized(std::vector<int> sizes, std::uint64_t init_seed);

    const std::vector<int>& sizes() const { return sizes_; }
    std::vector<DenseLayer>& layers() { return layers_; }
    const std::vector<DenseLayer>& layers() const { return layers_; }
    Eigen::Index parameter_count() const;

    Eigen::VectorXd forward(double t_tilde) const;
    Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& inputs) const;

    bool operator==(const Mlp& o) const { return sizes_ == o.sizes_ && layers_ == o.layers_; }

private:
    std::vector<int> sizes_;
    std::vector<DenseLayer> layers_;
};

/// Mean squared error over every output entry of the batch. When `grad` is
/// non-null it receives dLoss/dparams with the same shapes as the layers.
double mse_loss(const Mlp& net, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                std::vector<DenseLayer>* grad = nullptr);

/// Adam with bias correction.
class AdamOptimizer {
public:
    AdamOptimizer(const Mlp& net, double learning_rate, double beta1 = 0.9,
                  double beta2 = 0.999, double eps = 1e-8);
    void step(Mlp& net, const std::vector<DenseLayer>& grad);

private:
    double lr_, beta1_, beta2_, eps_;
    long t_ = 0;
    std::vector<DenseLayer> m_, v_;
};

struct TrainConfig {
    long total_steps = 50000;
    std::vector<long> checkpoint_steps{10,   20,   50,    100,   200,   500,   1000,
                                       2000, 5000, 10000, 20000, 30000, 40000, 50000};
    double learning_rate = 1e-3;
    std::uint64_t init_seed = 0;
    std::vector<int> layer_sizes = Mlp::kDefaultSizes;

    void validate() const;
};

struct Checkpoint {
    long step = 0;
    Mlp net;
    double mean_error = 0.0;  // mean over t of ||forward(t*dt) - target_t||_2
    double loss = 0.0;        // training MSE at this step
};

struct TrainResult {
    double initial_loss = 0.0;
    double initial_mean_error = 0.0;
    std::vector<Checkpoint> checkpoints;
};

/// Inputs t*dt (1 x T) and flattened stage targets (20 x T).
struct TrainingSet {
    Eigen::MatrixXd inputs;
    Eigen::MatrixXd targets;
};
TrainingSet make_training_set(const GroundTruth& truth);

double mean_prediction_error(const Mlp& net, const TrainingSet& data);

/// Full-batch Adam on the MSE loss. Throws NonFiniteLoss on divergence.
TrainResult train(const GroundTruth& truth, const TrainConfig& cfg);

using StagePredictor = std::function<Eigen::VectorXd(double t_tilde)>;

/// Stages from predictor(t*dt) for t < T; the terminal cost takes the Q and
/// xbar blocks of predictor(T*dt).
PredictedData predict_problem_data(const StagePredictor& predictor, const SystemSpec& spec);
PredictedData predict_problem_data(const Mlp& net, const SystemSpec& spec);

} // namespace mpclab
