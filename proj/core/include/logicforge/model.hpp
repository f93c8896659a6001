#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "logicforge/dataset.hpp"

namespace logicforge::model {

struct ModelConfig {
  int vocab_size = 0;
  int d_model = 64;
  int n_layers = 2;
  int n_heads = 4;
  int context_window = 128;
  std::uint64_t seed = 0;

  void validate() const;  // throws InvalidConfig

  bool operator==(const ModelConfig&) const = default;
};

struct LayerParams {
  Eigen::VectorXd ln1_scale, ln1_bias;
  Eigen::MatrixXd wq, wk, wv, wo;  // [d, d]
  Eigen::VectorXd ln2_scale, ln2_bias;
  Eigen::MatrixXd w1;  // [d, 4d]
  Eigen::VectorXd b1;  // [4d]
  Eigen::MatrixXd w2;  // [4d, d]
  Eigen::VectorXd b2;  // [d]
};

// Pre-norm decoder with learned positions, untied head, all doubles.
struct ModelParams {
  ModelConfig config;
  Eigen::MatrixXd token_emb;  // [V, d]
  Eigen::MatrixXd pos_emb;    // [T, d]
  std::vector<LayerParams> layers;
  Eigen::VectorXd final_scale, final_bias;
  Eigen::MatrixXd w_head;  // [d, V]
  Eigen::VectorXd b_head;  // [V]
};

// Weights ~ Normal(0, 0.02), biases 0, norm scales 1; draws are seeded and
// consumed in checkpoint order, so init is a pure function of the config.
ModelParams init_params(const ModelConfig& config);
ModelParams zeros_like(const ModelParams& params);

// Flat view over every parameter array in checkpoint order. Buffers are
// column-major Eigen storage.
struct ParamView {
  std::string name;
  double* data;
  std::size_t size;
};
std::vector<ParamView> param_views(ModelParams& params);

struct LayerCache {
  Eigen::MatrixXd x_in;
  Eigen::MatrixXd xhat1;  // ln1 normalized input
  Eigen::VectorXd rstd1;
  Eigen::MatrixXd q, k, v;
  std::vector<Eigen::MatrixXd> probs;  // per head [L, L]
  Eigen::MatrixXd ctx;
  Eigen::MatrixXd x_mid;
  Eigen::MatrixXd xhat2;  // ln2 normalized input
  Eigen::VectorXd rstd2;
  Eigen::MatrixXd m1;  // MLP pre-activation
  Eigen::MatrixXd g;   // gelu(m1)
};

struct Forward {
  Eigen::MatrixXd logits;  // [L, V]
  Eigen::MatrixXd hidden;  // [L, d], after the final norm
  std::vector<LayerCache> layers;
  Eigen::MatrixXd x_final;
  Eigen::MatrixXd xhat_final;
  Eigen::VectorXd rstd_final;
};

// Causal; throws SequenceTooLong past the context window and InvalidConfig on
// out-of-range token ids.
Forward forward(const ModelParams& params, const std::vector<int>& tokens);

// Accumulates into grads (shapes must match params).
void backward(const ModelParams& params, const std::vector<int>& tokens, const Forward& fwd,
              const Eigen::MatrixXd& dlogits, ModelParams& grads);

// Sum of -log P(tokens[t] | tokens[<t]) over positions with mask[t] == 1.
// mask[0] must be 0. When grads is non-null the cross-entropy gradient scaled
// by grad_scale is accumulated.
double sequence_nll(const ModelParams& params, const std::vector<int>& tokens,
                    const std::vector<uint8_t>& mask, ModelParams* grads, double grad_scale);

// Mean NLL over every masked position of the batch (rows use their real
// lengths; padding is never read). Throws AllMaskedOut when nothing is masked.
double loss_and_grads(const ModelParams& params, const dataset::Batch& batch,
                      ModelParams* grads);

struct AdamState {
  long t = 0;
  ModelParams m, v;
  bool initialized = false;
};

void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state, double lr,
               double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

// Layout: 8-byte magic "LOGF0001", little-endian u64 JSON config length, the
// config bytes, then each parameter array as raw little-endian doubles in
// param_views order.
void save_checkpoint(const ModelParams& params, const std::filesystem::path& path);
ModelParams load_checkpoint(const std::filesystem::path& path);
ModelParams load_checkpoint(const std::filesystem::path& path, const ModelConfig& expected);

}  // namespace logicforge::model
